"""Codeword-error-rate measurement over quasi-static Rayleigh channels.

Trials are organized in fixed-size batches.  Batch b of grid point p
draws all of its randomness from the substream keyed by (master seed,
p, b), and early stopping is decided on batch boundaries by folding
batch results in index order, so the executed trial set and the error
counts are bit-identical for any worker count.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from functools import lru_cache
from statistics import NormalDist

import numpy as np

from . import channel as ch
from .constellation import make_qam
from .decoder import (DetectionProblem, EXHAUSTIVE_SEARCH_CAP,
                      ml_decode_exhaustive, sphere_decode)
from .designs import effective_channel, get_design, normalize, real_vec
from .errors import BudgetError
from .fixedpoint import quantized_encode_coords
from .metrics import code_papr

VECTORIZED_CANDIDATE_CAP = 4096

SIM_CSV_HEADER = ["snr_db", "axis", "trials", "errors", "cer", "ci_low", "ci_high"]


@dataclass(frozen=True)
class SimConfig:
    """Everything that determines a CER run (results depend on nothing else)."""

    code: str
    n: int
    m: int
    snr_db: tuple
    axis: str = "snr"
    decoder: str = "sphere"
    encoder: str = "exact"
    master_seed: int = 0
    max_trials: int = 1_000_000
    target_errors: int = 100
    confidence: float = 0.95
    batch_size: int = 4096

    def __post_init__(self):
        grid = tuple(float(s) for s in self.snr_db)
        object.__setattr__(self, "snr_db", grid)
        if len(grid) == 0 or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("snr grid must be non-empty and strictly increasing")
        if self.axis not in ("snr", "psnr"):
            raise ValueError(f"axis must be 'snr' or 'psnr', got {self.axis!r}")
        if self.decoder not in ("exhaustive", "sphere"):
            raise ValueError(f"decoder must be 'exhaustive' or 'sphere', got {self.decoder!r}")
        self.encoder_q  # validates the encoder string
        if self.max_trials < 1 or self.target_errors < 1 or self.batch_size < 1:
            raise ValueError("max_trials, target_errors, and batch_size must be positive")
        if not 0.0 < self.confidence < 1.0:
            raise ValueError(f"confidence must be in (0, 1), got {self.confidence}")

    @property
    def encoder_q(self) -> int | None:
        if self.encoder == "exact":
            return None
        if self.encoder.startswith("q="):
            q = int(self.encoder[2:])
            if q < 2:
                raise ValueError(f"quantized encoder needs q >= 2, got {q}")
            return q
        raise ValueError(f"encoder must be 'exact' or 'q=<bits>', got {self.encoder!r}")


@dataclass(frozen=True)
class PointRecord:
    snr_db: float
    axis: str
    trials: int
    errors: int
    cer: float
    ci_low: float
    ci_high: float


@dataclass(frozen=True)
class SimResult:
    config: SimConfig
    eta: float
    points: tuple

    def to_json_dict(self) -> dict:
        return {
            "config": asdict(self.config),
            "eta": self.eta,
            "points": [asdict(p) for p in self.points],
        }

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(SIM_CSV_HEADER)
            for p in self.points:
                w.writerow([repr(p.snr_db), p.axis, p.trials, p.errors,
                            repr(p.cer), repr(p.ci_low), repr(p.ci_high)])

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def wilson_interval(errors: int, trials: int, confidence: float) -> tuple[float, float]:
    """Wilson-score confidence interval for a binomial proportion."""
    if trials < 1:
        raise ValueError("need at least one trial")
    z = NormalDist().inv_cdf(0.5 + confidence / 2.0)
    p = errors / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1.0 - p) / trials + z * z / (4.0 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


# ---------------------------------------------------------------------------
# Per-process simulation context
# ---------------------------------------------------------------------------


@lru_cache(maxsize=16)
def _context(code: str, n: int, m: int):
    design = get_design(code, n, m)
    constellation = make_qam(m)
    c = normalize(design, constellation)
    levels = constellation.levels.astype(np.float64)
    return design, constellation, c, levels


@lru_cache(maxsize=16)
def _candidate_tables(code: str, n: int, m: int):
    """Lexicographic candidate tables for the vectorized ML path."""
    design, constellation, c, levels = _context(code, n, m)
    k = design.k_real
    count = levels.size ** k
    if count > VECTORIZED_CANDIDATE_CAP:
        return None
    grids = np.meshgrid(*([levels] * k), indexing="ij")
    coords = np.stack([g.ravel() for g in grids], axis=1)   # lexicographic
    Xc = c * design.encode_real(coords)                     # (C, n, n)
    xvec = Xc.reshape(count, -1)
    x_table = np.concatenate([xvec.real, xvec.imag], axis=1).T       # (2n^2, C)
    Sc = np.einsum("cjk,clk->cjl", Xc, Xc.conj())                    # Xc Xc^H
    svec = Sc.reshape(count, -1)
    s_table = np.concatenate([svec.real, svec.imag], axis=1).T       # (2n^2, C)
    return coords, x_table, s_table


def _true_indices(labels: np.ndarray, constellation, design) -> np.ndarray:
    """Candidate index of each drawn symbol vector in lexicographic order."""
    pts = constellation.points[labels]                       # (B, n_sym)
    top = int(constellation.levels[-1])
    base = constellation.levels.size
    re_idx = ((pts.real + top) / 2).astype(np.int64)
    im_idx = ((pts.imag + top) / 2).astype(np.int64)
    B = labels.shape[0]
    idx = np.zeros(B, dtype=np.int64)
    for t in range(design.n_symbols):
        idx = idx * base + re_idx[:, t]
        idx = idx * base + im_idx[:, t]
    return idx


def _encode_batch(design, constellation, coords, q: int | None) -> np.ndarray:
    if q is None:
        return design.encode_real(coords)
    return quantized_encode_coords(design, constellation, coords, q)


def _batch_errors(cfg: SimConfig, point_idx: int, batch_idx: int,
                  size: int, sigma2: float) -> int:
    """Error count of one batch; the only randomness is the batch substream."""
    design, constellation, c, levels = _context(cfg.code, cfg.n, cfg.m)
    n = design.n
    rng = ch.substream(cfg.master_seed, point_idx, batch_idx)
    labels = rng.integers(0, constellation.size, size=(size, design.n_symbols))
    H = ch.complex_normal(rng, (size, n, n))
    Z = ch.complex_normal(rng, (size, n, n), sigma2) if sigma2 > 0 else 0.0

    pts = constellation.points[labels]
    coords = np.empty((size, design.k_real))
    coords[:, 0::2] = pts.real
    coords[:, 1::2] = pts.imag
    X = c * _encode_batch(design, constellation, coords, cfg.encoder_q)
    Hs = math.sqrt(1.0 / n) * H
    Y = Hs @ X + Z

    tables = _candidate_tables(cfg.code, cfg.n, cfg.m) if cfg.decoder == "exhaustive" else None
    if tables is not None:
        cand_coords, x_table, s_table = tables
        # ||Y - Hs Xc||^2 = ||Y||^2 - 2 Re<Hs^H Y, Xc> + <Hs^H Hs, Xc Xc^H>;
        # the constant ||Y||^2 drops out of the argmin.
        Hc = Hs.conj()
        W = np.einsum("tji,tjk->tik", Hc, Y).reshape(size, -1)
        G = np.einsum("tji,tjk->tik", Hc, Hs).reshape(size, -1)
        w_re = np.concatenate([W.real, W.imag], axis=1)
        g_re = np.concatenate([G.real, G.imag], axis=1)
        metric = g_re @ s_table - 2.0 * (w_re @ x_table)
        decided = np.argmin(metric, axis=1)
        truth = _true_indices(labels, constellation, design)
        return int(np.count_nonzero(decided != truth))

    # Per-trial decoding path (sphere, or exhaustive beyond the table cap).
    errors = 0
    alphabet = c * levels
    for t in range(size):
        eff = effective_channel(design, H[t])
        problem = DetectionProblem(effective=eff, received=real_vec(Y[t]),
                                   alphabet=alphabet)
        if cfg.decoder == "sphere":
            decoded = sphere_decode(problem)
        else:
            decoded = ml_decode_exhaustive(problem)
        if not np.array_equal(decoded, c * coords[t]):
            errors += 1
    return errors


def _point_sigma(cfg: SimConfig, eta: float, snr_db: float) -> float:
    """Noise variance of one grid point; P_s = 1/n after normalization.

    PSNR grids convert to SNR grids through the code PAPR before the
    variance is computed, so a PSNR run is bit-identical to the shifted
    SNR run.
    """
    p_s = 1.0 / cfg.n
    if cfg.axis == "psnr":
        snr_db = snr_db - 10.0 * math.log10(eta)
    return ch.operating_point(p_s, snr_db)


def _check_feasible(cfg: SimConfig) -> None:
    design, constellation, _, levels = _context(cfg.code, cfg.n, cfg.m)
    if cfg.decoder == "exhaustive":
        space = levels.size ** design.k_real
        if space > EXHAUSTIVE_SEARCH_CAP:
            raise BudgetError(f"exhaustive decoding over {space} candidates exceeds "
                              f"{EXHAUSTIVE_SEARCH_CAP}; use the sphere decoder")


def run_cer(cfg: SimConfig, workers: int = 1) -> SimResult:
    """Measure CER at every grid point with early stopping and Wilson CIs."""
    _check_feasible(cfg)
    design, constellation, c, _ = _context(cfg.code, cfg.n, cfg.m)
    eta = 10.0 ** (code_papr(design, constellation) / 10.0)

    full, rest = divmod(cfg.max_trials, cfg.batch_size)
    sizes = [cfg.batch_size] * full + ([rest] if rest else [])

    points = []
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for p_idx, snr in enumerate(cfg.snr_db):
            sigma2 = _point_sigma(cfg, eta, snr)
            errors = 0
            trials = 0
            b = 0
            while b < len(sizes):
                wave = range(b, min(b + max(1, workers), len(sizes)))
                if pool is None:
                    results = [_batch_errors(cfg, p_idx, i, sizes[i], sigma2) for i in wave]
                else:
                    futures = [pool.submit(_batch_errors, cfg, p_idx, i, sizes[i], sigma2)
                               for i in wave]
                    results = [f.result() for f in futures]
                stop = False
                for i, err in zip(wave, results):
                    errors += err
                    trials += sizes[i]
                    if errors >= cfg.target_errors:
                        stop = True
                        break
                if stop:
                    break
                b = wave.stop
            lo, hi = wilson_interval(errors, trials, cfg.confidence)
            points.append(PointRecord(snr_db=float(snr), axis=cfg.axis, trials=trials,
                                      errors=errors, cer=errors / trials,
                                      ci_low=lo, ci_high=hi))
    finally:
        if pool is not None:
            pool.shutdown()
    return SimResult(config=cfg, eta=eta, points=tuple(points))


def run_quantization_sweep(cfg: SimConfig, q_list, workers: int = 1) -> list[SimResult]:
    """One exact-encoder curve followed by one curve per quantizer width."""
    results = [run_cer(replace(cfg, encoder="exact"), workers=workers)]
    for q in q_list:
        results.append(run_cer(replace(cfg, encoder=f"q={int(q)}"), workers=workers))
    return results
