"""Coherent ML detection: exhaustive-search oracle and a sphere decoder.

Both operate on the real-valued effective lattice from
designs.effective_channel, so conjugate-bearing and full-rate designs
decode through the same path.  The sphere decoder returns exactly the
exhaustive answer, including the lexicographic tie rule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BudgetError

EXHAUSTIVE_SEARCH_CAP = 2 ** 24
_TIE_REL = 1e-9


@dataclass(frozen=True)
class DetectionProblem:
    """One detection instance over the real effective lattice.

    effective has shape (2n^2, k_real); received is the real-stacked
    observation; alphabet is the finite per-dimension coordinate set,
    identical for every dimension, sorted ascending.
    """

    effective: np.ndarray
    received: np.ndarray
    alphabet: np.ndarray

    def __post_init__(self):
        if self.effective.ndim != 2 or self.received.shape != (self.effective.shape[0],):
            raise ValueError("effective matrix and received vector dimensions do not match")
        if self.alphabet.ndim != 1 or self.alphabet.size < 1:
            raise ValueError("alphabet must be a non-empty 1-D array")
        if np.any(np.diff(self.alphabet) <= 0):
            raise ValueError("alphabet must be sorted ascending without duplicates")

    @property
    def k(self) -> int:
        return self.effective.shape[1]

    @property
    def search_size(self) -> int:
        return int(self.alphabet.size) ** self.k


def _candidate_chunk(alphabet: np.ndarray, k: int, start: int, stop: int) -> np.ndarray:
    """Rows start..stop of the lexicographic candidate matrix."""
    idx = np.arange(start, stop, dtype=np.int64)
    out = np.empty((idx.size, k), dtype=np.float64)
    base = alphabet.size
    for dim in range(k - 1, -1, -1):
        out[:, dim] = alphabet[idx % base]
        idx //= base
    return out


def ml_decode_exhaustive(p: DetectionProblem, chunk: int = 1 << 16) -> np.ndarray:
    """Minimize ||received - effective @ s||^2 over the full candidate grid.

    Candidates are scanned in lexicographic coordinate order and updated
    on strict improvement, so ties resolve to the lexicographically
    smallest vector.
    """
    total = p.search_size
    if total > EXHAUSTIVE_SEARCH_CAP:
        raise BudgetError(f"search space {total} exceeds {EXHAUSTIVE_SEARCH_CAP}")
    best = np.inf
    best_coords = None
    for start in range(0, total, chunk):
        cands = _candidate_chunk(p.alphabet, p.k, start, min(start + chunk, total))
        resid = p.received[None, :] - cands @ p.effective.T
        metr = np.einsum("ij,ij->i", resid, resid)
        i = int(np.argmin(metr))
        if metr[i] < best:
            best = float(metr[i])
            best_coords = cands[i].copy()
    return best_coords


def _factorize(p: DetectionProblem):
    """Column-sorted QR of the effective matrix (regularized if singular).

    Returns (R, z, perm, regularized): R upper triangular with positive
    diagonal, z the rotated observation, perm the column permutation
    applied before factorization.
    """
    M = np.asarray(p.effective, dtype=np.float64)
    _, R0 = np.linalg.qr(M)
    d = np.abs(np.diag(R0))
    perm = np.argsort(d, kind="stable")  # weakest columns decoded last
    Mp = M[:, perm]
    Q, R = np.linalg.qr(Mp)
    diag = np.diag(R).copy()
    regular = np.all(np.abs(diag) > 1e-10 * max(1.0, float(np.abs(diag).max(initial=0.0))))
    if regular:
        signs = np.sign(diag)
        R = R * signs[:, None]
        z = (Q * signs[None, :]).T @ p.received
        return R, z, perm, False
    gram = Mp.T @ Mp + 1e-12 * np.eye(Mp.shape[1])
    L = np.linalg.cholesky(gram)
    R = L.T
    z = np.linalg.solve(L, Mp.T @ p.received)
    return R, z, perm, True


def sphere_decode(p: DetectionProblem, initial_radius: float = np.inf,
                  stats: dict | None = None) -> np.ndarray:
    """Depth-first sphere decoding over the finite per-dimension alphabet.

    Children at each level are visited in increasing distance from the
    unconstrained center (Schnorr-Euchner order), so subtrees prune as
    soon as the partial metric passes the best leaf.  Raises ValueError
    when the initial radius admits no candidate.
    """
    R, z, perm, regularized = _factorize(p)
    k = p.k
    alphabet = p.alphabet
    best = float(initial_radius) ** 2 if np.isfinite(initial_radius) else np.inf
    radius_limited = np.isfinite(initial_radius)
    best_coords = None
    nodes = 0

    inv_perm = np.empty(k, dtype=np.int64)
    inv_perm[perm] = np.arange(k)

    def lex_smaller(a: np.ndarray, b: np.ndarray) -> bool:
        for x, y in zip(a, b):
            if x != y:
                return x < y
        return False

    coords = np.zeros(k)

    def descend(level: int, partial: np.ndarray, dist: float):
        nonlocal best, best_coords, nodes
        r_ll = R[level, level]
        center = (z[level] - partial[level]) / r_ll
        order = np.argsort(np.abs(alphabet - center), kind="stable")
        for ci in order:
            val = alphabet[ci]
            nodes += 1
            step = z[level] - partial[level] - r_ll * val
            d = dist + step * step
            tol = _TIE_REL * (1.0 + abs(best)) if best_coords is not None else 0.0
            if d > best + tol:
                break  # children ordered by distance: the rest are farther
            coords[level] = val
            if level == 0:
                cand = coords[inv_perm].copy()
                if d < best - tol or best_coords is None:
                    best = d
                    best_coords = cand
                elif lex_smaller(cand, best_coords):
                    best = min(best, d)
                    best_coords = cand
            else:
                descend(level - 1, partial + R[:, level] * val, d)

    descend(k - 1, np.zeros(k), 0.0)
    if stats is not None:
        stats["nodes"] = nodes
        stats["regularized"] = regularized
    if best_coords is None:
        if radius_limited:
            raise ValueError(f"initial radius {initial_radius} admits no candidate")
        raise ValueError("sphere search found no candidate")
    return best_coords
