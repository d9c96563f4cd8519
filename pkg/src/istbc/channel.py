"""Quasi-static Rayleigh MIMO channel with AWGN and deterministic RNG streams.

One codeword spans one channel realization (coherence length equals the
antenna count).  All randomness flows through numpy Generators backed by
the counter-based Philox engine; substream derivation is deterministic
in (master seed, index tuple), so simulations are reproducible and
parallelizable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .designs import Codeword


@dataclass(frozen=True)
class ChannelRealization:
    """One quasi-static channel draw: fading matrix plus noise variance.

    H entries are circularly-symmetric complex Gaussian with zero mean
    and unit variance; noise_sigma2 is the variance per complex noise
    entry.
    """

    H: np.ndarray
    noise_sigma2: float


def substream(master_seed: int, *indices: int) -> np.random.Generator:
    """Deterministic child stream for (master seed, index tuple)."""
    seq = np.random.SeedSequence(entropy=int(master_seed),
                                 spawn_key=tuple(int(i) for i in indices))
    return np.random.Generator(np.random.Philox(seq))


def complex_normal(rng: np.random.Generator, shape, variance: float = 1.0) -> np.ndarray:
    """CN(0, variance) samples: variance split evenly across re/im."""
    scale = math.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def sample_channel(n: int, rng: np.random.Generator,
                   noise_sigma2: float = 0.0) -> ChannelRealization:
    """Draw a fresh n x n realization with CN(0, 1) entries."""
    if n < 1:
        raise ValueError(f"antenna count must be positive, got {n}")
    return ChannelRealization(H=complex_normal(rng, (n, n)), noise_sigma2=noise_sigma2)


def transmit(X: Codeword | np.ndarray, ch: ChannelRealization,
             rng: np.random.Generator) -> np.ndarray:
    """Y = sqrt(1/n) H X + Z with Z entries CN(0, sigma^2)."""
    entries = X.entries if isinstance(X, Codeword) else np.asarray(X, dtype=np.complex128)
    n = ch.H.shape[0]
    if entries.shape != (n, n):
        raise ValueError(f"codeword shape {entries.shape} does not match channel n={n}")
    Z = complex_normal(rng, (n, n), ch.noise_sigma2) if ch.noise_sigma2 > 0 \
        else np.zeros((n, n), dtype=np.complex128)
    return math.sqrt(1.0 / n) * (ch.H @ entries) + Z


def operating_point(P_s: float, snr_db: float, eta: float = 1.0,
                    use_psnr: bool = False) -> float:
    """Noise variance for a target SNR (or PSNR = eta * P_s / sigma^2) in dB."""
    if P_s <= 0:
        raise ValueError(f"signal power must be positive, got {P_s}")
    if eta < 1.0:
        raise ValueError(f"PAPR must be >= 1, got {eta}")
    linear = 10.0 ** (snr_db / 10.0)
    if use_psnr:
        return eta * P_s / linear
    return P_s / linear
