"""q-bit fixed-point encoder model: quantizer, scaling, and quantized encoding.

The datapath mirrors a fixed-point multiply-accumulate unit with a wide
accumulator: operands are block-scaled by a single power of two into
[-1, 1), rounded to the q-bit grid, multiplied and summed exactly, and
the accumulator is realigned by one power-of-two shift before the final
q-bit rounding.  Because every shift is a power of two, descaling is
exact and integer-coefficient designs encode without error once q
covers their dynamic range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constellation import Constellation
from .designs import Codeword, LinearDesign, symbols_to_coords


@dataclass(frozen=True)
class QuantizerConfig:
    """Bit width and block scale of the fixed-point datapath.

    q bits split as 1 sign + q-1 fractional; the representable grid is
    {k / 2**(q-1) : -2**(q-1) <= k <= 2**(q-1) - 1}.  scale is the power
    of two dividing all operands so they land in [-1, 1).
    """

    q: int
    scale: float

    def __post_init__(self):
        if self.q < 2:
            raise ValueError(f"need at least 2 bits (sign + fraction), got q={self.q}")
        mant, _ = math.frexp(self.scale)
        if self.scale <= 0 or mant != 0.5:
            raise ValueError(f"scale must be a positive power of two, got {self.scale}")


def _round_half_away(x: np.ndarray) -> np.ndarray:
    return np.copysign(np.floor(np.abs(x) + 0.5), x)


def quantize(y, q: int):
    """Round y onto the q-bit grid; ties round half away from zero.

    Admissible inputs lie in [-1, 1 - 2**-q].  The upper boundary is a
    rounding tie whose away-from-zero result would leave the grid, so it
    saturates to the top grid point (which is the nearest grid point).
    """
    if not isinstance(q, (int, np.integer)) or q < 2:
        raise ValueError(f"need at least 2 bits, got q={q!r}")
    arr = np.asarray(y, dtype=np.float64)
    limit = 1.0 - 2.0 ** (-q)
    if np.any(arr > limit) or np.any(arr < -1.0):
        raise ValueError(f"input outside the admissible interval [-1, 1 - 2**-{q}]")
    half = 2.0 ** (q - 1)
    k = np.clip(_round_half_away(arr * half), -half, half - 1.0)
    out = k / half
    return float(out) if np.isscalar(y) else out


def _quantize_saturating(arr: np.ndarray, q: int) -> np.ndarray:
    # Overflow behaviour of the output register: clamp, then round.
    half = 2.0 ** (q - 1)
    k = np.clip(_round_half_away(np.asarray(arr, dtype=np.float64) * half), -half, half - 1.0)
    return k / half


def min_bits_integer_code(n: int, m: int) -> int:
    """Bits per dimension needed to encode the integer design exactly: mn/2 + 1."""
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise ValueError(f"antenna count must be an integer >= 2, got {n!r}")
    if not isinstance(m, (int, np.integer)) or m <= 0 or m % 2 != 0:
        raise ValueError(f"bits per symbol must be a positive even integer, got {m!r}")
    return int(m) * int(n) // 2 + 1


# Published reference bit counts for the rate-2 algebraic 2x2 codes at
# 4/16/64-QAM; derived from an error-floor analysis elsewhere, recorded
# here for documentation only (not computed by this package).
REFERENCE_MIN_BITS = {
    "golden": {4: 7, 16: 8, 64: 9},
    "silver": {4: 6, 16: 9, 64: 9},
}


def _pow2_above(x: float) -> float:
    """Smallest power of two strictly greater than x > 0."""
    if x <= 0:
        raise ValueError("operand maximum must be positive")
    _, exp = math.frexp(x)
    return math.ldexp(1.0, exp)


def encoder_scale(design: LinearDesign, constellation: Constellation) -> float:
    """Block scale: smallest power of two above every datapath magnitude.

    Covers the basis coordinates, the symbol coordinates, and the exact
    codeword entry coordinates.  The entry maximum is reached by
    sign-aligned extreme symbols, so it is (L-1) * sum_r |part(b_r)| at
    the worst position, with L-1 the largest coordinate level.
    """
    basis_parts = np.stack([design.basis.real, design.basis.imag])
    max_basis = float(np.max(np.abs(basis_parts)))
    max_coord = float(constellation.levels[-1])
    per_position = np.sum(np.abs(basis_parts), axis=1)  # (2, n, n)
    max_entry = max_coord * float(np.max(per_position))
    return _pow2_above(max(max_basis, max_coord, max_entry))


def quantizer_config(design: LinearDesign, constellation: Constellation, q: int) -> QuantizerConfig:
    return QuantizerConfig(q=int(q), scale=encoder_scale(design, constellation))


def quantized_encode_coords(design: LinearDesign, constellation: Constellation,
                            coords: np.ndarray, q: int) -> np.ndarray:
    """Fixed-point encode of real coordinate vectors (..., k_real).

    Returns codeword matrices (..., n, n).  Exact for integer designs
    whenever q >= mn/2 + 1.
    """
    cfg = quantizer_config(design, constellation, q)
    scale = cfg.scale

    basis_re_q = quantize(design.basis.real / scale, q)
    basis_im_q = quantize(design.basis.imag / scale, q)
    coords = np.asarray(coords, dtype=np.float64)
    coords_q = quantize(coords / scale, q)
    if not (np.any(basis_re_q) or np.any(basis_im_q)) or not np.any(coords_q):
        raise ValueError(f"q={q} is too small: all operands quantize to zero at scale {scale}")

    basis_q = basis_re_q + 1j * basis_im_q
    # Exact multiply-accumulate at scale^-2, realigned by one shift to
    # scale^-1 before the output register rounds to q bits.
    acc = np.tensordot(coords_q, basis_q, axes=([-1], [0])) * scale
    out = _quantize_saturating(acc.real, q) + 1j * _quantize_saturating(acc.imag, q)
    return out * scale


def quantized_encode(design: LinearDesign, constellation: Constellation,
                     symbols, q: int) -> Codeword:
    """Encode through the q-bit fixed-point datapath."""
    s = np.asarray(symbols, dtype=np.complex128).ravel()
    if s.size != design.n_symbols:
        raise ValueError(f"{design.name} expects {design.n_symbols} symbols, got {s.size}")
    for sym in s:
        if sym not in constellation:
            raise ValueError(f"symbol not in constellation: {sym!r}")
    entries = quantized_encode_coords(design, constellation, symbols_to_coords(s), q)
    return Codeword(entries=entries, norm_scale=1.0)
