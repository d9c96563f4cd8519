"""Square QAM constellations with odd integer coordinates and Gray bit labels."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

MAX_BITS_PER_SYMBOL = 16


def _gray(index: int) -> int:
    return index ^ (index >> 1)


def _gray_inverse(code: int) -> int:
    index = code
    while code:
        code >>= 1
        index ^= code
    return index


class Papr(NamedTuple):
    ratio: float
    db: float


@dataclass(frozen=True)
class Constellation:
    """A square 2**m-QAM alphabet with odd integer coordinates.

    ``points[label]`` realizes the bit mapping: the high m/2 bits of the
    label select the real coordinate, the low m/2 bits the imaginary one,
    each through a reflected Gray code.  Coordinates are exact integers
    stored in complex128, never rescaled inside this module.
    """

    m: int
    points: np.ndarray
    energy: float
    _label_by_coords: dict = field(repr=False, compare=False, default_factory=dict)

    @property
    def size(self) -> int:
        return 1 << self.m

    @property
    def levels(self) -> np.ndarray:
        """Odd coordinate levels per axis, ascending."""
        half = 1 << (self.m // 2)
        return np.arange(-(half - 1), half, 2, dtype=np.int64)

    def label_of(self, point: complex) -> int:
        key = (int(round(point.real)), int(round(point.imag)))
        try:
            return self._label_by_coords[key]
        except KeyError:
            raise ValueError(f"symbol not in constellation: {point!r}") from None

    def __contains__(self, point: complex) -> bool:
        key = (int(round(point.real)), int(round(point.imag)))
        if key not in self._label_by_coords:
            return False
        return complex(point) == complex(key[0], key[1])


def make_qam(m: int) -> Constellation:
    """Build the square 2**m-QAM constellation with a per-axis Gray labeling.

    m must be even, between 2 and 16.  The average symbol energy is
    2*(2**m - 1)/3 exactly.
    """
    if not isinstance(m, (int, np.integer)):
        raise ValueError(f"bits per symbol must be an integer, got {m!r}")
    m = int(m)
    if m <= 0 or m % 2 != 0:
        raise ValueError(f"bits per symbol must be a positive even integer, got {m}")
    if m > MAX_BITS_PER_SYMBOL:
        raise ValueError(f"bits per symbol above supported range ({MAX_BITS_PER_SYMBOL}), got {m}")

    half_bits = m // 2
    n_levels = 1 << half_bits
    levels = np.arange(-(n_levels - 1), n_levels, 2, dtype=np.int64)

    points = np.empty(1 << m, dtype=np.complex128)
    label_by_coords: dict = {}
    for label in range(1 << m):
        hi = label >> half_bits
        lo = label & (n_levels - 1)
        re = int(levels[_gray_inverse(hi)])
        im = int(levels[_gray_inverse(lo)])
        points[label] = complex(re, im)
        label_by_coords[(re, im)] = label

    # 2*(2^m - 1)/3 is an integer for even m; keep it exact.
    energy = 2 * ((1 << m) - 1) // 3
    return Constellation(m=m, points=points, energy=float(energy),
                         _label_by_coords=label_by_coords)


def set_papr(points) -> Papr:
    """Peak-to-average power ratio of a point set: max|p|^2 / mean|p|^2."""
    pts = np.asarray(points, dtype=np.complex128).ravel()
    if pts.size == 0:
        raise ValueError("empty point set")
    powers = np.abs(pts) ** 2
    mean = powers.mean()
    if mean == 0.0:
        raise ValueError("all-zero point set has no average energy")
    ratio = float(powers.max() / mean)
    return Papr(ratio=ratio, db=float(10.0 * np.log10(ratio)))
