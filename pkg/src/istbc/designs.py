"""Real-linear dispersion designs and codeword encoding.

Every code is represented by one complex n x n basis matrix per real
information dimension, so conjugate-bearing designs (Alamouti) and
full-rate designs share a single encode/decode path.  Symbol t of a
design occupies real dimensions 2t (real part) and 2t+1 (imaginary
part).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constellation import Constellation

MAX_INTEGER_EXPONENT = 24


@dataclass(frozen=True)
class LinearDesign:
    """A real-linear dispersion design.

    basis has shape (k_real, n, n); codewords are sums of real symbol
    coordinates times basis matrices.
    """

    n: int
    k_real: int
    basis: np.ndarray
    name: str
    exact_integer: bool
    alpha: int | None = None
    m: int | None = None

    def __post_init__(self):
        if self.basis.shape != (self.k_real, self.n, self.n):
            raise ValueError(f"basis shape {self.basis.shape} does not match "
                             f"(k_real={self.k_real}, n={self.n})")
        stacked = self.basis.reshape(self.k_real, -1)
        stacked = np.concatenate([stacked.real, stacked.imag], axis=1)
        if np.linalg.matrix_rank(stacked) != self.k_real:
            raise ValueError("basis matrices are not linearly independent over the reals")

    @property
    def n_symbols(self) -> int:
        return self.k_real // 2

    def encode_real(self, coords: np.ndarray) -> np.ndarray:
        """Map real coordinate vectors (..., k_real) to codeword matrices (..., n, n)."""
        coords = np.asarray(coords, dtype=np.float64)
        if coords.shape[-1] != self.k_real:
            raise ValueError(f"expected {self.k_real} real coordinates, got {coords.shape[-1]}")
        return np.tensordot(coords, self.basis, axes=([-1], [0]))


@dataclass(frozen=True)
class Codeword:
    """An n x n codeword matrix and the power normalization already applied to it."""

    entries: np.ndarray
    norm_scale: float = 1.0


def symbols_to_coords(symbols) -> np.ndarray:
    """Interleave complex symbols into (Re s0, Im s0, Re s1, Im s1, ...)."""
    s = np.asarray(symbols, dtype=np.complex128)
    coords = np.empty(s.shape[:-1] + (2 * s.shape[-1],), dtype=np.float64)
    coords[..., 0::2] = s.real
    coords[..., 1::2] = s.imag
    return coords


def coords_to_symbols(coords) -> np.ndarray:
    c = np.asarray(coords, dtype=np.float64)
    return c[..., 0::2] + 1j * c[..., 1::2]


def integer_design(n: int, m: int) -> LinearDesign:
    """Full-rate n x n design with coefficients 1, alpha, ..., alpha^(n-1).

    alpha = 2**(m/2) for the 2**m-QAM alphabet.  Row k of the codeword
    spreads layer j = ((c - k) mod n) + 1 into column c through row k of
    the circulant coefficient matrix, with the unit factor i applied on
    the below-diagonal-layer positions (c < k).  Symbols are ordered
    layer-major: (x_{1,1}, ..., x_{1,n}, x_{2,1}, ..., x_{n,n}).
    """
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise ValueError(f"antenna count must be an integer >= 2, got {n!r}")
    if not isinstance(m, (int, np.integer)) or m <= 0 or m % 2 != 0:
        raise ValueError(f"bits per symbol must be a positive even integer, got {m!r}")
    n, m = int(n), int(m)
    if n * m // 2 > MAX_INTEGER_EXPONENT:
        raise ValueError(f"entry dynamic range 2**{n * m // 2} exceeds the exact-integer cap "
                         f"2**{MAX_INTEGER_EXPONENT}")

    alpha = 1 << (m // 2)
    k_real = 2 * n * n
    basis = np.zeros((k_real, n, n), dtype=np.complex128)
    for k in range(n):          # codeword row
        for c in range(n):      # codeword column
            layer = (c - k) % n
            gamma = 1j if c < k else 1.0
            for t in range(n):  # slot within the layer vector
                coeff = gamma * float(alpha ** ((t - k) % n))
                sym = layer * n + t
                basis[2 * sym, k, c] = coeff
                basis[2 * sym + 1, k, c] = 1j * coeff
    return LinearDesign(n=n, k_real=k_real, basis=basis, name="ic",
                        exact_integer=True, alpha=alpha, m=m)


def alamouti_design() -> LinearDesign:
    """The rate-1 orthogonal 2 x 2 design [[x1, -x2*], [x2, x1*]]."""
    basis = np.zeros((4, 2, 2), dtype=np.complex128)
    basis[0] = [[1, 0], [0, 1]]       # Re x1
    basis[1] = [[1j, 0], [0, -1j]]    # Im x1 (conjugate on the diagonal tail)
    basis[2] = [[0, -1], [1, 0]]      # Re x2
    basis[3] = [[0, 1j], [1j, 0]]     # Im x2
    return LinearDesign(n=2, k_real=4, basis=basis, name="alamouti", exact_integer=True)


def golden_design() -> LinearDesign:
    """The rate-2 golden-ratio 2 x 2 design.

    With theta = (1+sqrt(5))/2, thetab = 1 - theta, a = 1 + i(1-theta)
    and ab = 1 + i(1-thetab), the codeword is
    (1/sqrt(5)) * [[a(x1+theta x2), a(x3+theta x4)],
                   [i ab(x3+thetab x4), ab(x1+thetab x2)]].
    """
    theta = (1.0 + math.sqrt(5.0)) / 2.0
    thetab = 1.0 - theta
    a = 1.0 + 1j * (1.0 - theta)
    ab = 1.0 + 1j * (1.0 - thetab)
    s5 = 1.0 / math.sqrt(5.0)

    # Complex coefficient of each symbol at each position; the design is
    # complex-linear so the imaginary-part basis is i times the real one.
    coeff = np.zeros((4, 2, 2), dtype=np.complex128)
    coeff[0, 0, 0] = s5 * a             # x1
    coeff[0, 1, 1] = s5 * ab
    coeff[1, 0, 0] = s5 * a * theta     # x2
    coeff[1, 1, 1] = s5 * ab * thetab
    coeff[2, 0, 1] = s5 * a             # x3
    coeff[2, 1, 0] = s5 * 1j * ab
    coeff[3, 0, 1] = s5 * a * theta     # x4
    coeff[3, 1, 0] = s5 * 1j * ab * thetab

    basis = np.zeros((8, 2, 2), dtype=np.complex128)
    basis[0::2] = coeff
    basis[1::2] = 1j * coeff
    return LinearDesign(n=2, k_real=8, basis=basis, name="golden", exact_integer=False)


def get_design(code: str, n: int = 2, m: int = 2) -> LinearDesign:
    """Look up a design by name: 'ic', 'alamouti', or 'golden'."""
    code = code.lower()
    if code in ("ic", "integer"):
        return integer_design(n, m)
    if code == "alamouti":
        if n != 2:
            raise ValueError("the Alamouti design is 2 x 2 only")
        return alamouti_design()
    if code in ("golden", "gc"):
        if n != 2:
            raise ValueError("the golden design is 2 x 2 only")
        return golden_design()
    raise ValueError(f"unknown code {code!r}; expected ic, alamouti, or golden")


def encode(design: LinearDesign, symbols, constellation: Constellation | None = None) -> Codeword:
    """Encode a complex symbol vector into an (unnormalized) codeword.

    When a constellation is given, every symbol must belong to it.
    """
    s = np.asarray(symbols, dtype=np.complex128).ravel()
    if s.size != design.n_symbols:
        raise ValueError(f"{design.name} expects {design.n_symbols} symbols, got {s.size}")
    if constellation is not None:
        for sym in s:
            if sym not in constellation:
                raise ValueError(f"symbol not in constellation: {sym!r}")
    return Codeword(entries=design.encode_real(symbols_to_coords(s)), norm_scale=1.0)


def mean_entry_power(design: LinearDesign, constellation: Constellation) -> float:
    """Average |entry|^2 of a codeword under uniform constellation symbols.

    Symbol coordinates are independent, zero-mean, with second moment
    energy/2 per real dimension, so the cross terms vanish.
    """
    per_dim = constellation.energy / 2.0
    total = float(np.sum(np.abs(design.basis) ** 2))
    return per_dim * total / (design.n * design.n)


def normalize(design: LinearDesign, constellation: Constellation) -> float:
    """Scale c making the expected total transmit power per channel use 1.

    c = 1/sqrt(n * E_entry); after scaling, E|X_ij|^2 = 1/n and the sum
    over the n antennas is 1 per channel use.
    """
    e_entry = mean_entry_power(design, constellation)
    if e_entry == 0.0:
        raise ValueError("design has zero average entry power")
    return 1.0 / math.sqrt(design.n * e_entry)


def real_vec(matrix: np.ndarray) -> np.ndarray:
    """Real-stacked row-major vectorization: [Re vec(M); Im vec(M)]."""
    v = np.asarray(matrix, dtype=np.complex128).reshape(matrix.shape[:-2] + (-1,))
    return np.concatenate([v.real, v.imag], axis=-1)


def effective_channel(design: LinearDesign, H: np.ndarray) -> np.ndarray:
    """Real 2n^2 x k_real matrix M with real_vec(sqrt(1/n) H X(s)) = M @ coords(s)."""
    H = np.asarray(H, dtype=np.complex128)
    n = design.n
    if H.shape != (n, n):
        raise ValueError(f"channel matrix shape {H.shape} does not match design n={n}")
    prod = math.sqrt(1.0 / n) * (H @ design.basis)   # (k_real, n, n)
    return real_vec(prod).T
