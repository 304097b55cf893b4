"""Matrix-valued trigonometric polynomials on the circle.

A ``TrigPoly`` stores a finite Fourier series

    a(x) = sum_m c_m e^{i m x},        c_m an r x r complex matrix,

as a sparse map ``mode -> matrix``.  These are the coefficient functions of
operator symbols, so arithmetic here must stay exact: products convolve the
coefficient maps, and a configurable bandwidth cap turns silent support
growth into a hard error.
"""

from __future__ import annotations

import numpy as np

# Support cap for products/resampling.  Overflow raises; never truncates.
_BANDWIDTH_CAP = 512


def set_bandwidth_cap(cap: int) -> int:
    """Set the global bandwidth cap, returning the previous value."""
    global _BANDWIDTH_CAP
    if cap < 1:
        raise ValueError("bandwidth cap must be positive")
    old, _BANDWIDTH_CAP = _BANDWIDTH_CAP, int(cap)
    return old


def bandwidth_cap() -> int:
    return _BANDWIDTH_CAP


class BandwidthOverflow(Exception):
    """Raised when an operation would push support past the global cap."""


class TrigPoly:
    """Finitely supported Fourier series with r x r matrix coefficients.

    Immutable by convention: no method mutates ``self`` after construction,
    so values are safe to share between threads.
    """

    __slots__ = ("rank", "coeffs")

    def __init__(self, rank: int, coeffs: dict | None = None):
        if rank < 1:
            raise ValueError("rank must be a positive integer")
        self.rank = int(rank)
        clean: dict[int, np.ndarray] = {}
        for m, c in (coeffs or {}).items():
            mat = np.asarray(c, dtype=complex)
            if mat.shape == ():
                mat = mat * np.eye(rank)
            if mat.shape != (rank, rank):
                raise ValueError(f"coefficient at mode {m} has shape {mat.shape}, want ({rank},{rank})")
            if np.any(mat != 0):
                clean[int(m)] = mat
        self.coeffs = clean

    # -- constructors -----------------------------------------------------

    @classmethod
    def zero(cls, rank: int = 1) -> "TrigPoly":
        return cls(rank, {})

    @classmethod
    def constant(cls, value, rank: int = 1) -> "TrigPoly":
        return cls(rank, {0: np.asarray(value, dtype=complex) * np.eye(rank) if np.ndim(value) == 0 else value})

    @classmethod
    def from_samples(cls, values: np.ndarray, bandwidth: int, rank: int = 1, tol: float = 0.0) -> "TrigPoly":
        """Fit a series of the given bandwidth from uniform samples on [0, 2pi).

        ``values`` has shape (M,) for rank 1 or (M, r, r); M must exceed
        2*bandwidth.  Coefficients with magnitude <= tol are dropped.
        """
        vals = np.asarray(values, dtype=complex)
        if vals.ndim == 1:
            vals = vals[:, None, None]
        M = vals.shape[0]
        if M < 2 * bandwidth + 1:
            raise ValueError("need more samples than coefficients")
        if bandwidth > _BANDWIDTH_CAP:
            raise BandwidthOverflow(f"requested bandwidth {bandwidth} exceeds cap {_BANDWIDTH_CAP}")
        hats = np.fft.fft(vals, axis=0) / M
        coeffs = {}
        for m in range(-bandwidth, bandwidth + 1):
            mat = hats[m % M]
            if np.max(np.abs(mat)) > tol:
                coeffs[m] = mat
        return cls(rank, coeffs)

    # -- structure ---------------------------------------------------------

    @property
    def bandwidth(self) -> int:
        return max((abs(m) for m in self.coeffs), default=0)

    def is_zero(self) -> bool:
        return not self.coeffs

    def coeff(self, m: int) -> np.ndarray:
        return self.coeffs.get(m, np.zeros((self.rank, self.rank), dtype=complex))

    def mean(self) -> np.ndarray:
        """Zeroth Fourier coefficient."""
        return self.coeff(0)

    def max_abs(self) -> float:
        return max((np.max(np.abs(c)) for c in self.coeffs.values()), default=0.0)

    # -- arithmetic ---------------------------------------------------------

    def _check_rank(self, other: "TrigPoly"):
        if self.rank != other.rank:
            raise ValueError(f"rank mismatch: {self.rank} vs {other.rank}")

    def __add__(self, other: "TrigPoly") -> "TrigPoly":
        self._check_rank(other)
        coeffs = dict(self.coeffs)
        for m, c in other.coeffs.items():
            coeffs[m] = coeffs[m] + c if m in coeffs else c
        return TrigPoly(self.rank, coeffs)

    def __sub__(self, other: "TrigPoly") -> "TrigPoly":
        return self + other.scaled(-1)

    def __neg__(self) -> "TrigPoly":
        return self.scaled(-1)

    def scaled(self, scalar: complex) -> "TrigPoly":
        return TrigPoly(self.rank, {m: scalar * c for m, c in self.coeffs.items()})

    def __mul__(self, other: "TrigPoly") -> "TrigPoly":
        """Pointwise (matrix) product; coefficients convolve exactly."""
        self._check_rank(other)
        if self.bandwidth + other.bandwidth > _BANDWIDTH_CAP:
            raise BandwidthOverflow(
                f"product bandwidth {self.bandwidth + other.bandwidth} exceeds cap {_BANDWIDTH_CAP}")
        coeffs: dict[int, np.ndarray] = {}
        for m1, c1 in self.coeffs.items():
            for m2, c2 in other.coeffs.items():
                m = m1 + m2
                prod = c1 @ c2
                coeffs[m] = coeffs[m] + prod if m in coeffs else prod
        return TrigPoly(self.rank, coeffs)

    def dx(self, power: int = 1) -> "TrigPoly":
        """Apply D_x = -i d/dx ``power`` times: mode m scales by m**power."""
        return TrigPoly(self.rank, {m: (m ** power) * c for m, c in self.coeffs.items() if m != 0 or power == 0})

    def conjugate_transpose(self) -> "TrigPoly":
        return TrigPoly(self.rank, {-m: c.conj().T for m, c in self.coeffs.items()})

    # -- evaluation ----------------------------------------------------------

    def eval(self, x: float) -> np.ndarray:
        out = np.zeros((self.rank, self.rank), dtype=complex)
        for m, c in self.coeffs.items():
            out += c * np.exp(1j * m * x)
        return out

    def eval_many(self, xs: np.ndarray) -> np.ndarray:
        """Vectorized evaluation; returns shape (len(xs), r, r)."""
        xs = np.asarray(xs, dtype=float)
        out = np.zeros((xs.shape[0], self.rank, self.rank), dtype=complex)
        for m, c in self.coeffs.items():
            out += np.exp(1j * m * xs)[:, None, None] * c
        return out

    def eval_scalar(self, xs: np.ndarray) -> np.ndarray:
        """Evaluation for rank-1 series, returned as a flat complex array."""
        if self.rank != 1:
            raise ValueError("eval_scalar requires rank 1")
        xs = np.asarray(xs, dtype=float)
        out = np.zeros(xs.shape, dtype=complex)
        for m, c in self.coeffs.items():
            out += c[0, 0] * np.exp(1j * m * xs)
        return out

    def is_real(self, tol: float = 1e-12) -> bool:
        """Hermitian-symmetric coefficients <=> real-valued function."""
        for m, c in self.coeffs.items():
            if np.max(np.abs(c - self.coeff(-m).conj().T)) > tol:
                return False
        return True

    # -- misc -----------------------------------------------------------------

    def prune(self, tol: float) -> "TrigPoly":
        return TrigPoly(self.rank, {m: c for m, c in self.coeffs.items() if np.max(np.abs(c)) > tol})

    def __eq__(self, other) -> bool:
        if not isinstance(other, TrigPoly) or self.rank != other.rank:
            return NotImplemented if not isinstance(other, TrigPoly) else False
        if set(self.coeffs) != set(other.coeffs):
            return False
        return all(np.array_equal(self.coeffs[m], other.coeffs[m]) for m in self.coeffs)

    def allclose(self, other: "TrigPoly", tol: float = 1e-12) -> bool:
        if self.rank != other.rank:
            return False
        return (self - other).max_abs() <= tol

    def __repr__(self) -> str:
        if not self.coeffs:
            return f"TrigPoly(rank={self.rank}, 0)"
        modes = sorted(self.coeffs)
        return f"TrigPoly(rank={self.rank}, modes={modes})"


def random_real_trigpoly(rng: np.random.Generator, bandwidth: int, rank: int = 1,
                         scale: float = 1.0) -> TrigPoly:
    """Random real-valued series: Hermitian coefficient symmetry enforced."""
    coeffs: dict[int, np.ndarray] = {}
    c0 = rng.standard_normal((rank, rank)) * scale
    coeffs[0] = (c0 + c0.T) / 2 + 0j
    for m in range(1, bandwidth + 1):
        c = (rng.standard_normal((rank, rank)) + 1j * rng.standard_normal((rank, rank))) * scale / 2
        coeffs[m] = c
        coeffs[-m] = c.conj().T
    return TrigPoly(rank, coeffs)
