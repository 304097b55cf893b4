"""Hurwitz zeta and digamma by Euler-Maclaurin summation.

Double-precision implementations sufficient for the meromorphic
continuation of mode sums: zeta_hurwitz handles complex s away from the
pole at s = 1 (the pole's Laurent data 1/(s-1) - psi(a) is consumed
directly by callers) for real a > 0.  Derivatives use complex-step
differentiation, which is exact to machine precision for analytic
functions.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

_N_DIRECT = 36          # direct terms before the tail correction
_J_MAX = 25             # Bernoulli correction terms (asymptotic; adaptive stop)


def _bernoulli_numbers(n_max: int) -> list[Fraction]:
    """B_0 .. B_{n_max} via the defining recurrence, exactly."""
    b = [Fraction(0)] * (n_max + 1)
    b[0] = Fraction(1)
    from math import comb
    for m in range(1, n_max + 1):
        acc = Fraction(0)
        for k in range(m):
            acc += comb(m + 1, k) * b[k]
        b[m] = -acc / (m + 1)
    return b


_B_ALL = _bernoulli_numbers(2 * _J_MAX + 2)
_B2 = [float(_B_ALL[2 * j]) for j in range(1, _J_MAX + 1)]


def bernoulli_polynomial(n: int, a: float) -> float:
    """B_n(a) = sum_k C(n,k) B_k a^{n-k}, exact coefficients."""
    from math import comb

    acc = 0.0
    for k in range(n + 1):
        acc += comb(n, k) * float(_B_ALL[k]) * a ** (n - k)
    return acc


def zeta_hurwitz(s: complex, a: float = 1.0) -> complex:
    """Hurwitz zeta sum_{k>=0} (k+a)^{-s}, continued in s (s != 1).

    Integer s <= 0 takes the exact Bernoulli-polynomial values
    zeta_H(-n, a) = -B_{n+1}(a)/(n+1); elsewhere Euler-Maclaurin with
    _N_DIRECT direct terms and an adaptively stopped Bernoulli tail,
    accurate to ~1e-14 relative for Re(s) >~ -8 and |s| <~ 60 (the
    cancellation in the tail grows like (n+a)^{|Re s|} for negative
    non-integer s, which this package never needs certified).
    """
    if a <= 0:
        raise ValueError("Hurwitz parameter must be positive")
    s = complex(s)
    if s == 1.0:
        raise ZeroDivisionError("pole of the Hurwitz zeta at s = 1")
    if s.imag == 0.0 and s.real <= 0.0 and s.real == int(s.real):
        k = int(-s.real)
        return complex(-bernoulli_polynomial(k + 1, a) / (k + 1))
    n = _N_DIRECT
    ks = np.arange(n) + a
    acc = complex(np.sum(ks ** (-s)))
    w = n + a
    acc += w ** (1.0 - s) / (s - 1.0)
    acc += 0.5 * w ** (-s)
    # sum_j B_2j/(2j)! * s(s+1)...(s+2j-2) * w^{-s-2j+1}
    rising = s                       # product of (s + i), i = 0..2j-2
    w_pow = w ** (-s - 1.0)
    fact = 2.0
    prev_mag = np.inf
    first_mag = None
    for j in range(1, _J_MAX + 1):
        term = _B2[j - 1] / fact * rising * w_pow
        mag = abs(term)
        if mag >= prev_mag:          # asymptotic tail started growing
            break
        acc += term
        if first_mag is None:
            first_mag = max(mag, 1e-300)
        # relative to the series' own scale: the whole tail can be uniformly
        # tiny (complex-step evaluation) and still need all its terms
        if mag < 1e-17 * first_mag:
            break
        prev_mag = mag
        rising = rising * (s + 2 * j - 1) * (s + 2 * j)
        w_pow = w_pow / (w * w)
        fact *= (2 * j + 1) * (2 * j + 2)
    return acc


def zeta_hurwitz_deriv(s: float, a: float = 1.0) -> float:
    """d/ds of the Hurwitz zeta at real s != 1, by complex step."""
    h = 1e-20
    return float(zeta_hurwitz(complex(s, h), a).imag / h)


def riemann_zeta(s: complex) -> complex:
    return zeta_hurwitz(s, 1.0)


def digamma(a: float) -> float:
    """psi(a) for real a > 0, Euler-Maclaurin on the recurrence-shifted point."""
    if a <= 0:
        raise ValueError("digamma argument must be positive")
    shift = 0.0
    x = a
    while x < _N_DIRECT:
        shift -= 1.0 / x
        x += 1.0
    acc = np.log(x) - 0.5 / x
    xp = 1.0 / (x * x)
    pw = xp
    prev_mag = np.inf
    for j in range(1, _J_MAX + 1):
        term = _B2[j - 1] / (2 * j) * pw
        if abs(term) >= prev_mag:
            break
        acc -= term
        prev_mag = abs(term)
        pw *= xp
    return float(acc + shift)


EULER_GAMMA = -digamma(1.0)


def harmonic(n: int) -> float:
    """H_n = sum_{k=1}^n 1/k (H_0 = 0)."""
    return float(np.sum(1.0 / np.arange(1, n + 1))) if n > 0 else 0.0
