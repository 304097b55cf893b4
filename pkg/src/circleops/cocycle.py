"""The Schwinger 2-cocycle c(A, B) = (1/2) tr(eps [eps, A] [eps, B]).

For operators with trig-poly coefficients the commutators [eps, .] are
finite matrices concentrated where the mode sign flips, so the trace is
exact and independent of the cutoff once it exceeds the bands involved.
The zero-mode value of eps is a genuine convention: all three choices are
first-class and every result records which one produced it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quantize import ModeGrid, OpMatrix, realize, sign_matrix
from .symbols import FormalSymbol, sym_multiplication
from .trigpoly import TrigPoly

CONVENTIONS = ("sign_plus", "kernel_zero", "twisted")


@dataclass(frozen=True)
class EpsilonSpec:
    """A sign-operator convention bound to a mode grid.

    sign_plus   : eps = diag sign(n+theta), sign(0) = +1, eps^2 = Id;
    kernel_zero : sign(0) = 0, eps^2 = Id - P_0 (the derivative's kernel);
    twisted     : i sign(n+1/2) on the anti-periodic sector, eps^2 = -Id.
    """

    convention: str
    grid: ModeGrid

    def __post_init__(self):
        if self.convention not in CONVENTIONS:
            raise ValueError(f"unknown convention '{self.convention}'")
        if self.convention == "twisted" and self.grid.offset != 0.5:
            raise ValueError("twisted convention requires the offset-1/2 grid")

    def matrix(self) -> OpMatrix:
        return sign_matrix(self.grid, self.convention)

    def square_defect(self) -> float:
        """Distance of eps^2 from its contractual value (exact zero expected)."""
        eps = self.matrix()
        sq = (eps @ eps).entries
        if self.convention == "sign_plus":
            target = np.eye(self.grid.dim)
        elif self.convention == "twisted":
            target = -np.eye(self.grid.dim)
        else:
            target = np.eye(self.grid.dim)
            if self.grid.offset == 0.0:
                i = self.grid.index(0) * self.grid.rank
                for k in range(self.grid.rank):
                    target[i + k, i + k] = 0.0
        return float(np.max(np.abs(sq - target)))


class NonHilbertSchmidt(Exception):
    """The commutator with eps carries mass out to the grid edge."""


def _as_matrix(a, grid: ModeGrid) -> OpMatrix:
    if isinstance(a, OpMatrix):
        if a.grid != grid:
            raise ValueError("operand grid does not match the epsilon grid")
        return a
    if isinstance(a, FormalSymbol):
        return realize(a, grid)
    if isinstance(a, TrigPoly):
        return realize(sym_multiplication(a), grid)
    raise TypeError(f"cannot realize {type(a).__name__} on the grid")


def _check_commutator_hs(f: OpMatrix, rel_tol: float = 1e-10):
    """Reject commutators whose mass reaches the outer quarter of the grid.

    Banded inputs give exactly corner-supported commutators; convergent
    (Hilbert-Schmidt) ones decay super-algebraically, so edge mass signals a
    growing-HS operand like the reflection.
    """
    N = f.grid.cutoff
    total = f.hs_norm()
    if total == 0.0:
        return
    inner = f.inner(max(1, (3 * N) // 4)).hs_norm()
    edge_mass = np.sqrt(max(total ** 2 - inner ** 2, 0.0))
    if edge_mass > rel_tol * total:
        raise NonHilbertSchmidt(
            f"commutator has relative edge mass {edge_mass / total:.2e}; "
            "not Hilbert-Schmidt at this cutoff")


def _support_radius(m: OpMatrix, tol: float = 0.0) -> int | None:
    """Largest |mode| carrying a nonzero row or column, None for zero."""
    N, r = m.grid.cutoff, m.grid.rank
    mags = np.abs(m.entries).reshape(2 * N + 1, r, 2 * N + 1, r).max(axis=(1, 3))
    mass = np.maximum(mags.max(axis=0), mags.max(axis=1))
    nz = np.nonzero(mass > tol)[0]
    if nz.size == 0:
        return None
    return int(np.max(np.abs(nz - N)))


def schwinger(a, b, eps: EpsilonSpec, check_hs: bool = True) -> complex:
    """(1/2) tr(eps [eps, A] [eps, B]) on the spec's grid.

    For banded operands the commutators are corner-supported and the product
    is evaluated on the extracted corner, which makes the value bitwise
    independent of the cutoff once it exceeds the bands.  Inputs whose
    commutator is not Hilbert-Schmidt are refused.
    """
    e = eps.matrix()
    fa = e.commutator(_as_matrix(a, eps.grid))
    fb = e.commutator(_as_matrix(b, eps.grid))
    if check_hs:
        _check_commutator_hs(fa)
        _check_commutator_hs(fb)
    ra = _support_radius(fa)
    rb = _support_radius(fb)
    if ra is None or rb is None:
        return 0.0
    corner = max(ra, rb)
    if corner < eps.grid.cutoff:
        return 0.5 * (e.inner(corner) @ fa.inner(corner) @ fb.inner(corner)).trace()
    return 0.5 * (e @ fa @ fb).trace()


@dataclass
class CocycleIdentityReport:
    jacobi_defect: float          # |c([A,B],C) + c([B,C],A) + c([C,A],B)|
    antisymmetry_defect: float    # max pairwise |c(X,Y) + c(Y,X)|
    convention: str


def cocycle_identity_check(a, b, c, eps: EpsilonSpec) -> CocycleIdentityReport:
    """Defects of the 2-cocycle identity and of antisymmetry, at matrix level."""
    ma, mb, mc = (_as_matrix(x, eps.grid) for x in (a, b, c))
    jac = (schwinger(ma.commutator(mb), mc, eps)
           + schwinger(mb.commutator(mc), ma, eps)
           + schwinger(mc.commutator(ma), mb, eps))
    anti = max(
        abs(schwinger(ma, mb, eps) + schwinger(mb, ma, eps)),
        abs(schwinger(mb, mc, eps) + schwinger(mc, mb, eps)),
        abs(schwinger(ma, mc, eps) + schwinger(mc, ma, eps)),
    )
    return CocycleIdentityReport(abs(jac), anti, eps.convention)


def multiplication_cocycle_table(fs: list[TrigPoly], gs: list[TrigPoly],
                                 eps: EpsilonSpec) -> list[tuple[int, int, complex]]:
    """c(M_f, M_g) for all pairs; the restriction of the cocycle to the
    commutative multiplication algebra, whose non-vanishing is the
    computable non-triviality witness (a coboundary of brackets would have
    to vanish there)."""
    out = []
    for i, f in enumerate(fs):
        for j, g in enumerate(gs):
            out.append((i, j, schwinger(f, g, eps)))
    return out


def schwinger_mode_pair(m: int, eps: EpsilonSpec) -> complex:
    """c(M_{e^{imx}}, M_{e^{-imx}}), the elementary charge of the cocycle."""
    f = TrigPoly(eps.grid.rank, {m: np.eye(eps.grid.rank)})
    g = TrigPoly(eps.grid.rank, {-m: np.eye(eps.grid.rank)})
    return schwinger(f, g, eps)
