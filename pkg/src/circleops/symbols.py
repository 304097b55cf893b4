"""Truncated formal symbols of (log-)classical operators on the circle.

A symbol is a finite expansion

    sigma(x, xi) = sum  a^+_{d,j}(x) xi^d (log xi)^j          on xi > 0
                   sum  a^-_{d,j}(x) |xi|^d (log|xi|)^j       on xi < 0

with TrigPoly coefficients, strictly decreasing degrees and an explicit
trust watermark ``valid_down``: stored components at degrees >= valid_down
are exact for the represented operator class; anything below is dropped.
Composition uses the one-dimensional Leibniz expansion

    sigma_A * sigma_B  ~  sum_{alpha>=0} (1/alpha!) d_xi^alpha sigma_A . D_x^alpha sigma_B

applied branch-wise, with D_x = -i d/dx acting on coefficients as
mode-multiplication and d_xi acting per branch (the minus branch picks up a
sign for each xi-derivative since |xi| = -xi there).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .trigpoly import TrigPoly

NEG_INF = float("-inf")


@dataclass(frozen=True)
class HomogComponent:
    """One homogeneous (or log-homogeneous) term of a symbol expansion."""

    degree: int
    logpow: int
    plus: TrigPoly
    minus: TrigPoly

    def eval(self, x: float, xi: float) -> np.ndarray:
        if xi == 0:
            raise ValueError("homogeneous component undefined at xi = 0")
        branch = self.plus if xi > 0 else self.minus
        r = abs(xi)
        return branch.eval(x) * r ** self.degree * math.log(r) ** self.logpow

    def is_zero(self) -> bool:
        return self.plus.is_zero() and self.minus.is_zero()


class FormalSymbol:
    """Finite expansion of a formal symbol with a trust watermark.

    ``order`` is an upper bound for the leading degree; ``valid_down`` is the
    lowest degree whose stored coefficient is exact (``-inf`` for symbols
    known in closed form, like differential operators or |D|^a).
    """

    __slots__ = ("order", "rank", "components", "valid_down", "_mode_cache")

    def __init__(self, order: int, rank: int, components: dict | None = None,
                 valid_down: float = NEG_INF):
        self._mode_cache: dict[float, dict[int, np.ndarray]] = {}
        self.order = int(order)
        self.rank = int(rank)
        comps: dict[tuple[int, int], tuple[TrigPoly, TrigPoly]] = {}
        for (d, j), (p, m) in (components or {}).items():
            if d > order:
                raise ValueError(f"component degree {d} exceeds declared order {order}")
            if j < 0:
                raise ValueError("logpow must be a natural number")
            if p.rank != rank or m.rank != rank:
                raise ValueError("component rank mismatch")
            if valid_down != NEG_INF and d < valid_down:
                continue
            if not (p.is_zero() and m.is_zero()):
                comps[(int(d), int(j))] = (p, m)
        self.components = comps
        self.valid_down = valid_down

    # -- structure ----------------------------------------------------------

    @property
    def depth(self) -> int | None:
        """Number of trusted degree levels, None when the symbol is exact."""
        if self.valid_down == NEG_INF:
            return None
        return self.order - int(self.valid_down) + 1

    def is_classical(self) -> bool:
        return all(j == 0 for (_, j) in self.components)

    def is_zero(self) -> bool:
        return not self.components

    def degrees(self) -> list[int]:
        return sorted({d for (d, _) in self.components}, reverse=True)

    def component(self, degree: int, logpow: int = 0) -> HomogComponent:
        zero = TrigPoly.zero(self.rank)
        p, m = self.components.get((degree, logpow), (zero, zero))
        return HomogComponent(degree, logpow, p, m)

    def max_bandwidth(self) -> int:
        return max((max(p.bandwidth, m.bandwidth) for p, m in self.components.values()), default=0)

    def max_abs(self) -> float:
        return max((max(p.max_abs(), m.max_abs()) for p, m in self.components.values()), default=0.0)

    def eval(self, x: float, xi: float) -> np.ndarray:
        """Pointwise value away from xi = 0 (all stored components summed)."""
        out = np.zeros((self.rank, self.rank), dtype=complex)
        for (d, j), (p, m) in self.components.items():
            out += HomogComponent(d, j, p, m).eval(x, xi)
        return out

    def mode_coefficients(self, xi: float) -> dict[int, np.ndarray]:
        """Fourier coefficients of x -> sigma(x, xi) under the low-|xi| policy.

        Modes with |xi| < 1 evaluate at xi clamped to sign(xi)*1, and the
        xi = 0 mode uses the plus branch at xi = 1.  Any two such policies
        differ by a finite-rank smoothing operator; this one is fixed so all
        numeric oracles are reproducible.  Cached per mode (instances are
        immutable); callers must not mutate the returned dict.
        """
        cached = self._mode_cache.get(xi)
        if cached is not None:
            return cached
        pick_plus = xi >= 0
        r = max(abs(xi), 1.0)
        acc: dict[int, np.ndarray] = {}
        for (d, j), (p, m) in self.components.items():
            branch = p if pick_plus else m
            factor = r ** d * math.log(r) ** j
            for mode, c in branch.coeffs.items():
                if mode in acc:
                    acc[mode] = acc[mode] + c * factor
                else:
                    acc[mode] = c * factor
        self._mode_cache[xi] = acc
        return acc

    def coeff_function_at_mode(self, xi: float) -> TrigPoly:
        """TrigPoly view of mode_coefficients(xi)."""
        return TrigPoly(self.rank, dict(self.mode_coefficients(xi)))

    def diagonal_value(self, xi: float) -> complex:
        """Matrix trace of the mean coefficient at a mode: the diagonal of
        the associated Fourier-matrix realization."""
        c0 = self.mode_coefficients(xi).get(0)
        return complex(np.trace(c0)) if c0 is not None else 0.0

    # -- equality helpers -----------------------------------------------------

    def component_diff(self, other: "FormalSymbol") -> float:
        """Max coefficient difference over the union of trusted components."""
        keys = set(self.components) | set(other.components)
        worst = 0.0
        zero = TrigPoly.zero(self.rank)
        for k in keys:
            p1, m1 = self.components.get(k, (zero, zero))
            p2, m2 = other.components.get(k, (zero, zero))
            worst = max(worst, (p1 - p2).max_abs(), (m1 - m2).max_abs())
        return worst

    def allclose(self, other: "FormalSymbol", tol: float = 1e-12) -> bool:
        return self.rank == other.rank and self.component_diff(other) <= tol

    def __repr__(self) -> str:
        keys = sorted(self.components, reverse=True)
        return (f"FormalSymbol(order={self.order}, rank={self.rank}, "
                f"components={keys}, valid_down={self.valid_down})")


# -- branch-wise calculus ------------------------------------------------------


def _xi_derivative(comps: dict) -> dict:
    """One xi-derivative of a component map {(d,j): (plus, minus)}.

    Per branch: (d, j) -> d*(d-1, j) + j*(d-1, j-1); the minus branch takes an
    overall sign because there |xi| = -xi, d/dxi |xi|^d = -d |xi|^{d-1} and
    d/dxi log|xi| = -1/|xi|.
    """
    out: dict[tuple[int, int], list] = {}

    def add(key, p, m):
        if key in out:
            op, om = out[key]
            out[key] = [op + p, om + m]
        else:
            out[key] = [p, m]

    for (d, j), (p, m) in comps.items():
        if d != 0:
            add((d - 1, j), p.scaled(d), m.scaled(-d))
        if j > 0:
            add((d - 1, j - 1), p.scaled(j), m.scaled(-j))
    return {k: (p, m) for k, (p, m) in out.items() if not (p.is_zero() and m.is_zero())}


def compose(a: FormalSymbol, b: FormalSymbol, depth: int) -> FormalSymbol:
    """Symbol product truncated to ``depth`` degree levels below a.order+b.order.

    The result's watermark accounts for both requested truncation and the
    inputs' own trust: unknown tails of A enter only below
    A.valid_down + b.order (and symmetrically), so everything stored here is
    exact for the represented class.
    """
    if a.rank != b.rank:
        raise ValueError(f"rank mismatch: {a.rank} vs {b.rank}")
    if depth < 1:
        raise ValueError("composition depth must be >= 1")
    mo = a.order + b.order
    cutoff = mo - depth + 1
    vd = max(a.valid_down + b.order, b.valid_down + a.order, cutoff)
    acc: dict[tuple[int, int], list] = {}
    a_cur = dict(a.components)
    for alpha in range(depth):
        if alpha > 0:
            a_cur = _xi_derivative(a_cur)
        if not a_cur:
            break
        inv_fact = 1.0 / math.factorial(alpha)
        b_cur = {key: (p.dx(alpha), m.dx(alpha)) for key, (p, m) in b.components.items()} \
            if alpha > 0 else dict(b.components)
        for (da, ja), (ap, am) in a_cur.items():
            for (db, jb), (bp, bm) in b_cur.items():
                g = da + db
                if g < vd:
                    continue
                key = (g, ja + jb)
                pp = (ap * bp).scaled(inv_fact)
                mm = (am * bm).scaled(inv_fact)
                if key in acc:
                    acc[key][0] = acc[key][0] + pp
                    acc[key][1] = acc[key][1] + mm
                else:
                    acc[key] = [pp, mm]
    comps = {k: (p, m) for k, (p, m) in acc.items()}
    return FormalSymbol(mo, a.rank, comps, valid_down=vd)


def linear_combine(terms: list[tuple[complex, FormalSymbol]]) -> FormalSymbol:
    """Finite linear combination; watermark is the weakest of the inputs."""
    if not terms:
        raise ValueError("empty linear combination")
    rank = terms[0][1].rank
    if any(s.rank != rank for _, s in terms):
        raise ValueError("rank mismatch in linear combination")
    order = max(s.order for _, s in terms)
    vd = max(s.valid_down for _, s in terms)
    acc: dict[tuple[int, int], list] = {}
    for scal, s in terms:
        for key, (p, m) in s.components.items():
            if key[0] < vd:
                continue
            sp, sm = p.scaled(scal), m.scaled(scal)
            if key in acc:
                acc[key][0] = acc[key][0] + sp
                acc[key][1] = acc[key][1] + sm
            else:
                acc[key] = [sp, sm]
    return FormalSymbol(order, rank, {k: (p, m) for k, (p, m) in acc.items()}, valid_down=vd)


def commutator(a: FormalSymbol, b: FormalSymbol, depth: int) -> FormalSymbol:
    return linear_combine([(1.0, compose(a, b, depth)), (-1.0, compose(b, a, depth))])


def split_plus(a: FormalSymbol) -> FormalSymbol:
    """Project onto the xi > 0 branch (an algebra endomorphism)."""
    zero = TrigPoly.zero(a.rank)
    comps = {k: (p, zero) for k, (p, _) in a.components.items()}
    return FormalSymbol(a.order, a.rank, comps, valid_down=a.valid_down)


def split_minus(a: FormalSymbol) -> FormalSymbol:
    """Project onto the xi < 0 branch."""
    zero = TrigPoly.zero(a.rank)
    comps = {k: (zero, m) for k, (_, m) in a.components.items()}
    return FormalSymbol(a.order, a.rank, comps, valid_down=a.valid_down)


def parity_class(a: FormalSymbol, tol: float = 1e-12) -> str:
    """Classify a classical symbol as 'odd', 'even', or 'neither'.

    Odd class:  sigma_d(x, -xi) = (-1)^d     sigma_d(x, xi) for every degree d;
    even class: sigma_d(x, -xi) = (-1)^(d+1) sigma_d(x, xi).
    In branch form the test reads minus = (+/-1)^... * plus componentwise.
    """
    if not a.is_classical():
        raise ValueError("parity classification requires a classical symbol")
    odd_ok = True
    even_ok = True
    for (d, _), (p, m) in a.components.items():
        scale = max(1.0, p.max_abs(), m.max_abs())
        if (m - p.scaled((-1.0) ** d)).max_abs() > tol * scale:
            odd_ok = False
        if (m - p.scaled((-1.0) ** (d + 1))).max_abs() > tol * scale:
            even_ok = False
        if not (odd_ok or even_ok):
            return "neither"
    if odd_ok:
        return "odd"
    if even_ok:
        return "even"
    return "neither"


def wodzicki_res(a: FormalSymbol) -> complex:
    """Noncommutative residue: trace of the mean of both branches at degree -1.

    Normalized so that the zeta function of the operator against a weight of
    order q has residue res/q at s = 0.  Log terms at degree -1 would create
    a higher-order pole and are rejected, as is a watermark that does not
    reach degree -1.
    """
    for (d, j), (p, m) in a.components.items():
        if d == -1 and j > 0 and not (p.is_zero() and m.is_zero()):
            raise ValueError("log term at degree -1: residue has a higher-order pole")
    if a.valid_down > -1:
        raise ValueError("degree -1 is below the trusted depth; recompose deeper")
    comp = a.component(-1, 0)
    return complex(np.trace(comp.plus.mean() + comp.minus.mean()))


# -- built-in symbols ----------------------------------------------------------


def _const(value: complex, rank: int) -> TrigPoly:
    return TrigPoly(rank, {0: value * np.eye(rank)})


def sym_identity(rank: int = 1) -> FormalSymbol:
    return FormalSymbol(0, rank, {(0, 0): (_const(1, rank), _const(1, rank))})


def sym_derivative(rank: int = 1) -> FormalSymbol:
    """sigma(D) = xi with D = -i d/dx."""
    return FormalSymbol(1, rank, {(1, 0): (_const(1, rank), _const(-1, rank))})


def sym_abs_derivative(rank: int = 1) -> FormalSymbol:
    """sigma(|D|) = |xi|."""
    return FormalSymbol(1, rank, {(1, 0): (_const(1, rank), _const(1, rank))})


def sym_abs_power(power: int, rank: int = 1) -> FormalSymbol:
    """sigma(|D|^a) = |xi|^a (|D| acts as the identity on constants)."""
    return FormalSymbol(power, rank, {(power, 0): (_const(1, rank), _const(1, rank))})


def sym_sign(rank: int = 1) -> FormalSymbol:
    """sigma(eps(D)) = xi/|xi|, the sign of -i d/dx."""
    return FormalSymbol(0, rank, {(0, 0): (_const(1, rank), _const(-1, rank))})


def sym_sign_connection(rank: int = 1) -> FormalSymbol:
    """sigma(eps(nabla)) = i xi/|xi|, the twisted-bundle convention."""
    return FormalSymbol(0, rank, {(0, 0): (_const(1j, rank), _const(-1j, rank))})


def sym_proj_plus(rank: int = 1) -> FormalSymbol:
    """Projection on positive modes: (1/2)(Id + xi/|xi|)."""
    return FormalSymbol(0, rank, {(0, 0): (_const(1, rank), TrigPoly.zero(rank))})


def sym_proj_minus(rank: int = 1) -> FormalSymbol:
    return FormalSymbol(0, rank, {(0, 0): (TrigPoly.zero(rank), _const(1, rank))})


def sym_multiplication(f: TrigPoly) -> FormalSymbol:
    """sigma(M_f) = f(x), degree 0, equal on both branches."""
    return FormalSymbol(0, f.rank, {(0, 0): (f, f)})


def sym_laplacian_weight(shift: float = 1.0, rank: int = 1) -> FormalSymbol:
    """sigma(shift + Delta) = shift + xi^2 with Delta = -d^2/dx^2 = D^2."""
    return FormalSymbol(2, rank, {
        (2, 0): (_const(1, rank), _const(1, rank)),
        (0, 0): (_const(shift, rank), _const(shift, rank)),
    })


def sym_log_laplacian_weight(shift: float = 1.0, depth: int = 6, rank: int = 1) -> FormalSymbol:
    """log(shift + xi^2) = 2 log|xi| + sum_{k>=1} (-1)^(k+1) shift^k xi^(-2k) / k.

    Exactly one logpow-1 component (degree 0, coefficient 2) plus a classical
    tail truncated after ``depth`` terms.
    """
    if depth < 1:
        raise ValueError("log expansion depth must be >= 1")
    comps = {(0, 1): (_const(2, rank), _const(2, rank))}
    for k in range(1, depth + 1):
        c = (-1.0) ** (k + 1) * shift ** k / k
        comps[(-2 * k, 0)] = (_const(c, rank), _const(c, rank))
    return FormalSymbol(0, rank, comps, valid_down=-2 * depth - 1)


def sym_log_abs(rank: int = 1) -> FormalSymbol:
    """log|xi|, the exact log-symbol of the |D|-type weight."""
    return FormalSymbol(0, rank, {(0, 1): (_const(1, rank), _const(1, rank))})


_BUILTINS = {
    "identity": sym_identity,
    "D": sym_derivative,
    "absD": sym_abs_derivative,
    "sign": sym_sign,
    "sign_connection": sym_sign_connection,
    "proj_plus": sym_proj_plus,
    "proj_minus": sym_proj_minus,
}


def builtin(name: str, **params) -> FormalSymbol:
    """String-dispatch constructor used by the batch front-end."""
    rank = int(params.pop("rank", 1))
    if name in _BUILTINS:
        if params:
            raise ValueError(f"unexpected parameters for builtin '{name}': {params}")
        return _BUILTINS[name](rank)
    if name == "absD_power":
        return sym_abs_power(int(params.pop("power")), rank)
    if name == "multiplication":
        return sym_multiplication(params.pop("f"))
    if name == "laplacian_weight":
        return sym_laplacian_weight(float(params.pop("shift", 1.0)), rank)
    if name == "log_weight":
        return sym_log_laplacian_weight(float(params.pop("shift", 1.0)),
                                        int(params.pop("depth", 6)), rank)
    raise ValueError(f"unknown builtin symbol '{name}'")


# -- operations against a weight ------------------------------------------------


def bracket_log_weight(b: FormalSymbol, weight, depth: int) -> FormalSymbol:
    """[sigma(B), sigma(log Q)] for a scalar weight Q, a classical symbol of
    order B.order - 1.

    The logpow-1 parts cancel identically in the commutator (the log
    component has constant coefficients, so only xi-derivatives of it
    survive, and each one is classical); a surviving log term therefore
    indicates an arithmetic bug and raises.
    """
    if not b.is_classical():
        raise ValueError("bracket_log_weight requires a classical symbol")
    if depth < 1:
        raise ValueError("depth must be >= 1")
    log_sym = weight.log_symbol(depth=depth + 2, rank=b.rank) if hasattr(weight, "log_symbol") else weight
    bracket = commutator(b, log_sym, depth + 1)
    scale = max(1.0, b.max_abs())
    comps = {}
    for (d, j), (p, m) in bracket.components.items():
        if j > 0:
            if max(p.max_abs(), m.max_abs()) > 1e-12 * scale:
                raise ArithmeticError(
                    f"log term of size {max(p.max_abs(), m.max_abs()):.3e} survived at degree {d}")
            continue
        comps[(d, j)] = (p, m)
    out_order = b.order - 1
    comps = {k: v for k, v in comps.items() if k[0] <= out_order}
    return FormalSymbol(out_order, b.rank, comps, valid_down=bracket.valid_down)


# -- transport along a diffeomorphism -------------------------------------------


def pushforward_diffeo_leading(a: FormalSymbol, g, bandwidth: int | None = None,
                               corrections: int = 0) -> FormalSymbol:
    """Transport of a classical symbol under conjugation by f -> f o g.

    With h = g^{-1}, the degree-d coefficient transforms at leading order as

        a(x) |xi|^d   ->   a(h(x)) * g'(h(x))^d * |xi|^d,

    and ``corrections=1`` adds the next term of the stationary-phase
    expansion at degree d-1,

        -/+ (i/2) d(d-1) g''(h(x)) g'(h(x))^(d-2) a(h(x)) |xi|^(d-1)

    (minus sign on the plus branch, plus on the minus branch).  Degrees with
    d(d-1) = 0 transport exactly, which is why multiplication operators and
    vector fields need no correction at all.
    """
    if not a.is_classical():
        raise ValueError("pushforward requires a classical symbol")
    if corrections not in (0, 1):
        raise ValueError("corrections must be 0 or 1")
    g.require_orientation_preserving()

    bw_target = bandwidth if bandwidth is not None else min(
        512, 2 * (a.max_bandwidth() + g.bandwidth() + 8))
    M = max(256, 4 * (bw_target + 1))
    xs = np.linspace(0.0, 2 * np.pi, M, endpoint=False)
    ys = g.inverse_values(xs)
    gp = g.derivative_values(ys)       # g'(h(x)) > 0
    gpp = g.second_derivative_values(ys)

    acc: dict[tuple[int, int], list] = {}

    def add(key, branch_vals_p, branch_vals_m):
        tp_p = TrigPoly.from_samples(branch_vals_p, bw_target, a.rank, tol=1e-14)
        tp_m = TrigPoly.from_samples(branch_vals_m, bw_target, a.rank, tol=1e-14)
        if key in acc:
            acc[key][0] = acc[key][0] + tp_p
            acc[key][1] = acc[key][1] + tp_m
        else:
            acc[key] = [tp_p, tp_m]

    for (d, _), (p, m) in a.components.items():
        pv = p.eval_many(ys)
        mv = m.eval_many(ys)
        lead = (gp ** d)[:, None, None]
        add((d, 0), pv * lead, mv * lead)
        if corrections == 1 and d * (d - 1) != 0:
            corr = (0.5j * d * (d - 1) * gpp * gp ** (d - 2))[:, None, None]
            add((d - 1, 0), -corr * pv, corr * mv)

    exact = all(0 <= d <= corrections + 1 for (d, _) in a.components)
    vd = a.valid_down if exact else max(a.valid_down, a.order - corrections)
    comps = {k: (p, m) for k, (p, m) in acc.items() if k[0] >= vd}
    return FormalSymbol(a.order, a.rank, comps, valid_down=vd)


# -- randomized generators (used by the verification suites) --------------------


def random_symbol(rng: np.random.Generator, order: int, depth: int, bandwidth: int,
                  rank: int = 1, parity: str | None = None, scale: float = 1.0) -> FormalSymbol:
    """Random classical symbol with real-trig-poly coefficient data.

    ``parity`` in {None, 'odd', 'even'} pins the branch relation
    minus = (-1)^d plus (odd) or (-1)^(d+1) plus (even).
    """
    from .trigpoly import random_real_trigpoly

    comps = {}
    for d in range(order, order - depth, -1):
        p = random_real_trigpoly(rng, bandwidth, rank, scale)
        if parity == "odd":
            m = p.scaled((-1.0) ** d)
        elif parity == "even":
            m = p.scaled((-1.0) ** (d + 1))
        else:
            m = random_real_trigpoly(rng, bandwidth, rank, scale)
        comps[(d, 0)] = (p, m)
    return FormalSymbol(order, rank, comps, valid_down=order - depth + 1)
