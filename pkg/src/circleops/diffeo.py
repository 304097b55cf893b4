"""Orientation-preserving circle diffeomorphisms with trig-poly displacement.

A diffeomorphism is stored through its periodic displacement u, a real
rank-1 trigonometric polynomial, as the lift g(x) = x + u(x).  Composition
resamples spectrally; inversion runs Newton per grid node and refits.  Both
stay inside the representation up to the configured bandwidth, with the
truncation error reported rather than silently dropped.
"""

from __future__ import annotations

import numpy as np

from .trigpoly import TrigPoly, bandwidth_cap


class NewtonError(Exception):
    """Newton inversion failed to converge at some node (reported inside)."""


class Diffeo:
    """g(x) = x + u(x) with 1 + u'(x) > 0; optionally based (g(0) = 0)."""

    __slots__ = ("u", "based", "_du", "_ddu")

    ORIENTATION_MARGIN = 1e-6

    def __init__(self, u: TrigPoly, based: bool = False, check: bool = True):
        if u.rank != 1:
            raise ValueError("displacement must be a rank-1 series")
        if not u.is_real(tol=1e-10):
            raise ValueError("displacement must be real-valued")
        self.u = u
        self.based = bool(based)
        self._du = u.dx().scaled(1j)      # u' = i * D_x u
        self._ddu = self._du.dx().scaled(1j)
        if check:
            self.require_orientation_preserving()
            if based and abs(self.u.eval_scalar(np.array([0.0]))[0]) > 1e-10:
                raise ValueError("based diffeomorphism must satisfy g(0) = 0")

    # -- constructors ---------------------------------------------------------

    @classmethod
    def identity(cls) -> "Diffeo":
        return cls(TrigPoly.zero(1), based=True)

    @classmethod
    def rotation(cls, alpha: float) -> "Diffeo":
        return cls(TrigPoly(1, {0: np.array([[alpha]], dtype=complex)}), based=(alpha == 0.0))

    @classmethod
    def from_modes(cls, modes: dict[int, complex], based: bool = False) -> "Diffeo":
        """Build from coefficients of u; Hermitian symmetry is enforced by
        mirroring each positive mode (pass mode 0 and m > 0 only)."""
        coeffs: dict[int, complex] = {}
        for m, c in modes.items():
            if m == 0:
                coeffs[0] = coeffs.get(0, 0.0) + complex(c).real
            else:
                coeffs[m] = coeffs.get(m, 0.0) + c
                coeffs[-m] = coeffs.get(-m, 0.0) + np.conj(c)
        tp = TrigPoly(1, {m: np.array([[v]]) for m, v in coeffs.items()})
        return cls(tp, based=based)

    @classmethod
    def sine(cls, amplitude: float, mode: int = 1, based: bool = True) -> "Diffeo":
        """g(x) = x + amplitude * sin(mode x); based since sin 0 = 0."""
        c = amplitude / 2j
        tp = TrigPoly(1, {mode: np.array([[c]]), -mode: np.array([[np.conj(c)]])})
        return cls(tp, based=based)

    # -- evaluation -------------------------------------------------------------

    def bandwidth(self) -> int:
        return self.u.bandwidth

    def values(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        return xs + self.u.eval_scalar(xs).real

    def derivative_values(self, xs: np.ndarray) -> np.ndarray:
        return 1.0 + self._du.eval_scalar(np.asarray(xs, dtype=float)).real

    def second_derivative_values(self, xs: np.ndarray) -> np.ndarray:
        return self._ddu.eval_scalar(np.asarray(xs, dtype=float)).real

    def __call__(self, x: float) -> float:
        return float(self.values(np.array([x]))[0])

    def is_identity(self, tol: float = 1e-12) -> bool:
        return self.u.max_abs() <= tol

    # -- membership in Diff_+ -----------------------------------------------------

    def orientation_margin(self, n_check: int | None = None) -> float:
        n = n_check or max(64, 8 * self.u.bandwidth + 16)
        xs = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
        return float(np.min(self.derivative_values(xs)))

    def require_orientation_preserving(self):
        margin = self.orientation_margin()
        if margin <= self.ORIENTATION_MARGIN:
            raise ValueError(f"not orientation-preserving: min(1 + u') = {margin:.3e}")

    # -- group operations -----------------------------------------------------------

    def _fit_bandwidth(self) -> int:
        return min(bandwidth_cap(), max(32, 4 * self.u.bandwidth + 16))

    def compose(self, other: "Diffeo", bandwidth: int | None = None) -> "Diffeo":
        """(self o other)(x) = self(other(x)), displacement refit spectrally."""
        bw = bandwidth or min(bandwidth_cap(), max(self._fit_bandwidth(), other._fit_bandwidth()))
        M = 4 * bw + 4
        xs = np.linspace(0.0, 2 * np.pi, M, endpoint=False)
        disp = self.values(other.values(xs)) - xs
        u = TrigPoly.from_samples(disp.astype(complex), bw, 1, tol=1e-15)
        u = _hermitize(u)
        return Diffeo(u, based=self.based and other.based)

    def inverse(self, bandwidth: int | None = None, tol: float = 1e-13,
                max_iter: int = 60, roundtrip_tol: float = 1e-10) -> "Diffeo":
        """Newton inversion of x + u(x) = y node-wise, then spectral refit.

        The refit bandwidth doubles until the measured round-trip defect
        falls under roundtrip_tol (the inverse displacement is analytic but
        its coefficient decay slows as the orientation margin shrinks)."""
        bw = bandwidth or self._fit_bandwidth()
        best = None
        best_defect = np.inf
        while True:
            M = 4 * bw + 4
            ys = np.linspace(0.0, 2 * np.pi, M, endpoint=False)
            xs = ys - self.u.eval_scalar(ys).real
            for _ in range(max_iter):
                res = xs + self.u.eval_scalar(xs).real - ys
                if np.max(np.abs(res)) < tol:
                    break
                xs = xs - res / self.derivative_values(xs)
            else:
                worst = int(np.argmax(np.abs(xs + self.u.eval_scalar(xs).real - ys)))
                raise NewtonError(f"no convergence at node y = {ys[worst]:.6f}")
            u_inv = TrigPoly.from_samples((xs - ys).astype(complex), bw, 1, tol=1e-15)
            cand = Diffeo(_hermitize(u_inv), based=self.based)
            zs = np.linspace(0.0, 2 * np.pi, 2 * M + 1, endpoint=False)
            defect = float(np.max(np.abs(self.values(cand.values(zs)) - zs)))
            if defect < best_defect:
                best, best_defect = cand, defect
            if defect <= roundtrip_tol or (bandwidth is not None) or 2 * bw > bandwidth_cap():
                return best
            bw *= 2

    def inverse_values(self, ys: np.ndarray, tol: float = 1e-13, max_iter: int = 60) -> np.ndarray:
        """Newton solve of g(x) = y for each y, without the spectral refit."""
        ys = np.asarray(ys, dtype=float)
        xs = ys - self.u.eval_scalar(ys).real
        for _ in range(max_iter):
            res = xs + self.u.eval_scalar(xs).real - ys
            if np.max(np.abs(res)) < tol:
                return xs
            xs = xs - res / self.derivative_values(xs)
        raise NewtonError("no convergence in inverse_values")

    def roundtrip_defect(self, n_check: int = 257) -> float:
        """sup |g(g^{-1}(y)) - y| on a grid, the inversion quality report."""
        ginv = self.inverse()
        xs = np.linspace(0.0, 2 * np.pi, n_check, endpoint=False)
        return float(np.max(np.abs(self.values(ginv.values(xs)) - xs)))

    def distance_to(self, other: "Diffeo", n_check: int = 257) -> float:
        xs = np.linspace(0.0, 2 * np.pi, n_check, endpoint=False)
        return float(np.max(np.abs(self.values(xs) - other.values(xs))))

    def __repr__(self) -> str:
        return f"Diffeo(bandwidth={self.bandwidth()}, based={self.based})"


def _hermitize(u: TrigPoly) -> TrigPoly:
    """Symmetrize coefficients so the series is exactly real-valued."""
    coeffs: dict[int, np.ndarray] = {}
    modes = set(u.coeffs)
    for m in modes:
        c = (u.coeff(m) + u.coeff(-m).conj()) / 2
        coeffs[m] = c
        coeffs[-m] = c.conj()
    return TrigPoly(1, coeffs)


def random_diffeo(rng: np.random.Generator, bandwidth: int = 3, amplitude: float = 0.25,
                  based: bool = False) -> Diffeo:
    """Random element of Diff_+ with sup|g - id| normalized to ``amplitude``.

    The 1/(1+m)^2 coefficient profile keeps sup|u'| <= ~2.2 * amplitude, so
    amplitudes up to ~0.4 stay safely orientation-preserving.
    """
    modes: dict[int, complex] = {}
    for m in range(1, bandwidth + 1):
        phase = rng.uniform(0, 2 * np.pi)
        modes[m] = np.exp(1j * phase) / (1 + m) ** 2
    xs = np.linspace(0, 2 * np.pi, 512, endpoint=False)
    u_raw = np.zeros_like(xs)
    du_raw = np.zeros_like(xs)
    for m, c in modes.items():
        u_raw += 2.0 * (c * np.exp(1j * m * xs)).real
        du_raw += 2.0 * (1j * m * c * np.exp(1j * m * xs)).real
    scale = min(amplitude / np.max(np.abs(u_raw)),      # displacement target
                0.55 / np.max(np.abs(du_raw)))          # slope safety
    modes = {m: c * scale for m, c in modes.items()}
    if not based:
        modes[0] = rng.uniform(-0.5, 0.5)
        return Diffeo.from_modes(modes, based=False)
    g = Diffeo.from_modes(modes, based=False)
    modes[0] = -float(g.u.eval_scalar(np.array([0.0]))[0].real)
    return Diffeo.from_modes(modes, based=True)
