import mpmath
import numpy as np
import pytest

import circleops as co
from circleops.quantize import ModeGrid, OpMatrix, realize, sign_matrix
from circleops.trigpoly import TrigPoly, random_real_trigpoly
from circleops.zetatrace import (ContinuationError, LaurentAtZero,
                                 TraceOperand, abs_weight, laplace_weight)

mpmath.mp.dps = 30

Q = laplace_weight(1.0)
QABS = abs_weight()


def rank_one_projector(mode=0, cutoff=8, theta=0.0):
    g = ModeGrid(cutoff, theta, 1)
    e = np.zeros((g.dim, g.dim), dtype=complex)
    i = g.index(mode)
    e[i, i] = 1.0
    return OpMatrix(g, e)


# -- weights ------------------------------------------------------------------


def test_weight_validation():
    w = laplace_weight(4.0)
    assert w.spectral(3.0) == 13.0
    assert QABS.spectral(0.0) == 1.0 and QABS.spectral(-2.0) == 2.0
    with pytest.raises(ValueError):
        co.Weight("bad", "poly2", 2, 0.0, -1.0)
    with pytest.raises(ValueError):
        co.Weight("bad", "gauss", 2, 0.0, 1.0)


def test_weight_classical_tail_matches_spectral():
    for w in (Q, QABS, laplace_weight(9.0)):
        xi = 1e3
        tail = w.classical_tail().eval(0.1, xi)[0, 0].real
        assert abs(tail - w.spectral(xi)) <= 1e-6 * w.spectral(xi)


# -- Laurent arithmetic ----------------------------------------------------------


def test_laurent_arithmetic_closure():
    a = LaurentAtZero(1.0, 2.0, 3.0)
    b = LaurentAtZero(0.0, 5.0, 7.0)
    s = a + b
    assert (s.cm1, s.c0, s.c1) == (1.0, 7.0, 10.0)
    p = a * b
    # (1/s + 2 + 3s)(5 + 7s): pole 5/s, const 7 + 10, linear 14 + 15 (s^2 dropped)
    assert (p.cm1, p.c0, p.c1) == (5.0, 17.0, 29.0)
    with pytest.raises(ArithmeticError):
        _ = a * a                      # double pole not representable


# -- direct zeta ---------------------------------------------------------------------


def test_zeta_direct_rank_one_projector():
    k = rank_one_projector()
    for s in (0.5, 2.0, 3.7):
        assert abs(co.zeta_direct(k, Q, complex(s)) - 1.0) < 1e-14


def test_zeta_direct_identity_vs_bruteforce():
    # brute-force oracle, written independently of the library path
    ns = np.arange(-200000, 200001)
    oracle = np.sum((1.0 + ns.astype(float) ** 2) ** -2.0)
    got = co.zeta_direct(co.sym_identity(), Q, 2.0 + 0j)
    assert abs(got - oracle) < 1e-10


def test_zeta_direct_abs_inverse():
    ns = np.arange(1, 400001).astype(float)
    oracle = 2.0 * np.sum(ns ** -1.0 * (1.0 + ns ** 2) ** -1.0) + 1.0  # +1: zero-mode policy
    got = co.zeta_direct(co.sym_abs_power(-1), Q, 1.0 + 0j)
    assert abs(got - oracle) < 1e-9


def test_zeta_direct_rejects_divergent_region():
    with pytest.raises(ValueError):
        co.zeta_direct(co.sym_identity(), Q, 0.3 + 0j)


# -- Laurent continuation ----------------------------------------------------------------


def test_zeta_laurent_smoothing_is_plain_trace():
    k = rank_one_projector()
    lau = co.zeta_laurent(k, Q)
    assert lau.cm1 == 0.0
    assert abs(lau.c0 - 1.0) < 1e-15
    assert abs(lau.c1 - 0.0) < 1e-15      # log q(0) = 0 for this weight


def test_zeta_laurent_abs_inverse_calibration():
    lau = co.zeta_laurent(co.sym_abs_power(-1), Q)
    assert abs(lau.cm1 - 1.0) < 1e-14
    # independent oracle for the residue: 2 zeta(1+2s) has residue 1 at s=0
    resid = complex(mpmath.mpf(2) * mpmath.zeta(1 + 2 * mpmath.mpf("1e-12")) * mpmath.mpf("1e-12"))
    assert abs(lau.cm1 - resid.real) < 1e-9
    assert abs(co.wodzicki_res(co.sym_abs_power(-1)) - Q.order * lau.cm1) < 1e-14


def test_zeta_laurent_finite_part_oracle():
    # c0 of |D|^{-1} against an mpmath continuation of 2 sum n^{-1}(1+n^2boxed)^{-s}:
    # 2 sum_{j} binom(-s,j) zeta(1+2s+2j) + 1 (zero mode), finite part at s -> 0
    def f(s):
        acc = mpmath.mpf(1)          # zero-mode policy value
        for j in range(0, 60):
            acc += 2 * mpmath.binomial(-s, j) * mpmath.zeta(1 + 2 * s + 2 * j)
        return acc
    s = mpmath.mpf("1e-9")
    finite = (f(s) + f(-s)) / 2      # even average kills the 1/s pole
    lau = co.zeta_laurent(co.sym_abs_power(-1), Q)
    assert abs(lau.c0 - float(finite)) < 1e-8


def test_zeta_laurent_odd_symbol_has_no_pole():
    lau = co.zeta_laurent(co.sym_derivative(), Q)
    assert lau.cm1 == 0.0


def test_zeta_laurent_rejects_log_symbols():
    with pytest.raises(ContinuationError):
        co.zeta_laurent(co.sym_log_laplacian_weight(1.0, 4), Q)


def test_zeta_laurent_rejects_shallow_exact_diag():
    rng = np.random.default_rng(1)
    a = co.random_symbol(rng, 1, 2, 1)       # trusted only to degree 0
    op = TraceOperand.from_product([a, co.sym_identity()], 2)
    with pytest.raises(ContinuationError):
        co.zeta_laurent(op, Q)


def test_pole_residue_coherence_randomized():
    rng = np.random.default_rng(2)
    for _ in range(25):
        order = int(rng.integers(-2, 2))
        a = co.random_symbol(rng, order, 6, 2)
        lau = co.zeta_laurent(a, Q)
        res = co.wodzicki_res(a)
        assert abs(Q.order * lau.cm1 - res) < 1e-8 * max(1.0, abs(res))


def test_theta_half_uses_hurwitz_and_smoothing_theta_independent():
    qh = laplace_weight(1.0, offset=0.5)
    lau = co.zeta_laurent(co.sym_abs_power(-1), qh)
    assert abs(lau.cm1 - 1.0) < 1e-12        # residue is sector-independent
    k0 = rank_one_projector(0, 8, 0.0)
    kh = rank_one_projector(0, 8, 0.5)
    assert abs(co.tr_q(k0, Q) - co.tr_q(kh, qh)) < 1e-14


# -- renormalized trace ---------------------------------------------------------------------


def test_tr_q_smoothing_equals_plain_trace():
    rng = np.random.default_rng(3)
    g = ModeGrid(6, 0.0, 1)
    k = OpMatrix(g, rng.standard_normal((g.dim, g.dim)) * 0.5)
    for w in (Q, QABS):
        assert abs(co.tr_q(k, w) - k.trace()) < 1e-12


def test_tr_q_identity_value():
    assert abs(co.tr_q(co.sym_identity(), Q)) < 1e-14


def test_tr_q_conjugation_invariance():
    rng = np.random.default_rng(4)
    f = TrigPoly(1, {0: np.array([[2.0]]), 1: np.array([[0.3 + 0.1j]]),
                     -1: np.array([[0.3 - 0.1j]])})
    xs = np.linspace(0, 2 * np.pi, 256, endpoint=False)
    f_inv = TrigPoly.from_samples(1.0 / f.eval_scalar(xs), 48, tol=1e-17)
    c = co.sym_multiplication(f)
    c_inv = co.sym_multiplication(f_inv)
    for _ in range(3):
        a = co.random_symbol(rng, 1, 9, 2)
        base = co.tr_q(a, Q)
        conj = co.tr_q_conjugated(a, c, c_inv, Q, depth=9)
        assert abs(base - conj) < 1e-7 * max(1.0, abs(base))
        assert abs(co.wodzicki_res(a) - co.wodzicki_res(co.conjugated_symbol(a, c, c_inv, 9))) < 1e-9


# -- heat oracle -------------------------------------------------------------------------------


def test_heat_trace_rank_one():
    k = rank_one_projector(mode=3)
    t = 0.37
    assert abs(co.heat_trace(k, Q, t) - np.exp(-t * 10.0)) < 1e-14
    rep = co.heat_trace_oracle(k, Q)
    assert rep.verdict == "ok"
    assert abs(rep.finite_part - 1.0) < 1e-6


def test_heat_zeta_cross_oracle_identity():
    rep = co.heat_trace_oracle(co.sym_identity(), Q)
    assert abs(rep.finite_part - co.tr_q(co.sym_identity(), Q).real) < 1e-4


def test_heat_conjugation_equal_traces():
    # matrix-level instance: A' = C^{-1} A C, Q' = C^{-1} Q C have the same
    # heat traces, hence the same renormalized trace and residue
    rng = np.random.default_rng(5)
    f = random_real_trigpoly(rng, 2) * 0.2 + TrigPoly.constant(2.0)
    n = 96
    g = ModeGrid(n, 0.0, 1)
    c = realize(co.sym_multiplication(f), g).entries
    c_inv = np.linalg.inv(c)
    a = realize(co.random_symbol(rng, 0, 4, 2), g).entries
    qdiag = Q.spectral(g.modes())
    for t in (0.05, 0.2):
        base = np.sum(np.diag(a) * np.exp(-t * qdiag))
        conj = np.trace(c_inv @ a @ c @ c_inv @ np.diag(np.exp(-t * qdiag)) @ c)
        assert abs(base - conj) < 1e-9 * max(1.0, abs(base))


def __mul__tp(a, s):
    return a.scaled(s)


# -- Kontsevich-Vishik trace -------------------------------------------------------------------


def test_kv_differential_operator_defined():
    v = co.kontsevich_vishik_trace(co.sym_derivative())
    assert abs(v.imag) < 1e-12


def test_kv_mean_zero_multiplication_vanishes():
    f = TrigPoly(1, {2: np.array([[0.5]]), -2: np.array([[0.5]])})
    assert abs(co.kontsevich_vishik_trace(co.sym_multiplication(f))) < 1e-12


def test_kv_vanishes_on_odd_brackets():
    rng = np.random.default_rng(6)
    for _ in range(3):
        a = co.random_symbol(rng, 1, 8, 2, parity="odd")
        b = co.random_symbol(rng, 0, 8, 2, parity="odd")
        c = co.commutator(a, b, 8)
        assert co.parity_class(c) == "odd"
        assert abs(co.kontsevich_vishik_trace(c)) < 1e-6


def test_kv_rejects_non_odd_inputs():
    with pytest.raises(ValueError):
        co.kontsevich_vishik_trace(co.sym_abs_derivative())
    with pytest.raises(ValueError):
        co.kontsevich_vishik_trace(co.sym_derivative(), (Q, QABS))


# -- bracket identities --------------------------------------------------------------------------


def test_bracket_trace_multiplication_pair_vanishes():
    f = random_real_trigpoly(np.random.default_rng(7), 2)
    g = random_real_trigpoly(np.random.default_rng(8), 2)
    lhs, rhs, delta = co.bracket_trace_check(co.sym_multiplication(f),
                                             co.sym_multiplication(g), Q, depth=6)
    assert abs(lhs) < 1e-10 and abs(rhs) < 1e-10 and delta < 1e-10


def test_bracket_trace_two_routes_agree():
    rng = np.random.default_rng(9)
    for _ in range(4):
        a = co.random_symbol(rng, 1, 10, 2)
        b = co.random_symbol(rng, 1, 10, 2)
        lhs, rhs, delta = co.bracket_trace_check(a, b, Q, depth=10)
        assert delta < 1e-7 * max(1.0, abs(lhs))


def test_bracket_trace_compact_with_order_zero_vanishes():
    rng = np.random.default_rng(10)
    for _ in range(4):
        a = co.random_symbol(rng, -1, 9, 2)
        b = co.random_symbol(rng, 0, 9, 2)
        lhs, _, _ = co.bracket_trace_check(a, b, Q, depth=9)
        assert abs(lhs) < 1e-7


def test_bracket_vanishes_when_log_bracket_is_deep():
    # tr^Q[A, B] = 0 whenever [B, log Q] has order <= -2 - ord(A):
    # B a Fourier multiplier commutes with log Q identically
    rng = np.random.default_rng(11)
    a = co.random_symbol(rng, 1, 9, 2)
    b = co.sym_abs_power(-1)
    assert co.bracket_log_weight(b, Q, 6).is_zero()
    lhs = co.tr_q(TraceOperand.from_commutator(a, b, 9), Q)
    assert abs(lhs) < 1e-8


# -- trace polynomials -----------------------------------------------------------------------------


def test_trace_power_projector():
    k = rank_one_projector()
    assert abs(co.matrix_power_trace(k, 3, Q) - 1.0) < 1e-13


def test_trace_power_conjugation_invariance():
    rng = np.random.default_rng(12)
    f = TrigPoly(1, {0: np.array([[2.0]]), 1: np.array([[0.25]]), -1: np.array([[0.25]])})
    xs = np.linspace(0, 2 * np.pi, 256, endpoint=False)
    f_inv = TrigPoly.from_samples(1.0 / f.eval_scalar(xs), 48, tol=1e-17)
    c, c_inv = co.sym_multiplication(f), co.sym_multiplication(f_inv)
    a = co.random_symbol(rng, 0, 8, 2)
    base = co.trace_power(a, 2, Q, depth=8)
    a2 = co.compose(co.conjugated_symbol(a, c, c_inv, 8),
                    co.conjugated_symbol(a, c, c_inv, 8), 8)
    op = TraceOperand(symbol=a2, diag_fn=lambda n, off: complex(np.trace(
        co.symbol_chain_diagonal([c_inv, a, a, c], n, off))))
    lau = co.zeta_laurent(op, Q)
    logdiff = co.weight_log_correction(c, c_inv, Q, 8)
    conj = lau.c0 - co.wodzicki_res(co.compose(a2, logdiff, 8)) / Q.order
    assert abs(base - conj) < 1e-6 * max(1.0, abs(base))


def test_trace_power_sign_square_and_zero_mode_correction():
    # realize(sign)^2 = Id under the clamp policy; the kernel-zero operator
    # squares to Id - P_0, shifting tr^Q by exactly -1
    clamp = co.trace_power(co.sym_sign(), 2, Q, depth=4)
    assert abs(clamp - co.tr_q(co.sym_identity(), Q)) < 1e-12
    g = ModeGrid(16, 0.0, 1)
    eps_kz = sign_matrix(g, "kernel_zero")
    sq = eps_kz @ eps_kz
    p0 = OpMatrix.identity(g) - sq
    corrected = co.tr_q(TraceOperand.from_symbol(co.sym_identity()).with_smoothing(
        p0.scaled(-1.0)), Q)
    assert abs(corrected - (clamp - 1.0)) < 1e-12
