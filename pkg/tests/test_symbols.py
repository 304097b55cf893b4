import math

import numpy as np
import pytest

import circleops as co
from circleops.symbols import FormalSymbol, NEG_INF
from circleops.trigpoly import TrigPoly, random_real_trigpoly


def mode_poly(m, value=1.0):
    return TrigPoly(1, {m: np.array([[value]], dtype=complex)})


def sym_mode(m, value=1.0):
    return co.sym_multiplication(mode_poly(m, value))


# -- composition -------------------------------------------------------------


def test_compose_derivative_squared():
    d2 = co.compose(co.sym_derivative(), co.sym_derivative(), 3)
    assert d2.degrees() == [2]
    comp = d2.component(2, 0)
    assert comp.plus.mean()[0, 0] == 1.0
    assert comp.minus.mean()[0, 0] == 1.0  # xi^2 = |xi|^2 on both branches


def test_compose_leibniz_with_multiplication():
    # D(e^{ix} f) = e^{ix}(1 + D)f
    prod = co.compose(co.sym_derivative(), sym_mode(1), 4)
    lead = prod.component(1, 0)
    sub = prod.component(0, 0)
    assert abs(lead.plus.coeff(1)[0, 0] - 1.0) < 1e-15
    assert abs(lead.minus.coeff(1)[0, 0] + 1.0) < 1e-15
    assert abs(sub.plus.coeff(1)[0, 0] - 1.0) < 1e-15
    assert abs(sub.minus.coeff(1)[0, 0] - 1.0) < 1e-15


def test_compose_sign_idempotent():
    eps = co.sym_sign()
    sq = co.compose(eps, eps, 5)
    assert sq.degrees() == [0]
    assert sq.component(0, 0).plus.mean()[0, 0] == 1.0
    assert sq.component(0, 0).minus.mean()[0, 0] == 1.0


def test_compose_requires_matching_rank_and_positive_depth():
    with pytest.raises(ValueError):
        co.compose(co.sym_derivative(1), co.sym_derivative(2), 3)
    with pytest.raises(ValueError):
        co.compose(co.sym_derivative(), co.sym_derivative(), 0)


def test_compose_associativity_randomized():
    rng = np.random.default_rng(7)
    for _ in range(6):
        a = co.random_symbol(rng, 1, 6, 2)
        b = co.random_symbol(rng, 0, 6, 2)
        c = co.random_symbol(rng, -1, 6, 2)
        left = co.compose(co.compose(a, b, 6), c, 6)
        right = co.compose(a, co.compose(b, c, 6), 6)
        keys = set(left.components) & set(right.components)
        assert keys, "no common trusted components"
        for k in keys:
            lp, lm = left.components[k]
            rp, rm = right.components[k]
            assert (lp - rp).max_abs() < 1e-12 * max(1.0, lp.max_abs())
            assert (lm - rm).max_abs() < 1e-12 * max(1.0, lm.max_abs())


def test_compose_watermark_tracks_inputs():
    rng = np.random.default_rng(8)
    a = co.random_symbol(rng, 1, 4, 1)          # trusted down to -2
    b = co.sym_derivative()                     # exact
    prod = co.compose(a, b, 10)
    assert prod.valid_down == a.valid_down + b.order
    exact = co.compose(b, b, 4)
    assert exact.valid_down == 2 - 4 + 1


# -- linear combinations and commutators ----------------------------------------


def test_linear_combine_cancels():
    rng = np.random.default_rng(9)
    a = co.random_symbol(rng, 1, 5, 2)
    z = co.linear_combine([(1.0, a), (-1.0, a)])
    assert z.is_zero()


def test_commutator_with_multiplication():
    # [D, M_{e^{ix}}] = M_{e^{ix}}
    c = co.commutator(co.sym_derivative(), sym_mode(1), 4)
    assert c.degrees() == [0]
    comp = c.component(0, 0)
    assert abs(comp.plus.coeff(1)[0, 0] - 1.0) < 1e-15
    assert abs(comp.minus.coeff(1)[0, 0] - 1.0) < 1e-15


def test_commutator_with_sign_vanishes():
    rng = np.random.default_rng(10)
    eps = co.sym_sign()
    for depth in (2, 5, 9):
        a = co.random_symbol(rng, 1, depth + 2, 2)
        c = co.commutator(eps, a, depth)
        assert c.is_zero()


# -- splitting ---------------------------------------------------------------------


def test_split_projection_of_proj_plus():
    p = co.sym_proj_plus()
    assert co.split_plus(p).allclose(p)
    assert co.split_minus(p).is_zero()


def test_split_partition_randomized():
    rng = np.random.default_rng(11)
    a = co.random_symbol(rng, 1, 5, 3)
    back = co.linear_combine([(1.0, co.split_plus(a)), (1.0, co.split_minus(a))])
    assert back.allclose(a, 1e-15)


def test_split_is_algebra_endomorphism():
    rng = np.random.default_rng(12)
    a = co.random_symbol(rng, 1, 5, 2)
    b = co.random_symbol(rng, 0, 5, 2)
    lhs = co.split_plus(co.compose(a, b, 5))
    rhs = co.compose(co.split_plus(a), co.split_plus(b), 5)
    assert lhs.allclose(rhs, 1e-12)
    assert co.split_plus(co.split_minus(a)).is_zero()


def test_split_plus_is_multiplication_by_projection():
    rng = np.random.default_rng(13)
    a = co.random_symbol(rng, 1, 5, 2)
    p = co.sym_proj_plus()
    left = co.compose(p, a, 5)
    right = co.compose(a, p, 5)
    target = co.split_plus(a)
    assert left.allclose(target, 1e-12)
    assert right.allclose(target, 1e-12)


# -- parity ------------------------------------------------------------------------


def test_parity_examples():
    assert co.parity_class(co.sym_derivative()) == "odd"
    assert co.parity_class(co.sym_abs_derivative()) == "even"
    assert co.parity_class(co.sym_identity()) == "odd"
    assert co.parity_class(co.sym_proj_plus()) == "neither"


def test_parity_closure_table():
    rng = np.random.default_rng(14)
    table = {("odd", "odd"): "odd", ("even", "even"): "odd",
             ("odd", "even"): "even", ("even", "odd"): "even"}
    for (pa, pb), want in table.items():
        a = co.random_symbol(rng, 1, 4, 2, parity=pa)
        b = co.random_symbol(rng, 0, 4, 2, parity=pb)
        assert co.parity_class(co.compose(a, b, 4)) == want


def test_parity_rejects_log_symbols():
    with pytest.raises(ValueError):
        co.parity_class(co.sym_log_laplacian_weight(1.0, 3))


# -- residue ------------------------------------------------------------------------


def test_residue_examples():
    assert co.wodzicki_res(co.sym_identity()) == 0
    # xi^{-1}: plus branch +1, minus branch -1, cancels
    inv_d = FormalSymbol(-1, 1, {(-1, 0): (mode_poly(0, 1.0), mode_poly(0, -1.0))})
    assert co.wodzicki_res(inv_d) == 0
    assert co.wodzicki_res(co.sym_abs_power(-1)) == 2.0


def test_residue_rejects_log_at_minus_one():
    bad = FormalSymbol(-1, 1, {(-1, 1): (mode_poly(0), mode_poly(0))})
    with pytest.raises(ValueError):
        co.wodzicki_res(bad)


def test_residue_rejects_untrusted_depth():
    shallow = FormalSymbol(1, 1, {(1, 0): (mode_poly(0), mode_poly(0))}, valid_down=1)
    with pytest.raises(ValueError):
        co.wodzicki_res(shallow)


def test_residue_is_a_trace_on_computed_brackets():
    rng = np.random.default_rng(15)
    for _ in range(8):
        a = co.random_symbol(rng, 1, 8, 2)
        b = co.random_symbol(rng, 0, 8, 2)
        val = co.wodzicki_res(co.commutator(a, b, 8))
        assert abs(val) < 1e-12


# -- builtins -------------------------------------------------------------------------


def test_builtin_values():
    p = co.builtin("proj_plus")
    assert p.component(0, 0).plus.mean()[0, 0] == 1.0
    assert p.component(0, 0).minus.is_zero()
    en = co.builtin("sign_connection")
    assert en.component(0, 0).plus.mean()[0, 0] == 1j
    assert en.component(0, 0).minus.mean()[0, 0] == -1j
    with pytest.raises(ValueError):
        co.builtin("no_such_symbol")


def test_log_weight_structure_and_value():
    lw = co.sym_log_laplacian_weight(1.0, depth=3)
    logs = [(d, j) for (d, j) in lw.components if j > 0]
    assert logs == [(0, 1)]
    assert lw.component(0, 1).plus.mean()[0, 0] == 2.0
    # truncated value at xi = 2 vs log(1 + xi^2), gap bounded by the next term
    val = lw.eval(0.0, 2.0)[0, 0].real
    expect = 2 * math.log(2) + 1 / 4 - 1 / 32 + 1 / 192
    assert abs(val - expect) < 1e-14
    next_term = 2.0 ** (-8) / 4
    assert abs(val - math.log(5.0)) <= next_term


# -- bracket with the log of a weight ---------------------------------------------------


class _FakeWeight:
    def __init__(self, shift=1.0):
        self.shift = shift

    def log_symbol(self, depth, rank=1):
        return co.sym_log_laplacian_weight(self.shift, depth, rank)


def test_bracket_log_weight_multiplication_leading_term():
    # [M_f, log Q] at leading order: -(d/dxi 2log|xi|) * D_x f = -(2/xi) D_x f
    f = mode_poly(1)
    out = co.bracket_log_weight(co.sym_multiplication(f), _FakeWeight(), 3)
    assert out.order == -1
    lead = out.component(-1, 0)
    # plus branch: -2 * (D_x f) = -2 * 1 * e^{ix}; minus branch sign flips
    assert abs(lead.plus.coeff(1)[0, 0] - (-2.0)) < 1e-14
    assert abs(lead.minus.coeff(1)[0, 0] - 2.0) < 1e-14


def test_bracket_log_weight_central_inputs():
    assert co.bracket_log_weight(co.sym_identity(), _FakeWeight(), 6).is_zero()
    assert co.bracket_log_weight(co.sym_derivative(), _FakeWeight(), 6).is_zero()


def test_bracket_log_weight_order_drop():
    rng = np.random.default_rng(16)
    b = co.random_symbol(rng, 1, 8, 2)
    out = co.bracket_log_weight(b, _FakeWeight(), 6)
    assert out.order == b.order - 1
    assert out.is_classical()
    assert all(d <= b.order - 1 for d in out.degrees())


# -- homogeneity and evaluation -----------------------------------------------------------


def test_component_homogeneity():
    rng = np.random.default_rng(17)
    a = co.random_symbol(rng, 2, 4, 2)
    for lam in (2.0, 3.7):
        for (d, j), (p, m) in a.components.items():
            comp = a.component(d, j)
            base = comp.eval(0.4, 1.3)
            scaled = comp.eval(0.4, lam * 1.3)
            assert np.allclose(scaled, base * lam ** d, rtol=1e-12)


def test_eval_rejects_zero_xi():
    with pytest.raises(ValueError):
        co.sym_derivative().component(1, 0).eval(0.0, 0.0)


# -- pushforward ------------------------------------------------------------------------


def test_pushforward_identity_fixes_symbol():
    rng = np.random.default_rng(18)
    a = co.random_symbol(rng, 1, 3, 2)
    out = co.pushforward_diffeo_leading(a, co.Diffeo.identity(), corrections=1)
    for k in a.components:
        if k[0] >= out.valid_down:
            p, m = a.components[k]
            q, n = out.components[k]
            assert (p - q).max_abs() < 1e-10
            assert (m - n).max_abs() < 1e-10


def test_pushforward_rotation_twists_modes():
    alpha = 0.6
    f = random_real_trigpoly(np.random.default_rng(19), 3)
    out = co.pushforward_diffeo_leading(co.sym_multiplication(f), co.Diffeo.rotation(alpha))
    got = out.component(0, 0).plus
    for m, c in f.coeffs.items():
        assert abs(got.coeff(m)[0, 0] - c[0, 0] * np.exp(-1j * m * alpha)) < 1e-12


def test_pushforward_derivative_mean_against_quadrature():
    g = co.Diffeo.sine(0.3)
    out = co.pushforward_diffeo_leading(co.sym_derivative(), g)
    lead = out.component(1, 0).plus.mean()[0, 0]
    # independent quadrature of the transported coefficient g'(g^{-1}(x))
    xs = np.linspace(0, 2 * np.pi, 4096, endpoint=False)
    oracle = np.mean(g.derivative_values(g.inverse_values(xs)))
    assert abs(lead - oracle) < 1e-10


def test_pushforward_conjugation_matrix_oracle():
    rng = np.random.default_rng(20)
    g = co.Diffeo.sine(0.25)
    N = 64
    grid = co.ModeGrid(N, 0.0, 1)
    tg = co.diffeo_matrix(g, grid)
    tg_inv = co.diffeo_matrix(g.inverse(), grid)
    f = random_real_trigpoly(rng, 2)
    for sym in (co.sym_derivative(), co.sym_multiplication(f)):
        pf = co.pushforward_diffeo_leading(sym, g, corrections=1)
        lhs = co.realize(pf, grid)
        rhs = tg_inv @ co.realize(sym, grid) @ tg
        err = (lhs - rhs).mask_core(N // 4).inner(N // 2).op_norm()
        assert err < 1e-7


def test_pushforward_requires_classical():
    with pytest.raises(ValueError):
        co.pushforward_diffeo_leading(co.sym_log_abs(), co.Diffeo.sine(0.1))
