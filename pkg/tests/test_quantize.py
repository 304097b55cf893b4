import numpy as np
import pytest

import circleops as co
from circleops.quantize import (ModeGrid, OpMatrix, compose_consistency_norm,
                                diffeo_matrix, gl_res_witness, realize,
                                reflection_matrix, rotation_matrix,
                                sign_matrix, sign_zero_mode_correction,
                                smoothing_decay_profile, symbol_chain_diagonal)
from circleops.trigpoly import TrigPoly, random_real_trigpoly


def grid(n=16, theta=0.0, r=1):
    return ModeGrid(n, theta, r)


# -- realize -----------------------------------------------------------------


def test_realize_derivative_is_diagonal():
    g = grid()
    m = realize(co.sym_derivative(), g)
    want = np.diag(g.modes())
    # clamp policy touches only the |xi| < 1 evaluation, which for sigma(D)=xi
    # multiplies by xi itself... the mode 0 column evaluates xi at 1
    want[g.index(0), g.index(0)] = 1.0
    assert np.max(np.abs(m.entries - want)) < 1e-14


def test_realize_multiplication_shifts_modes():
    g = grid()
    m = realize(co.sym_multiplication(TrigPoly(1, {1: np.eye(1)})), g)
    for n in range(-16, 16):
        assert m.entries[g.index(n + 1), g.index(n)] == 1.0
    assert np.count_nonzero(m.entries) == 32


def test_realize_sign_policy_and_correction():
    g = grid()
    m = realize(co.sym_sign(), g)
    want = np.diag(np.where(g.modes() >= 0, 1.0, -1.0))
    assert np.max(np.abs(m.entries - want)) == 0.0
    corr = sign_zero_mode_correction(g)
    wantc = np.zeros((g.dim, g.dim))
    wantc[g.index(0), g.index(0)] = 1.0
    assert np.max(np.abs(corr.entries - wantc)) == 0.0


def test_realize_bandwidth_overflow():
    sym = co.sym_multiplication(TrigPoly(1, {40: np.eye(1)}))
    with pytest.raises(ValueError):
        realize(sym, grid(16))


def test_realize_twisted_sign_squares_to_minus_id():
    g = grid(12, 0.5)
    eps = realize(co.sym_sign_connection(), g)
    assert ((eps @ eps) + OpMatrix.identity(g)).max_abs() == 0.0


def test_chain_diagonal_matches_matrix_product():
    rng = np.random.default_rng(3)
    a = co.random_symbol(rng, 1, 4, 2)
    b = co.random_symbol(rng, 0, 4, 2)
    g = grid(32)
    prod = realize(a, g) @ realize(b, g)
    for n in (-20, -3, 0, 7, 19):
        got = symbol_chain_diagonal([a, b], n, 0.0)[0, 0]
        assert abs(got - prod.entries[g.index(n), g.index(n)]) < 1e-12


# -- diffeomorphism realization ---------------------------------------------------


def test_diffeo_matrix_identity_and_rotation():
    g = grid(12)
    assert (diffeo_matrix(co.Diffeo.identity(), g) - OpMatrix.identity(g)).max_abs() < 1e-13
    alpha = 0.7
    rot = diffeo_matrix(co.Diffeo.rotation(alpha), g)
    want = rotation_matrix(g, alpha)
    assert (rot - want).max_abs() < 1e-12


def test_diffeo_matrix_group_law_on_inner_modes():
    g1 = co.Diffeo.sine(0.3)
    g2 = co.Diffeo.sine(0.2, mode=2)
    N = 64
    g = grid(N)
    lhs = diffeo_matrix(g1, g) @ diffeo_matrix(g2, g)
    rhs = diffeo_matrix(g2.compose(g1), g)
    assert (lhs - rhs).inner(N // 2).op_norm() < 1e-10


def test_diffeo_matrix_decay_and_invertibility():
    g = co.Diffeo.sine(0.3)
    for n in (24, 48):
        m = diffeo_matrix(g, grid(n))
        rep = smoothing_decay_profile(m, zero_tol=1e-13)
        assert rep.band_support is not None
        assert np.linalg.cond(m.entries) < 1e8   # invertible at every tested cutoff


def test_diffeo_matrix_rejects_folds_and_unbased_twisted():
    with pytest.raises(ValueError):
        diffeo_matrix(co.Diffeo.rotation(0.3), grid(8, 0.5))
    ok = co.Diffeo.sine(0.2, based=True)
    diffeo_matrix(ok, grid(8, 0.5))  # based is fine


# -- decay profiles -----------------------------------------------------------------


def test_decay_profile_sign_commutator_exact_band():
    f = random_real_trigpoly(np.random.default_rng(5), 4)
    g = grid(32)
    k = sign_matrix(g).commutator(realize(co.sym_multiplication(f), g))
    rep = smoothing_decay_profile(k)
    assert rep.finite_support
    assert rep.mode_radius <= 4   # boundary pair (0, -M) carries the last entry
    assert rep.fitted_exponent == np.inf


def test_decay_profile_symbol_band_decay():
    # realize of an order -1 symbol with sampled (decaying) coefficients
    xs = np.linspace(0, 2 * np.pi, 256, endpoint=False)
    vals = 1.0 / (1.1 + np.cos(xs))
    f = TrigPoly.from_samples(vals.astype(complex), 24, tol=1e-14)
    sym = co.compose(co.sym_multiplication(f), co.sym_abs_power(-1), 2)
    rep = smoothing_decay_profile(realize(sym, grid(32)), zero_tol=1e-12)
    assert rep.mode_radius == 32          # full band matrix, not smoothing
    assert np.isfinite(rep.fitted_exponent) and rep.fitted_exponent > 1.0


def test_decay_profile_zero_matrix():
    rep = smoothing_decay_profile(OpMatrix.zero(grid(8)))
    assert rep.band_support is None and rep.finite_support


# -- GL_res ----------------------------------------------------------------------------


def test_gl_res_diffeo_bounded():
    g = co.Diffeo.sine(0.3)
    mats = [diffeo_matrix(g, grid(n)) for n in (32, 64, 128)]
    rep = gl_res_witness(mats)
    assert rep.verdict == "bounded-HS"
    assert rep.cauchy_defect < 1e-8


def test_gl_res_reflection_grows_like_sqrt():
    mats = [reflection_matrix(grid(n)) for n in (32, 64, 128)]
    rep = gl_res_witness(mats)
    assert rep.verdict == "growing-HS"
    assert abs(rep.growth_rate - 0.5) < 0.01
    for n, h in zip(rep.cutoffs, rep.hs_norms):
        assert abs(h ** 2 - 8 * n) < 1e-9      # entries +-2 at 2n straddling pairs


def test_gl_res_order_zero_symbol_bounded():
    rng = np.random.default_rng(6)
    sym = co.random_symbol(rng, 0, 3, 2)
    mats = [realize(sym, grid(n)) for n in (32, 64, 128)]
    rep = gl_res_witness(mats)
    assert rep.verdict == "bounded-HS"


def test_gl_res_input_validation():
    g = co.Diffeo.sine(0.2)
    with pytest.raises(ValueError):
        gl_res_witness([diffeo_matrix(g, grid(16))])
    with pytest.raises(ValueError):
        gl_res_witness([diffeo_matrix(g, grid(n)) for n in (32, 16, 64)])


# -- symbol/matrix consistency -----------------------------------------------------------


def test_compose_consistency_slope_improves_with_depth():
    rng = np.random.default_rng(7)
    a = co.random_symbol(rng, 0, 10, 1)
    b = co.random_symbol(rng, 0, 10, 1)
    slopes = {}
    for depth in (4, 8):
        ns = [16, 32, 64, 128]
        norms = [compose_consistency_norm(a, b, depth, n) for n in ns]
        slopes[depth] = np.polyfit(np.log(ns), np.log(norms), 1)[0]
        assert slopes[depth] <= -depth + 0.5
    assert slopes[8] < slopes[4]


def test_smoothing_trace_independent_of_cutoff():
    rng = np.random.default_rng(8)
    f = random_real_trigpoly(rng, 3)
    traces, sq_traces = [], []
    for n in (8, 16, 64):
        g = grid(n)
        k = sign_matrix(g).commutator(realize(co.sym_multiplication(f), g))
        traces.append(k.trace())
        corner = k.inner(4)                   # extract the exact support
        sq_traces.append((corner @ corner).trace())
    assert traces[0] == traces[1] == traces[2]
    assert sq_traces[0] == sq_traces[1] == sq_traces[2]


# -- persistence ----------------------------------------------------------------------------


def test_opmatrix_exact_roundtrip(tmp_path):
    rng = np.random.default_rng(9)
    g = grid(6, 0.5, 2)
    m = OpMatrix(g, rng.standard_normal((g.dim, g.dim))
                 + 1j * rng.standard_normal((g.dim, g.dim)))
    path = tmp_path / "op.csv"
    m.save(str(path))
    back = OpMatrix.load(str(path))
    assert back.grid == m.grid
    assert np.array_equal(back.entries, m.entries)
