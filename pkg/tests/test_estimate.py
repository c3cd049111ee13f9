import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from macov.estimate import (
    ConvergenceWarning,
    LseProblem,
    MleProblem,
    covariance_matrix,
    innovations_d1,
    lse_critical_system,
    lse_solve,
    ml_critical_points,
    ml_degree_count,
    mle_exact_ma1_n2,
    mle_grad,
    mle_loglik,
    mle_solve_homotopy,
    mle_solve_local,
    simulation_study,
)
from macov.fields import FieldGrid
from macov.lattice import AcovTable, CoefGrid, gamma_map


def dense_loglik(a, n, Y) -> float:
    S = covariance_matrix(CoefGrid(a.order, a.values), n)
    sign, logdet = np.linalg.slogdet(S)
    return -0.5 * logdet - 0.5 * Y @ np.linalg.solve(S, Y)


def ma1_n2_loglik(a0, a1, y1, y2):
    """Two-point MA(1) likelihood written out by hand."""
    g0, g1 = a0 * a0 + a1 * a1, a0 * a1
    det = g0 * g0 - g1 * g1
    return -0.5 * np.log(det) - 0.5 * (g0 * (y1 * y1 + y2 * y2) - 2 * g1 * y1 * y2) / det


def example_target() -> AcovTable:
    # printed tuple (g00, g10, g01, g11, g1m1) rearranged into canonical half-lag order
    return AcovTable((1, 1), [86.6439, -34.2433, -17.3195, 19.1877, 6.6726])


# ---------------------------------------------------------------- least squares


def test_lse_system_shape_and_exact_root():
    a = np.array([1.0, 0.4])
    p = LseProblem(1, gamma_map(CoefGrid(1, a)))
    sys = lse_critical_system(p)
    assert len(sys) == 2 and sys.degrees == [3, 3]
    assert sys.residual(a) < 1e-14
    sys11 = lse_critical_system(LseProblem((1, 1), example_target()))
    assert sys11.bezout == 81


def test_lse_system_is_gradient():
    rng = np.random.default_rng(4)
    p = LseProblem((1, 1), example_target())
    sys = lse_critical_system(p)
    a = rng.normal(size=4) * 3
    f = lambda x: 0.5 * np.sum((gamma_map(CoefGrid((1, 1), x)).values - p.target.values) ** 2)
    h = 1e-5 * np.linalg.norm(a)
    fd = np.array([(f(a + h * e) - f(a - h * e)) / (2 * h) for e in np.eye(4)])
    np.testing.assert_allclose(sys(a).real, fd, rtol=1e-6, atol=1e-6 * np.abs(fd).max())


def test_lse_on_variety():
    a = np.random.default_rng(8).normal(size=4)
    g = gamma_map(CoefGrid((1, 1), a))
    rep = lse_solve(LseProblem((1, 1), g))
    np.testing.assert_allclose(rep.selected_image.values, g.values, atol=1e-7 * np.linalg.norm(g.values))
    assert rep.selected_objective < 1e-7


def test_lse_d1_returns_target():
    a = np.array([1.0, 0.6, -0.3])
    g = gamma_map(CoefGrid(2, a)).values + np.array([0.01, -0.005, 0.002])
    rep = lse_solve(LseProblem(2, AcovTable(2, g)))
    np.testing.assert_allclose(rep.selected_image.values, g, atol=1e-8)


def test_lse_selects_closest_real_image():
    rep = lse_solve(LseProblem((1, 1), example_target()))
    sel = rep.selected_objective
    assert all(sel <= rep.objective[i] + 1e-12 for i in rep.real_image_indices)
    assert all(sel <= rep.objective[i] + 1e-12 for i in rep.real_indices)
    obj = rep.to_json()
    for key in ("critical_points", "real_indices", "selected", "objective", "path_stats"):
        assert key in obj


def test_lse_weights_validation():
    with pytest.raises(ValueError):
        LseProblem((1, 1), example_target(), weights=[1, 1, 1, 1, 0])
    with pytest.raises(ValueError):
        LseProblem(1, example_target())


@pytest.mark.slow
def test_projection_improves_recovery():
    rng = np.random.default_rng(2024)
    wins = 0
    for _ in range(100):
        a = rng.normal(size=4)
        g = gamma_map(CoefGrid((1, 1), a)).values
        u = rng.normal(size=5)
        ghat = g + 0.05 * np.linalg.norm(g) * u / np.linalg.norm(u)
        star = lse_solve(LseProblem((1, 1), AcovTable((1, 1), ghat))).selected_image.values
        wins += np.linalg.norm(g - star) <= np.linalg.norm(g - ghat)
    assert wins >= 80


# ---------------------------------------------------------------- likelihood


def test_loglik_identity_covariance():
    Y = np.array([0.3, -1.2])
    p = MleProblem(1, Y)
    assert mle_loglik([1.0, 0.0], p) == pytest.approx(-0.5 * np.sum(Y**2))


def test_covariance_layout_ma11_2x2():
    a = CoefGrid((1, 1), [7, -5, 3, 1])
    g = gamma_map(a)
    g00, g01, g1m1, g10, g11 = (g((0, 0)), g((0, 1)), g((1, -1)), g((1, 0)), g((1, 1)))
    expected = np.array(
        [
            [g00, g01, g10, g11],
            [g01, g00, g1m1, g10],
            [g10, g1m1, g00, g01],
            [g11, g10, g01, g00],
        ]
    )
    np.testing.assert_array_equal(covariance_matrix(a, (2, 2)), expected)


@pytest.mark.parametrize(
    "q,n", [((1,), (12,)), ((2,), (9,)), ((1, 1), (3, 4)), ((1, 2), (3, 3)), ((2, 1), (4, 3))]
)
def test_banded_matches_dense(q, n):
    rng = np.random.default_rng(len(q) * 10 + sum(n))
    for _ in range(5):
        a = CoefGrid(q, rng.normal(size=tuple(v + 1 for v in q)))
        Y = rng.normal(size=n)
        p = MleProblem(q, FieldGrid(Y))
        assert abs(mle_loglik(a, p) - dense_loglik(a, n, Y.ravel())) <= 1e-10 * (1 + abs(dense_loglik(a, n, Y.ravel())))


def test_infeasible_is_minus_inf():
    p = MleProblem(1, [1.0, 2.0])
    assert mle_loglik([0.0, 0.0], p) == -np.inf


def test_mle_problem_validation():
    with pytest.raises(ValueError):
        MleProblem(1, [1.0])
    with pytest.raises(ValueError):
        MleProblem((1, 1), [1.0, 2.0, 3.0])
    assert MleProblem(1, [1.0, -1.0]).bound == pytest.approx(10.0)


def test_grad_matches_analytic_n2():
    y = (0.7, -1.3)
    p = MleProblem(1, list(y))
    a = np.array([0.9, 0.4])
    h = 1e-7
    fd = [(ma1_n2_loglik(*(a + h * e), *y) - ma1_n2_loglik(*(a - h * e), *y)) / (2 * h) for e in np.eye(2)]
    np.testing.assert_allclose(mle_grad(a, p), fd, rtol=1e-6)


# ---------------------------------------------------------------- exact MA(1), n = 2


def test_exact_examples():
    a, case = mle_exact_ma1_n2((1, 1))
    assert case == "(2)"
    np.testing.assert_allclose(a.flat, [np.sqrt(1 / 3)] * 2)
    a, case = mle_exact_ma1_n2((1, -1))
    assert case == "(3)"
    np.testing.assert_allclose(a.flat, [np.sqrt(1 / 3), -np.sqrt(1 / 3)])
    a, case = mle_exact_ma1_n2((4, 1))
    assert case == "(1)"
    a0, a1 = a.flat
    assert a0 * a1 == pytest.approx(4) and a0**2 + a1**2 == pytest.approx(8.5)
    np.testing.assert_allclose(sorted([a0**2, a1**2]), sorted(np.roots([1, -8.5, 16]).real))
    a, case = mle_exact_ma1_n2((1, 0))
    assert case == "degenerate" and a.flat[1] == 0


def test_local_from_equal_observations():
    a = mle_solve_local(MleProblem(1, [1.0, 1.0]), [0.8, 0.3])
    np.testing.assert_allclose(np.abs(a.flat), [np.sqrt(1 / 3)] * 2, atol=1e-5)


def test_local_never_beats_exact():
    rng = np.random.default_rng(5)
    for Y in ([1.0, 1.0], [1.0, -1.0], [4.0, 1.0], [0.3, -2.0]):
        p = MleProblem(1, Y)
        best = mle_loglik(mle_exact_ma1_n2(Y)[0], p)
        for _ in range(20):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                a = mle_solve_local(p, rng.uniform(-2, 2, size=2) + [0.1, 0])
            assert mle_loglik(a, p) <= best + 1e-9


def test_likelihood_ordering_of_groups():
    rng = np.random.default_rng(0)
    for y1, y2 in rng.normal(size=(1000, 2)):
        s, prod = y1 * y1 + y2 * y2, y1 * y2
        assert 4 * (s - prod) ** 2 - 3 * (y1**2 - y2**2) ** 2 == pytest.approx((s - 4 * prod) ** 2, rel=1e-9, abs=1e-12)
        c2, c3 = np.sqrt((s - prod) / 3), np.sqrt((s + prod) / 3)
        l2, l3 = ma1_n2_loglik(c2, c2, y1, y2), ma1_n2_loglik(c3, -c3, y1, y2)
        assert l2 == pytest.approx(-0.5 * np.log((s - prod) ** 2 / 3) - 1, rel=1e-9)
        assert l3 == pytest.approx(-0.5 * np.log((s + prod) ** 2 / 3) - 1, rel=1e-9)
        disc = (s / 2) ** 2 - 4 * prod * prod
        if disc >= 0:
            a0 = np.sqrt((s / 2 + np.sqrt(disc)) / 2)
            l1 = ma1_n2_loglik(a0, prod / a0, y1, y2)
            assert l1 == pytest.approx(-0.5 * np.log((y1**2 - y2**2) ** 2) - 1 + np.log(2), rel=1e-8, abs=1e-9)
            assert l1 >= l2 - 1e-9 and l1 >= l3 - 1e-9
        assert (l2 > l3) == (prod > 0) or abs(l2 - l3) < 1e-12


@settings(max_examples=100, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_exact_is_a_maximum_nearby(y1, y2):
    if abs(y1) < 1e-3 or abs(y2) < 1e-3 or abs(abs(y1) - abs(y2)) < 1e-3:
        return
    a, _ = mle_exact_ma1_n2((y1, y2))
    best = ma1_n2_loglik(*a.flat, y1, y2)
    rng = np.random.default_rng(0)
    for d in rng.normal(size=(20, 2)) * 1e-3:
        assert ma1_n2_loglik(*(a.flat + d), y1, y2) <= best + 1e-12


# ---------------------------------------------------------------- ML degree


@pytest.mark.parametrize("n,count", [(2, 4), (3, 8)])
def test_ml_degree(n, count):
    assert ml_degree_count(1, n, seed=3) == count


def test_ml_degree_n4_reported():
    c = ml_degree_count(1, 4, seed=1)
    assert 8 < c <= 12


def test_ml_noninvertible_points_n3():
    Y = np.array([0.4, -1.1, 0.9])
    x1, x2, x3 = Y
    crit = ml_critical_points(1, Y)
    real = [z.real for z in crit.points if np.max(np.abs(z.imag)) < 1e-8]
    plus = np.sqrt((3 * x1**2 + 4 * x2**2 + 3 * x3**2 - 4 * x1 * x2 + 2 * x1 * x3 - 4 * x2 * x3) / 12)
    minus = np.sqrt((3 * x1**2 + 4 * x2**2 + 3 * x3**2 + 4 * x1 * x2 + 2 * x1 * x3 + 4 * x2 * x3) / 12)
    eq = [z for z in real if abs(z[0] - z[1]) < 1e-6]
    opp = [z for z in real if abs(z[0] + z[1]) < 1e-6]
    assert len(eq) == 1 and len(opp) == 1
    assert abs(abs(eq[0][0]) - plus) <= 1e-8
    assert abs(abs(opp[0][0]) - minus) <= 1e-8


def test_ml_score_consistency():
    Y = np.array([0.4, -1.1, 0.9, 0.2])
    p = MleProblem(1, Y)
    crit = ml_critical_points(1, Y)
    checked = 0
    for z in crit.points:
        if np.max(np.abs(z.imag)) > 1e-8:
            continue
        ll = mle_loglik(z.real, p)
        if not np.isfinite(ll):
            continue
        assert np.max(np.abs(mle_grad(z.real, p))) <= 1e-5 * (1 + abs(ll))
        checked += 1
    assert checked >= 1


def test_homotopy_mle_agrees_with_exact_n2():
    for Y in ([1.0, 1.0], [1.0, -1.0], [4.0, 1.0]):
        p = MleProblem(1, Y)
        rep = mle_solve_homotopy(p)
        assert rep.selected_objective == pytest.approx(mle_loglik(mle_exact_ma1_n2(Y)[0], p), abs=1e-8)


def test_homotopy_mle_beats_local_n8():
    y = np.random.default_rng(12).normal(size=8)
    p = MleProblem(1, y)
    rep = mle_solve_homotopy(p)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for init in ([1.0, 0.5], [0.5, 1.0], [1.0, -0.5]):
            assert mle_loglik(mle_solve_local(p, init), p) <= rep.selected_objective + 1e-7
    assert rep.selected.flat[0] > 0 and abs(rep.selected.flat[1]) <= rep.selected.flat[0] + 1e-9


# ---------------------------------------------------------------- innovations


def test_innovations_examples():
    np.testing.assert_allclose(innovations_d1(AcovTable(1, [1.25, 0.5])).flat, [1, 0.5], atol=1e-3)
    np.testing.assert_allclose(innovations_d1(AcovTable(1, [1.0, 0.0])).flat, [1, 0])
    with pytest.warns(ConvergenceWarning):
        innovations_d1(AcovTable(1, [2.0, 1.0]))
    with pytest.raises(ValueError):
        innovations_d1(AcovTable(1, [1.0, 0.9]))


def test_innovations_ma2():
    a = np.array([2.0, 1.0, 0.5])
    est = innovations_d1(gamma_map(CoefGrid(2, a)), iters=80).flat
    np.testing.assert_allclose(est, a, atol=1e-3)


# ---------------------------------------------------------------- simulation study


def test_simulation_study_small():
    est = simulation_study([1.0, 0.5], 8, 3, seed=10)
    assert est.shape == (3, 2)
    np.testing.assert_array_equal(est, simulation_study([1.0, 0.5], 8, 3, seed=10))
    loc = simulation_study([1.0, 0.5], 8, 3, seed=10, method="local")
    assert loc.shape == (3, 2)
    with pytest.raises(ValueError):
        simulation_study([1.0, 0.5], 8, 1, method="nope")
