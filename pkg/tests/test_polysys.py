import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from macov.polysys import (
    BudgetExceeded,
    MPoly,
    PolySystem,
    SolverError,
    TrackerOptions,
    count_distinct,
    format_system,
    newton_refine,
    parse_system,
    poly_det,
    solve_total_degree,
    univariate_roots,
)


def same_set(A, B, tol=1e-6) -> bool:
    A, B = np.asarray(A), np.asarray(B)
    if len(A) != len(B):
        return False
    used = set()
    for a in A:
        d = np.linalg.norm(B - a, axis=1) / (1 + np.linalg.norm(a))
        j = next((j for j in np.argsort(d) if j not in used), None)
        if j is None or d[j] > tol:
            return False
        used.add(j)
    return True


def random_linear_product_system(rng, n, degrees) -> PolySystem:
    x = MPoly.variables(n)
    eqs = []
    for deg in degrees:
        p = MPoly.constant(n, 1.0)
        for _ in range(deg):
            c = rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1)
            p = p * (sum((c[i] * x[i] for i in range(n)), MPoly.constant(n, c[n])))
        eqs.append(p)
    return PolySystem(eqs)


# ---------------------------------------------------------------- MPoly


def test_mpoly_arithmetic():
    x, y = MPoly.variables(2)
    p = (x + y) ** 2 - x * x - y * y
    assert p == 2 * x * y
    assert p.degree == 2
    assert (x - x).is_zero()
    assert p.diff(0) == 2 * y
    assert p([1.5, 2.0]) == pytest.approx(6.0)


def test_mpoly_invariants():
    p = MPoly(2, [((1, 0), 2.0), ((1, 0), -2.0), ((0, 1), 3.0)])
    assert list(p.terms) == [(0, 1)]
    with pytest.raises(ValueError):
        MPoly(2, [((1,), 1.0)])
    with pytest.raises(ValueError):
        MPoly(1, [((-1,), 1.0)])


def test_poly_det_matches_numeric():
    rng = np.random.default_rng(0)
    x, y = MPoly.variables(2)
    M = [[x + 1, y, 2.0], [x * y, 3.0, x], [1.0, y - x, y * y]]
    z = rng.normal(size=2)
    numeric = np.linalg.det(np.array([[e(z) if isinstance(e, MPoly) else e for e in row] for row in M]))
    assert poly_det(M)(z) == pytest.approx(numeric)


# ---------------------------------------------------------------- text format


def test_parse_and_format_roundtrip():
    text = "# circle and diagonal\n1 * x1^2 + 1 * x2^2 - 1\nx1 - x2  # comment\n\n"
    sys = parse_system(text)
    assert sys.nvars == 2 and len(sys) == 2
    x, y = MPoly.variables(2)
    assert sys.equations[0] == x * x + y * y - 1
    assert sys.equations[1] == x - y
    again = parse_system(format_system(sys))
    assert [p == q for p, q in zip(again.equations, sys.equations)] == [True, True]


def test_parse_complex_and_errors():
    sys = parse_system("(1+2j) * x1 - 3")
    assert sys.equations[0].terms[(1,)] == 1 + 2j
    with pytest.raises(ValueError):
        parse_system("x1 + @")
    with pytest.raises(ValueError):
        parse_system("# nothing\n")


# ---------------------------------------------------------------- solve_total_degree


def test_quadratic():
    sols = solve_total_degree(parse_system("x1^2 - 1"))
    assert same_set(sols.points, [[1], [-1]])
    assert sols.is_real.all()


def test_circle_and_line():
    sols = solve_total_degree(parse_system("x1^2 + x2^2 - 1\nx1 - x2"))
    r = 1 / np.sqrt(2)
    assert same_set(sols.points, [[r, r], [-r, -r]])


def test_bezout_accounting_and_residuals():
    rng = np.random.default_rng(3)
    sys = random_linear_product_system(rng, 3, [2, 3, 2])
    sols = solve_total_degree(sys)
    st_ = sols.stats
    assert st_["converged"] + st_["divergent"] + st_["suspect"] + st_["failed"] == sys.bezout == 12
    assert len(sols) == 12
    scale = 1 + np.linalg.norm(sols.points, axis=1) ** sys.maxdeg
    assert np.all(sols.residual <= 1e-8 * scale)


def test_divergent_paths_are_counted():
    # x*y - 1 and x - 2 has one finite root; the other path runs to infinity
    sols = solve_total_degree(parse_system("x1 * x2 - 1\nx1 - 2"))
    assert same_set(sols.points, [[2, 0.5]])
    assert sols.stats["divergent"] == 1


def test_all_paths_singular():
    # every path ends at the fourfold root at the origin; none converge cleanly
    sols = solve_total_degree(parse_system("x1^2\nx2^2"))
    assert sols.points.shape == (0, 2)
    assert sols.stats["suspect"] == 4
    assert np.abs(sols.suspect).max() < 1e-4


@pytest.mark.parametrize("seed", range(10))
def test_gamma_trick_independence(seed):
    rng = np.random.default_rng(100 + seed)
    sys = random_linear_product_system(rng, 2, [2, 2])
    a = solve_total_degree(sys, TrackerOptions(seed=1))
    b = solve_total_degree(sys, TrackerOptions(seed=2))
    assert a.stats["gamma"] != b.stats["gamma"]
    assert same_set(a.points, b.points)


def test_solver_errors():
    with pytest.raises(ValueError):
        solve_total_degree(PolySystem([MPoly.variables(2)[0]]))
    with pytest.raises(BudgetExceeded):
        solve_total_degree(parse_system("x1^5 - 1\nx2^5 - 1"), TrackerOptions(max_paths=10))
    with pytest.raises(SolverError):
        solve_total_degree(parse_system("0 * x1 + 1"))


# ---------------------------------------------------------------- newton_refine


def test_newton_examples():
    sys = parse_system("x1^2 - 2")
    assert newton_refine(sys, [1.4])[0] == pytest.approx(np.sqrt(2), abs=1e-14)
    assert newton_refine(sys, [-1.5])[0] == pytest.approx(-np.sqrt(2), abs=1e-14)
    with pytest.raises(SolverError):
        newton_refine(parse_system("x1^2 + 1"), [0.0])


def test_newton_from_six_digit_critical_points():
    from macov.estimate import LseProblem, lse_critical_system, lse_solve
    from macov.lattice import AcovTable

    p = LseProblem((1, 1), AcovTable((1, 1), [86.6439, -34.2433, -17.3195, 19.1877, 6.6726]))
    sys = lse_critical_system(p)
    rep = lse_solve(p)
    for i in rep.real_indices:
        z0 = np.array([float(f"{v:.6g}") for v in rep.points[i].real])
        z = newton_refine(sys, z0)
        assert sys.residual(z) <= 1e-10 * (1 + np.linalg.norm(z) ** 3)


# ---------------------------------------------------------------- univariate roots


def test_univariate_examples():
    r = univariate_roots(MPoly.from_univariate([1, 0.5])).points[:, 0]
    np.testing.assert_allclose(r, [-2])
    r = univariate_roots([2, 1, 0.5]).points[:, 0]
    np.testing.assert_allclose(sorted(r, key=lambda v: v.imag), [-1 - 1j * np.sqrt(3), -1 + 1j * np.sqrt(3)])
    r = univariate_roots([6, -5, 1]).points[:, 0]
    np.testing.assert_allclose(sorted(r.real), [2, 3])
    with pytest.raises(ValueError):
        univariate_roots([0, 0])
    with pytest.raises(ValueError):
        univariate_roots([3])


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**32))
def test_vieta(deg, seed):
    c = np.random.default_rng(seed).normal(size=deg + 1)
    c[-1] = np.sign(c[-1]) * max(abs(c[-1]), 0.1)
    r = univariate_roots(c).points[:, 0]
    assert len(r) == deg
    s, prod = -c[-2] / c[-1], (-1) ** deg * c[0] / c[-1]
    assert abs(r.sum() - s) <= 1e-8 * max(1, abs(s))
    assert abs(np.prod(r) - prod) <= 1e-8 * max(1, abs(prod))


# ---------------------------------------------------------------- count_distinct


def test_count_distinct():
    sols = univariate_roots([1, -2, 1])
    assert count_distinct(sols) == 1
    sols = solve_total_degree(parse_system("x1^2 - 1"))
    assert count_distinct(sols) == 2
    assert count_distinct(sols, canon=lambda p: np.abs(p)) == 1


def test_ml_degree_counts():
    from macov.estimate import ml_degree_count

    assert ml_degree_count((1,), 2) == 4
    assert ml_degree_count((1,), 3) == 8
