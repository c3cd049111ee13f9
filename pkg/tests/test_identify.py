import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from macov.identify import (
    fiber_d1,
    fiber_generic,
    fiber_ma1,
    fiber_ma2,
    fiber_ma11,
    invertible_index,
    invertible_representative,
    same_projective_set,
)
from macov.lattice import AcovTable, CoefGrid, gamma_map, reverse


def proj_equal(u, v, tol=1e-6) -> bool:
    u, v = np.asarray(u, dtype=complex), np.asarray(v, dtype=complex)
    scale = max(1.0, np.linalg.norm(u))
    return min(np.linalg.norm(u - v), np.linalg.norm(u + v)) <= tol * scale


def contains(points, v, tol=1e-6) -> bool:
    return any(proj_equal(getattr(p, "flat", p), v, tol) for p in points)


def flip_enumeration(a: np.ndarray) -> list[np.ndarray]:
    """All real-coefficient flips of theta's roots, scaled to match gamma (brute force)."""
    g = gamma_map(CoefGrid(len(a) - 1, a)).values
    roots = np.roots(a[::-1])
    out = []
    for mask in itertools.product((0, 1), repeat=len(roots)):
        beta = [1 / r if m else r for r, m in zip(roots, mask)]
        p = np.poly(beta)[::-1]
        if np.max(np.abs(p.imag)) > 1e-9:
            continue
        p = p.real
        p *= np.sqrt(g[0] / gamma_map(CoefGrid(len(a) - 1, p)).values[0])
        if np.allclose(gamma_map(CoefGrid(len(a) - 1, p)).values, g, atol=1e-9 * np.linalg.norm(g)):
            if not any(proj_equal(p, w) for w in out):
                out.append(p)
    return out


def generic_ma11(rng) -> np.ndarray:
    while True:
        a = rng.normal(size=4)
        if abs(a[0] * a[3] - a[1] * a[2]) > 1e-6 * np.sum(a * a):
            return a


# ---------------------------------------------------------------- d = 1


def test_ma1_example():
    f = fiber_d1(AcovTable(1, [1.25, 0.5]))
    assert len(f) == 2
    assert contains(f.points, [1, 0.5]) and contains(f.points, [0.5, 1])
    a, b = fiber_ma1(AcovTable(1, [1.25, 0.5]))
    np.testing.assert_allclose(a, [1, 0.5])
    np.testing.assert_allclose(b, [0.5, 1])


def test_ma2_example_real_and_complex():
    g = AcovTable(2, [5.25, 2.5, 1])
    full = fiber_d1(g)
    assert len(full) == 4
    real = fiber_d1(g, real_only=True)
    assert len(real) == 2
    assert contains(real.points, [2, 1, 0.5]) and contains(real.points, [0.5, 1, 2])
    # triangular system gives a0 = 2 for a1 = 1, not sqrt(2)
    assert contains(fiber_ma2(g).points, [2, 1, 0.5])
    assert same_projective_set(fiber_ma2(g).points, full.points)


def test_root_on_unit_circle_is_its_own_flip():
    # theta = (1 + x)(1 + 2x): the root -1 maps to itself, so only -1/2 can flip
    a = np.array([1.0, 3.0, 2.0])
    oracle = flip_enumeration(a)
    assert len(oracle) == 2
    f = fiber_d1(gamma_map(CoefGrid(2, a)), real_only=True)
    assert f.boundary
    assert same_projective_set(f.points, oracle)


def test_boundary_fiber_has_no_invertible_point():
    f = fiber_d1(AcovTable(1, [2.0, 1.0]))
    assert f.boundary
    with pytest.raises(ValueError):
        invertible_representative(f)
    assert invertible_index(f) is None


def test_invertible_representative():
    f = fiber_d1(AcovTable(1, [1.25, 0.5]))
    np.testing.assert_allclose(invertible_representative(f).flat, [1, 0.5])
    assert invertible_index(f) == 0
    f2 = fiber_d1(AcovTable(2, [5.25, 2.5, 1]), real_only=True)
    rep = invertible_representative(f2).flat
    np.testing.assert_allclose(rep, [2, 1, 0.5])
    assert rep[0] / rep[2] == pytest.approx(4.0)


def test_fiber_d1_errors():
    with pytest.raises(ValueError):
        fiber_d1(AcovTable((1, 1), np.ones(5)))
    with pytest.raises(ValueError):
        fiber_d1(AcovTable(2, [1.0, 0.2, 0.0]))
    # |gamma(1)| > gamma(0) / 2 has no real MA(1) factorization
    with pytest.raises(ValueError):
        fiber_d1(AcovTable(1, [1.0, 0.9]), real_only=True)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**32))
def test_d1_cardinality_roundtrip_reversal(q, seed):
    a = np.random.default_rng(seed).normal(size=q + 1)
    a[0] = np.sign(a[0]) * max(abs(a[0]), 0.2)
    a[-1] = np.sign(a[-1]) * max(abs(a[-1]), 0.2)
    g = gamma_map(CoefGrid(q, a))
    f = fiber_d1(g)
    roots = np.roots(a[::-1])
    if np.min(np.abs(np.abs(roots) - 1)) < 1e-3 or len(roots) > 1 and np.min(
        [abs(r - s) for r, s in itertools.combinations(roots, 2)]
    ) < 1e-3:
        return
    assert len(f) == 2**q
    assert contains(f.points, a)
    for p in f.points:
        assert np.linalg.norm(gamma_map(p).values - g.values) <= 1e-7 * np.linalg.norm(g.values)
        assert contains(f.points, reverse(p).flat)


# ---------------------------------------------------------------- MA(1,1)


def test_ma11_generic_example():
    g = gamma_map(CoefGrid((1, 1), [7, -5, 3, 1]))
    for f in (fiber_ma11(g), fiber_generic(g)):
        assert len(f) == 2
        assert contains(f.points, [7, -5, 3, 1]) and contains(f.points, [1, 3, -5, 7])
    assert fiber_ma11(g).info["branch"] == "generic"


def test_ma11_palindromic():
    g = gamma_map(CoefGrid((1, 1), [2, 1, 1, 2]))
    for f in (fiber_ma11(g), fiber_generic(g)):
        assert len(f) == 1
        p = f.points[0].flat
        assert proj_equal(p, reverse(f.points[0]).flat)


def test_ma11_separable():
    g = gamma_map(CoefGrid((1, 1), [1, 2, 3, 6]))
    f = fiber_ma11(g)
    assert f.info["branch"] == "separable"
    assert len(f) == 4 and all(f.real)
    # (1 + 3 x1)(1 + 2 x2) with each linear factor flipped on its own
    b, c = np.array([1.0, 3.0]), np.array([1.0, 2.0])
    oracle = [np.outer(u, v).ravel() for u in (b, b[::-1]) for v in (c, c[::-1])]
    assert same_projective_set(f.points, oracle)
    assert same_projective_set(fiber_generic(g).points, oracle)


def test_ma11_real_only_error():
    # gamma of a complex coefficient vector whose fiber has no real point
    a = np.array([1 + 1j, 0.5, -0.3j, 0.2])
    g = gamma_map(CoefGrid((1, 1), a))
    with pytest.raises(ValueError):
        fiber_ma11(AcovTable((1, 1), g.values), real_only=True)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32))
def test_ma11_roundtrip_and_cardinality(seed):
    a = generic_ma11(np.random.default_rng(seed))
    g = gamma_map(CoefGrid((1, 1), a))
    f = fiber_ma11(g)
    assert len(f) == 2
    assert contains(f.points, a) and contains(f.points, a[::-1])
    for p in f.points:
        assert np.linalg.norm(gamma_map(p).values - g.values) <= 1e-7 * np.linalg.norm(g.values)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-10, 10, allow_nan=False), min_size=4, max_size=4))
def test_discriminants_nonnegative(a):
    g00, g01, g1m1, g10, g11 = gamma_map(CoefGrid((1, 1), a)).values
    tol = 1e-10 * np.linalg.norm([g00, g01, g1m1, g10, g11]) ** 4
    assert (g01 * g10 - g00 * g11) ** 2 - 4 * g11**2 * (g11 - g1m1) ** 2 >= -tol
    assert (g01 * g10 - g00 * g1m1) ** 2 - 4 * g1m1**2 * (g11 - g1m1) ** 2 >= -tol


# ---------------------------------------------------------------- generic solver


@pytest.mark.parametrize("q", [1, 2, 3])
def test_generic_matches_d1(q):
    a = np.random.default_rng(q).normal(size=q + 1)
    g = gamma_map(CoefGrid(q, a))
    f = fiber_generic(g)
    assert len(f) == 2**q
    assert same_projective_set(f.points, fiber_d1(g).points)


def test_generic_ma12():
    a = np.random.default_rng(7).normal(size=(2, 3))
    g = gamma_map(CoefGrid((1, 2), a))
    f = fiber_generic(g)
    assert contains(f.points, a.ravel()) and contains(f.points, a[::-1, ::-1].ravel())
    for p in f.points:
        assert np.linalg.norm(gamma_map(p).values - g.values) <= 1e-7 * np.linalg.norm(g.values)


def test_generic_off_variety():
    g = gamma_map(CoefGrid((1, 1), [7, -5, 3, 1])).values.copy()
    g[2] += 5.0
    with pytest.raises(ValueError):
        fiber_generic(AcovTable((1, 1), g))


def test_fiber_json():
    f = fiber_d1(AcovTable(1, [1.25, 0.5]))
    obj = f.to_json(invertible_index(f))
    assert obj["invertible_index"] == 0
    assert obj["real"] == [True, True]
    assert len(obj["points"]) == 2
