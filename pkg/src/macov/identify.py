"""Fibers of the autocovariance map: all coefficient grids with a given autocovariance."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .lattice import AcovTable, CoefGrid, Order, gamma_map, projective_normalize
from .polysys import (
    MPoly,
    PolySystem,
    SolverError,
    TrackerOptions,
    newton_refine,
    solve_total_degree,
    univariate_roots,
)

__all__ = [
    "Fiber",
    "gamma_polynomials",
    "fiber_d1",
    "fiber_ma1",
    "fiber_ma2",
    "fiber_ma11",
    "fiber_generic",
    "invertible_representative",
    "same_projective_set",
]

ROUNDTRIP_TOL = 1e-7
UNIT_CIRCLE_TOL = 1e-9


@dataclass
class Fiber:
    """Preimages of one autocovariance table.

    Points are sign-normalized (first non-negligible entry has positive real
    part) and distinct modulo ``a -> -a``.  ``boundary`` is set when the
    d = 1 factorization met roots on the unit circle.
    """

    order: Order
    target: AcovTable
    points: list[CoefGrid]
    real: list[bool]
    boundary: bool = False
    info: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.points)

    @property
    def real_points(self) -> list[CoefGrid]:
        return [p for p, r in zip(self.points, self.real) if r]

    def matrix(self) -> np.ndarray:
        """Points stacked as rows of flat coefficient vectors."""
        if not self.points:
            return np.zeros((0, self.order.ncoef))
        return np.array([p.flat for p in self.points])

    def to_json(self, invertible_index: int | None = None) -> dict:
        return {
            "q": list(self.order.q),
            "points": [p.to_json() for p in self.points],
            "real": [bool(r) for r in self.real],
            "invertible_index": invertible_index,
            "boundary": bool(self.boundary),
        }


@lru_cache(maxsize=None)
def gamma_polynomials(order: Order) -> tuple[MPoly, ...]:
    """``gamma(t)`` as quadratic polynomials in the flat coefficients, one per half-lag."""
    nv = order.ncoef
    X = MPoly.variables(nv)
    idx = {k: i for i, k in enumerate(order.coef_indices)}
    out = []
    for t in order.lags:
        p = MPoly(nv)
        for k in order.coef_indices:
            kt = tuple(a + b for a, b in zip(k, t))
            if kt in idx:
                p = p + X[idx[k]] * X[idx[kt]]
        out.append(p)
    return tuple(out)


def _as_table(g, order=None) -> AcovTable:
    if isinstance(g, AcovTable):
        return g
    if order is None:
        raise ValueError("an order is needed when passing raw values")
    return AcovTable(order, np.asarray(g))


def _roundtrip_error(a: np.ndarray, order: Order, g: np.ndarray) -> float:
    return float(np.linalg.norm(gamma_map(CoefGrid(order, a)).values - g))


def _is_real_vec(v, tol=1e-6) -> bool:
    return bool(np.all(np.abs(np.imag(v)) <= tol * max(1.0, np.linalg.norm(v))))


def _dedupe(vectors, tol=1e-6) -> list[np.ndarray]:
    """Distinct vectors modulo a global sign."""
    out: list[np.ndarray] = []
    for v in vectors:
        v = projective_normalize(v)
        scale = max(1.0, np.linalg.norm(v))
        if all(np.linalg.norm(v - w) > tol * scale for w in out):
            out.append(v)
    return out


def _polish(a, order: Order, g: np.ndarray):
    """Newton on ``gamma_map(a) = g`` when that system is square (d = 1)."""
    polys = gamma_polynomials(order)
    if len(polys) != order.ncoef:
        return a
    sys = PolySystem([p - complex(c) for p, c in zip(polys, g)])
    try:
        b = newton_refine(sys, a, iters=8)
    except SolverError:
        return a
    return b if np.linalg.norm(b - a) <= 1e-3 * (1 + np.linalg.norm(a)) else a


def _make_fiber(order, table, vecs, tol=1e-6, **kw) -> Fiber:
    g = table.values
    gnorm = max(np.linalg.norm(g), 1e-300)
    kept = []
    for v in vecs:
        v = np.asarray(v, dtype=complex)
        if not np.all(np.isfinite(v)):
            continue
        if _roundtrip_error(v, order, g) <= ROUNDTRIP_TOL * gnorm:
            kept.append(v)
    pts, real = [], []
    for v in _dedupe(kept, tol):
        r = _is_real_vec(v)
        pts.append(CoefGrid(order, v.real if r else v))
        real.append(r)
    return Fiber(order, table, pts, real, **kw)


def _pair_roots(roots: np.ndarray) -> list[complex]:
    """Split roots of a palindromic polynomial into pairs ``{alpha, 1/alpha}``.

    Returns one member of each pair, the one of larger modulus.
    """
    left = sorted(roots, key=lambda r: -abs(r))
    chosen = []
    while left:
        r = left.pop(0)
        j = int(np.argmin([abs(s - 1 / r) for s in left]))
        left.pop(j)
        chosen.append(r)
    return chosen


def _orbits(alphas, real_only, tol=1e-6) -> list[list[int]]:
    if not real_only:
        return [[i] for i in range(len(alphas))]
    used, orbits = set(), []
    for i, r in enumerate(alphas):
        if i in used:
            continue
        used.add(i)
        if abs(r.imag) <= tol * abs(r):
            orbits.append([i])
            continue
        rest = [j for j in range(len(alphas)) if j not in used]
        if not rest:
            raise ValueError("unpaired complex root: table has no real factorization")
        j = min(rest, key=lambda j: abs(alphas[j] - np.conj(r)))
        used.add(j)
        orbits.append([i, j])
    return orbits


def fiber_d1(g, real_only: bool = False, boundary_tol: float = 1e-6) -> Fiber:
    """Fiber of a one-dimensional MA(q) table by spectral factorization.

    The Laurent polynomial ``sum_t gamma(t) x^(q+t)`` has roots in pairs
    ``{alpha, 1/alpha}``.  Every choice of one root per pair gives a factor
    ``theta``; its scale is fixed by matching ``gamma``.  With ``real_only``
    complex-conjugate roots are flipped together, so only real points arise.

    The first point always has all roots outside or on the unit circle.

    Raises
    ------
    ValueError
        If the order is not one-dimensional, ``gamma(q) = 0`` or no real
        factorization exists when one is requested.
    """
    table = _as_table(g)
    order = table.order
    if order.d != 1:
        raise ValueError("fiber_d1 needs a one-dimensional order")
    q = order.q[0]
    gv = np.asarray(table.values)
    if abs(gv[q]) <= 1e-14 * np.linalg.norm(gv):
        raise ValueError(f"gamma({q}) vanishes: the table is not of order {q}")
    lau = np.concatenate([gv[::-1], gv[1:]]).astype(complex)
    roots = univariate_roots(lau).points[:, 0]
    alphas = _pair_roots(list(roots))
    boundary = any(abs(abs(r) - 1) <= boundary_tol for r in alphas)
    if real_only:
        alphas = [complex(r.real, 0) if abs(r.imag) <= 1e-6 * abs(r) else r for r in alphas]
    orbits = _orbits(alphas, real_only)
    vecs = []
    for mask in itertools.product((False, True), repeat=len(orbits)):
        beta = list(alphas)
        for flip, orb in zip(mask, orbits):
            if flip:
                for i in orb:
                    beta[i] = 1 / beta[i]
        p = np.poly(beta)[::-1]
        if real_only:
            p = p.real
        gm = gamma_map(CoefGrid(order, p)).values
        c2 = np.vdot(gm, gv) / np.vdot(gm, gm)
        if real_only:
            if c2.real <= 0:
                continue
            a = np.sqrt(c2.real) * p
        else:
            a = np.sqrt(c2 + 0j) * p
        vecs.append(_polish(a, order, gv))
    fib = _make_fiber(order, table, vecs, boundary=boundary)
    if real_only and not fib.points:
        raise ValueError("table has no real spectral factorization")
    fib.info["roots"] = [complex(r) for r in alphas]
    return fib


def fiber_ma1(g) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form MA(1) preimages ``(a0, a1)`` and their reversal.

    ``a0 = sqrt((g0 + sqrt(g0^2 - 4 g1^2)) / 2)`` and ``a1 = g1 / a0``.
    """
    table = _as_table(g, Order(1))
    g0, g1 = np.asarray(table.values, dtype=complex)
    a0 = np.sqrt((g0 + np.sqrt(g0 ** 2 - 4 * g1 ** 2)) / 2)
    a = np.array([a0, g1 / a0])
    return a, a[::-1]


def fiber_ma2(g) -> Fiber:
    """MA(2) fiber from the triangular system.

    ``a1^4 - (g0 + 2 g2) a1^2 + g1^2 = 0`` fixes ``a1``; then ``a0`` solves
    the quadratic ``a1 a0^2 - g1 a0 + a1 g2 = 0`` and ``a2 = (g1 - a0 a1) / a1``.
    """
    table = _as_table(g, Order(2))
    if table.order.q != (2,):
        raise ValueError("fiber_ma2 needs order 2")
    g0, g1, g2 = np.asarray(table.values, dtype=complex)
    vecs = []
    for u in np.roots([1, 0, -(g0 + 2 * g2), 0, g1 ** 2]):
        if abs(u) < 1e-300:
            continue
        for a0 in np.roots([u, -g1, u * g2]):
            vecs.append(np.array([a0, u, (g1 - a0 * u) / u]))
    return _make_fiber(table.order, table, vecs)


def fiber_ma11(g, real_only: bool = False) -> Fiber:
    """MA(1,1) fiber from closed forms.

    Off the separable locus ``a00^2, a11^2`` are the roots of
    ``z^2 - S z + g11^2`` with ``S = (g00 g11 - g01 g10) / (g11 - g1m1)``,
    and ``a10^2, a01^2`` the roots of ``z^2 - T z + g1m1^2`` with
    ``T = (g01 g10 - g00 g1m1) / (g11 - g1m1)``.  When ``g11 = g1m1`` the
    field factors as ``(b0 + b1 x1)(c0 + c1 x2)`` and each factor may be
    flipped on its own, giving up to four points.  Branches are resolved by
    checking every sign pattern against ``gamma_map``.
    """
    table = _as_table(g, Order((1, 1)))
    if table.order.q != (1, 1):
        raise ValueError(f"fiber_ma11 needs order (1,1), got {table.order}")
    g00, g01, g1m1, g10, g11 = np.asarray(table.values, dtype=complex)
    scale = np.linalg.norm(table.values)
    vecs = []
    if abs(g11 - g1m1) <= 1e-10 * scale:
        R = np.sqrt(g00 ** 2 - 4 * (g01 ** 2 + g10 ** 2 - 4 * g11 ** 2))
        P = np.sqrt(2 * g00 * R + 2 * g00 ** 2 - 4 * (g01 ** 2 + g10 ** 2))
        M = np.sqrt(-2 * g00 * R + 2 * g00 ** 2 - 4 * (g01 ** 2 + g10 ** 2))
        m00 = np.sqrt(g00 + R - P) / 2
        m11 = np.sqrt(g00 + R + P) / 2
        m01 = np.sqrt(g00 - R - M) / 2
        m10 = np.sqrt(g00 - R + M) / 2
        base = []
        for x01, x10 in ((m01, m10), (m10, m01)):
            for s in itertools.product((1, -1), repeat=3):
                base.append(np.array([m00, s[0] * x01, s[1] * x10, s[2] * m11]))
        for v in base:
            A = v.reshape(2, 2)
            vecs += [A.ravel(), A[::-1, :].ravel(), A[:, ::-1].ravel(), A[::-1, ::-1].ravel()]
        kind = "separable"
    else:
        den = g11 - g1m1
        S = (g00 * g11 - g01 * g10) / den
        T = (g01 * g10 - g00 * g1m1) / den
        u = np.roots([1, -S, g11 ** 2])
        v = np.roots([1, -T, g1m1 ** 2])
        for u00, v10 in itertools.product(u, v):
            a00 = np.sqrt(u00 + 0j)
            a10 = np.sqrt(v10 + 0j)
            if abs(a00) == 0 or abs(a10) == 0:
                continue
            for s in (1, -1):
                vecs.append(np.array([a00, g1m1 / (s * a10), s * a10, g11 / a00]))
        kind = "generic"
    vecs = [_polish_any(v, table) for v in vecs]
    fib = _make_fiber(table.order, table, vecs)
    fib.info["branch"] = kind
    if not fib.points:
        raise ValueError("closed forms found no preimage; the table is off the variety")
    if real_only:
        pts = [(p, r) for p, r in zip(fib.points, fib.real) if r]
        if not pts:
            raise ValueError("no real preimage: negative discriminant")
        fib.points = [p for p, _ in pts]
        fib.real = [True] * len(pts)
    return fib


def _polish_any(v, table: AcovTable, iters: int = 3):
    """Gauss-Newton steps on the overdetermined system ``gamma_map(a) = g``."""
    order = table.order
    polys = gamma_polynomials(order)
    g = np.asarray(table.values, dtype=complex)
    v = np.asarray(v, dtype=complex)
    for _ in range(iters):
        if not np.all(np.isfinite(v)):
            return v
        F = np.array([p(v) for p in polys]) - g
        J = np.array([[p.diff(k)(v) for k in range(order.ncoef)] for p in polys])
        step, *_ = np.linalg.lstsq(J, -F, rcond=None)
        if np.linalg.norm(step) > 0.1 * (1 + np.linalg.norm(v)):
            return v
        v = v + step
    return v


def fiber_generic(g, opts: TrackerOptions | None = None) -> Fiber:
    """All complex preimages of ``g`` by homotopy continuation.

    Endpoints of stalled paths are kept as candidates too, since preimages
    fixed by reversal are double roots.  When there are more half-lags than coefficients, a random real linear
    combination of the equations gives a square system with the same
    solutions plus spurious ones, which are removed by the full system.

    Raises
    ------
    BudgetExceeded
        If ``2^(Q+1)`` exceeds the path budget.
    ValueError
        If no solution satisfies the full system.
    """
    table = _as_table(g)
    order = table.order
    opts = opts or TrackerOptions()
    polys = gamma_polynomials(order)
    gv = np.asarray(table.values, dtype=complex)
    eqs = [p - c for p, c in zip(polys, gv)]
    m = order.ncoef
    if len(eqs) > m:
        rng = np.random.default_rng(opts.seed)
        R = rng.standard_normal((m, len(eqs)))
        R /= np.linalg.norm(R, axis=1, keepdims=True)
        eqs = [sum((float(R[i, j]) * eqs[j] for j in range(len(eqs))), MPoly(m)) for i in range(m)]
    sols = solve_total_degree(PolySystem(eqs), opts)
    # singular preimages (palindromic a on the reversal locus) end as suspects
    cands = list(sols.points) + [p for p in sols.suspect if np.all(np.isfinite(p))]
    vecs = [_polish_any(p, table) for p in cands]
    fib = _make_fiber(order, table, vecs)
    fib.info["path_stats"] = sols.stats
    if not fib.points:
        raise ValueError("no solution satisfies the full system: table is off the variety")
    return fib


def invertible_representative(f: Fiber) -> CoefGrid:
    """The real point whose polynomial has all roots strictly outside the unit disk.

    The result is scaled so that ``a0 > 0``.

    Raises
    ------
    ValueError
        If the order is not one-dimensional, or no point qualifies.
    """
    if f.order.d != 1:
        raise ValueError("invertibility is defined for d = 1 only")
    if f.boundary:
        raise ValueError("fiber has a root on the unit circle; no invertible point")
    for p, r in zip(f.points, f.real):
        if not r:
            continue
        a = np.real(p.flat)
        roots = np.roots(a[::-1]) if np.any(a[1:] != 0) else np.array([])
        if np.all(np.abs(roots) > 1 + UNIT_CIRCLE_TOL):
            return CoefGrid(f.order, a if a[0] > 0 else -a)
    raise ValueError("no invertible point: every candidate has a root on or inside the unit circle")


def invertible_index(f: Fiber) -> int | None:
    """Index of the invertible point in ``f.points``, or None."""
    try:
        rep = invertible_representative(f)
    except ValueError:
        return None
    for i, p in enumerate(f.points):
        if np.allclose(projective_normalize(p.flat), projective_normalize(rep.flat), rtol=0, atol=1e-9 * np.linalg.norm(rep.flat)):
            return i
    return None


def same_projective_set(A, B, tol: float = 1e-6) -> bool:
    """Whether two collections of vectors agree modulo sign and order."""
    A = _dedupe([np.asarray(getattr(v, "flat", v), dtype=complex) for v in A], tol)
    B = _dedupe([np.asarray(getattr(v, "flat", v), dtype=complex) for v in B], tol)
    if len(A) != len(B):
        return False
    for v in A:
        scale = max(1.0, np.linalg.norm(v))
        if not any(np.linalg.norm(v - w) <= tol * scale for w in B):
            return False
    return True
