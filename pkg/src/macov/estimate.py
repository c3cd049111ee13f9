"""Least-squares projection and Gaussian maximum likelihood for MA(q) fields."""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, optimize

from .fields import FieldGrid
from .identify import gamma_polynomials
from .lattice import (
    AcovTable,
    CoefGrid,
    Order,
    gamma_map,
    projective_normalize,
    singular_component_membership,
)
from .polysys import (
    MPoly,
    PolySystem,
    SolverError,
    TrackerOptions,
    _cluster,
    newton_refine,
    poly_det,
    solve_total_degree,
)

__all__ = [
    "LseProblem",
    "MleProblem",
    "CriticalReport",
    "ContaminatedCount",
    "OptimizationWarning",
    "ConvergenceWarning",
    "lse_critical_system",
    "lse_solve",
    "ed_count_ma11",
    "covariance_matrix",
    "mle_loglik",
    "mle_grad",
    "mle_solve_local",
    "mle_exact_ma1_n2",
    "ml_score_system",
    "ml_critical_points",
    "ml_degree_count",
    "mle_solve_homotopy",
    "innovations_d1",
    "simulation_study",
]


class OptimizationWarning(UserWarning):
    """Local ascent stopped before meeting its gradient tolerance."""


class ConvergenceWarning(UserWarning):
    """An iterative recursion did not settle within its iteration budget."""


class ContaminatedCount(SolverError):
    """A critical-point count could not be certified.

    ``low`` and ``high`` bound the true count: ``low`` certified points were
    found and ``high - low`` stalled paths could not be classified.
    """

    def __init__(self, low: int, high: int):
        super().__init__(f"count not certified: between {low} and {high}")
        self.low, self.high = low, high


def _order(order) -> Order:
    return order if isinstance(order, Order) else Order(order)


# ----------------------------------------------------------------------------
# problems and reports


@dataclass(frozen=True)
class LseProblem:
    """Find the closest point of the autocovariance variety to ``target``."""

    order: Order
    target: AcovTable
    weights: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "order", _order(self.order))
        if self.target.order != self.order:
            raise ValueError("target table order does not match")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if w.shape != (self.order.nlags,) or np.any(w <= 0):
                raise ValueError("weights must be positive, one per half-lag")
            object.__setattr__(self, "weights", w)

    @property
    def w(self) -> np.ndarray:
        return np.ones(self.order.nlags) if self.weights is None else self.weights


@dataclass(frozen=True)
class MleProblem:
    """Gaussian likelihood of a field sample, parameters in a box ``[-R, R]``."""

    order: Order
    sample: FieldGrid
    bound: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "order", _order(self.order))
        s = self.sample
        if not isinstance(s, FieldGrid):
            s = FieldGrid(np.atleast_1d(np.asarray(s, dtype=float)))
            object.__setattr__(self, "sample", s)
        if s.d != self.order.d:
            raise ValueError(f"sample has {s.d} axes but the order has {self.order.d}")
        if s.values.size < 2:
            raise ValueError("the sample needs at least two sites")
        if self.bound is None:
            sd = float(np.std(s.values))
            object.__setattr__(self, "bound", 10 * sd if sd > 0 else 10.0)

    @property
    def Y(self) -> np.ndarray:
        return self.sample.flatten()

    @property
    def n(self) -> tuple[int, ...]:
        return self.sample.n


def _cvec(v):
    v = np.asarray(v)
    return {"re": [float(x) for x in np.real(v)], "im": [float(x) for x in np.imag(v)]}


@dataclass
class CriticalReport:
    """Critical points of an estimation problem and the selected optimum.

    ``points`` are distinct complex critical points (modulo ``a -> -a``),
    ``images`` their autocovariance tables, ``objective`` the objective at
    each point (nan where it is undefined).  ``real_indices`` lists points
    with real coordinates and ``real_image_indices`` points whose image is
    real, off the singular locus and distinct.
    """

    order: Order
    points: np.ndarray
    images: np.ndarray
    objective: np.ndarray
    real_indices: list[int]
    real_image_indices: list[int]
    selected: CoefGrid | None
    selected_image: AcovTable | None
    selected_objective: float
    path_stats: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @property
    def real_images(self) -> np.ndarray:
        return np.real(self.images[self.real_image_indices])

    def to_json(self) -> dict:
        return {
            "q": list(self.order.q),
            "critical_points": [_cvec(p) for p in self.points],
            "images": [_cvec(g) for g in self.images],
            "real_indices": list(map(int, self.real_indices)),
            "real_image_indices": list(map(int, self.real_image_indices)),
            "objectives": [None if not np.isfinite(v) else float(v) for v in self.objective],
            "selected": None if self.selected is None else self.selected.to_json(),
            "selected_image": None if self.selected_image is None else self.selected_image.to_json(),
            "objective": float(self.selected_objective),
            "path_stats": _jsonable(self.path_stats),
            **{k: _jsonable(v) for k, v in self.extra.items()},
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def _dedupe_sign(points, tol=1e-6):
    """Representatives of ``points`` modulo a global sign, as an array."""
    if len(points) == 0:
        return np.zeros((0, 0), dtype=complex)
    P = np.array([projective_normalize(p) for p in points])
    ids = _cluster(P, tol)
    return np.array([P[ids == c][0] for c in range(ids.max() + 1)])


def _real_mask(P, tol=1e-6):
    if len(P) == 0:
        return np.zeros(0, dtype=bool)
    return np.all(np.abs(P.imag) <= tol * (1 + np.linalg.norm(P, axis=1))[:, None], axis=1)


def _images(order, P):
    polys = gamma_polynomials(order)
    if len(P) == 0:
        return np.zeros((0, order.nlags), dtype=complex)
    return np.stack([p(P) for p in polys], axis=1)


# ----------------------------------------------------------------------------
# least squares


def lse_critical_system(p: LseProblem) -> PolySystem:
    """First-order conditions of ``1/2 sum_t w_t (gamma_a(t) - target(t))^2`` in ``a``.

    One cubic per coefficient; Bezout number ``3^(Q+1)``.
    """
    G = gamma_polynomials(p.order)
    tgt = np.asarray(p.target.values)
    w = p.w
    m = p.order.ncoef
    eqs = []
    for k in range(m):
        e = MPoly(m)
        for t, Gt in enumerate(G):
            dG = Gt.diff(k)
            if not dG.is_zero():
                e = e + float(w[t]) * (Gt - complex(tgt[t])) * dG
        eqs.append(e)
    return PolySystem(eqs)


def lse_solve(p: LseProblem, opts: TrackerOptions | None = None) -> CriticalReport:
    """All critical points of the least-squares projection and its minimizer.

    The minimizer is taken over real critical points (the zero vector
    excluded).  Images that are real but come from complex coefficients are
    listed among the real images as well, since they are real critical
    points of the distance on the variety.  For MA(1,1), images on the
    singular locus are left out of the real-image list.

    Raises
    ------
    BudgetExceeded
        If ``3^(Q+1)`` exceeds the path budget.
    SolverError
        If no nonzero real critical point exists.
    """
    opts = opts or TrackerOptions()
    if p.order.ncoef > 8:
        raise ValueError("lse_solve supports at most 8 coefficients")
    sols = solve_total_degree(lse_critical_system(p), opts)
    P = sols.points
    scale = np.sqrt(np.linalg.norm(p.target.values)) + 1e-300
    P = P[np.linalg.norm(P, axis=1) > 1e-6 * scale]
    P = _dedupe_sign(P)
    imgs = _images(p.order, P)
    tgt = np.asarray(p.target.values, dtype=float)
    w = p.w
    real = _real_mask(P)
    img_real = _real_mask(imgs, 1e-6)
    obj = np.full(len(P), np.nan)
    obj[img_real] = np.sqrt(np.sum(w * (imgs[img_real].real - tgt) ** 2, axis=1))
    real_idx = [int(i) for i in np.nonzero(real)[0]]
    if not real_idx:
        raise SolverError("no real critical point")
    best = min(real_idx, key=lambda i: obj[i])
    ri = []
    for i in np.nonzero(img_real)[0]:
        g = imgs[i].real
        if p.order.q == (1, 1) and singular_component_membership(AcovTable(p.order, g), 1e-6):
            continue
        if all(np.linalg.norm(g - imgs[j].real) > 1e-6 * np.linalg.norm(g) for j in ri):
            ri.append(int(i))
    ri.sort(key=lambda i: obj[i])
    a = CoefGrid(p.order, P[best].real)
    return CriticalReport(
        order=p.order,
        points=P,
        images=imgs,
        objective=obj,
        real_indices=real_idx,
        real_image_indices=ri,
        selected=a,
        selected_image=gamma_map(a),
        selected_objective=float(obj[best]),
        path_stats=sols.stats,
    )


def ed_count_ma11(p: LseProblem, opts: TrackerOptions | None = None) -> int:
    """Number of distinct complex critical images of the MA(1,1) projection.

    Critical points in coefficient space are counted modulo sign and
    reversal by passing to their images; zero and images on the singular
    locus are excluded.  Equals 16 for generic targets.

    Raises
    ------
    ContaminatedCount
        If stalled paths end away from the excluded loci.
    """
    if p.order.q != (1, 1):
        raise ValueError("ed_count_ma11 needs order (1,1)")
    sys = lse_critical_system(p)
    sols = solve_total_degree(sys, opts or TrackerOptions())
    scale = np.linalg.norm(p.target.values)

    def excluded(a):
        g = np.array([gp(a) for gp in gamma_polynomials(p.order)])
        nrm = np.linalg.norm(g)
        return nrm <= 1e-8 * scale or bool(singular_component_membership(AcovTable(p.order, g), 1e-6))

    imgs = [g for a, g in zip(sols.points, _images(p.order, sols.points)) if not excluded(a)]
    uncertain = 0
    for z in sols.suspect:
        if not np.all(np.isfinite(z)) or excluded(z):
            continue
        try:
            z = newton_refine(sys, z, iters=20)
        except SolverError:
            uncertain += 1
            continue
        if not excluded(z):
            imgs.append(_images(p.order, z[None, :])[0])
    count = 0 if not imgs else int(_cluster(np.array(imgs) / scale, 1e-6).max() + 1)
    if uncertain:
        raise ContaminatedCount(count, count + uncertain)
    return count


# ----------------------------------------------------------------------------
# Gaussian likelihood


def _sites(n):
    return list(itertools.product(*[range(m) for m in n]))


def covariance_matrix(a: CoefGrid, n) -> np.ndarray:
    """Dense covariance of the field on ``{1..n}^d``, sites in lexicographic order."""
    g = gamma_map(a)
    sites = _sites(n)
    S = np.zeros((len(sites), len(sites)))
    for i, s in enumerate(sites):
        for j, u in enumerate(sites):
            S[i, j] = np.real(g(tuple(x - y for x, y in zip(s, u))))
    return S


def _band(g: AcovTable, n) -> np.ndarray:
    """Lower banded storage of the covariance for ``scipy.linalg.cholesky_banded``."""
    order = g.order
    n = tuple(n)
    strides = np.cumprod((1,) + n[:0:-1])[::-1]
    N = int(np.prod(n))
    offs = [int(np.dot(t, strides)) for t in order.lags]
    bw = max(offs) if offs else 0
    ab = np.zeros((bw + 1, N))
    idx = np.indices(n).reshape(len(n), -1)
    flat = np.arange(N)
    for t, o in zip(order.lags, offs):
        val = float(np.real(g.values[order.lag_index[t]]))
        if o == 0:
            ab[0] = val
            continue
        ok = np.ones(N, dtype=bool)
        for ax, ti in enumerate(t):
            ok &= (idx[ax] + ti >= 0) & (idx[ax] + ti < n[ax])
        ab[o, flat[ok]] = val
    return ab


def _loglik_gamma(g: AcovTable, n, Y) -> float:
    ab = _band(g, n)
    try:
        L = linalg.cholesky_banded(ab, lower=True)
    except (linalg.LinAlgError, ValueError):
        return -np.inf
    if np.any(L[0] <= 0):
        return -np.inf
    x = linalg.cho_solve_banded((L, True), Y)
    return float(-np.sum(np.log(L[0])) - 0.5 * Y @ x)


def mle_loglik(a, p: MleProblem) -> float:
    """``-1/2 log|Sigma(a)| - 1/2 Y' Sigma(a)^-1 Y``; ``-inf`` when Sigma is not positive definite."""
    a = a if isinstance(a, CoefGrid) else CoefGrid(p.order, a)
    return _loglik_gamma(gamma_map(a), p.n, p.Y)


def mle_grad(a, p: MleProblem) -> np.ndarray:
    """Central finite-difference gradient of :func:`mle_loglik`, step ``1e-6 (1 + |a_k|)``."""
    x = np.asarray(getattr(a, "flat", a), dtype=float).copy()
    out = np.empty_like(x)
    for k in range(x.size):
        h = 1e-6 * (1 + abs(x[k]))
        xp, xm = x.copy(), x.copy()
        xp[k] += h
        xm[k] -= h
        out[k] = (mle_loglik(xp, p) - mle_loglik(xm, p)) / (2 * h)
    return out


def mle_solve_local(p: MleProblem, init, maxiter: int = 500) -> CoefGrid:
    """Local maximizer of the likelihood from ``init`` inside the box ``[-R, R]``.

    Uses L-BFGS-B with the finite-difference gradient.  Emits an
    ``OptimizationWarning`` and returns the best iterate if the line search
    gives up.
    """
    x0 = np.asarray(getattr(init, "flat", init), dtype=float)
    if x0.size != p.order.ncoef:
        raise ValueError("init has the wrong number of coefficients")
    if not np.isfinite(mle_loglik(x0, p)):
        raise ValueError("init is infeasible: Sigma is not positive definite")
    R = p.bound
    x0 = np.clip(x0, -R, R)

    def f(x):
        v = mle_loglik(x, p)
        return 1e300 if not np.isfinite(v) else -v

    def jac(x):
        return -mle_grad(x, p)

    tol = 1e-8 * (1 + abs(mle_loglik(x0, p)))
    res = optimize.minimize(
        f, x0, jac=jac, method="L-BFGS-B", bounds=[(-R, R)] * x0.size,
        options={"maxiter": maxiter, "gtol": tol, "ftol": 1e-15},
    )
    x = res.x if res.fun <= f(x0) else x0
    if np.max(np.abs(jac(x))) > 1e-6 * (1 + abs(res.fun)) and not _on_box(x, R):
        warnings.warn(f"local ascent stopped early: {res.message}", OptimizationWarning, stacklevel=2)
    return CoefGrid(p.order, x)


def _on_box(x, R):
    return bool(np.any(np.abs(np.abs(x) - R) <= 1e-9 * R))


def mle_exact_ma1_n2(Y) -> tuple[CoefGrid, str]:
    """Closed-form MLE of MA(1) from two observations.

    With ``W = (Y1^2 + Y2^2) / (2 Y1 Y2)`` the maximizer is
    ``a0 = -a1 = sqrt((Y1^2 + Y2^2 + Y1 Y2)/3)`` for ``-2 < W < 0``
    (label ``"(3)"``), ``a0 = a1 = sqrt((Y1^2 + Y2^2 - Y1 Y2)/3)`` for
    ``0 < W < 2`` (``"(2)"``) and otherwise the real solution of
    ``a0 a1 = Y1 Y2``, ``a0^2 + a1^2 = (Y1^2 + Y2^2)/2`` (``"(1)"``, returned
    with ``|a0| >= |a1|``).  When ``Y1 Y2 = 0`` the maximizer is the
    degenerate model ``a = (sqrt((Y1^2 + Y2^2)/2), 0)``.
    """
    y1, y2 = map(float, Y)
    o = Order(1)
    S, P = y1 * y1 + y2 * y2, y1 * y2
    if P == 0:
        return CoefGrid(o, [np.sqrt(S / 2), 0.0]), "degenerate"
    W = S / (2 * P)
    if -2 < W < 0:
        c = np.sqrt((S + P) / 3)
        return CoefGrid(o, [c, -c]), "(3)"
    if 0 < W < 2:
        c = np.sqrt((S - P) / 3)
        return CoefGrid(o, [c, c]), "(2)"
    disc = max((S / 2) ** 2 - 4 * P * P, 0.0)
    a0 = np.sqrt((S / 2 + np.sqrt(disc)) / 2)
    return CoefGrid(o, [a0, P / a0]), "(1)"


# ----------------------------------------------------------------------------
# score systems


def sigma_polynomials(order, n, space: str = "a"):
    """Covariance matrix of the sample as polynomials.

    With ``space="a"`` entries are quadratics in the coefficients, with
    ``space="gamma"`` they are the half-lag variables themselves.
    """
    order = _order(order)
    if space == "a":
        G = gamma_polynomials(order)
        nv = order.ncoef
    elif space == "gamma":
        nv = order.nlags
        G = MPoly.variables(nv)
    else:
        raise ValueError(f"unknown space {space!r}")
    sites = _sites(n)
    zero = MPoly(nv)
    M = []
    for s in sites:
        row = []
        for u in sites:
            t = tuple(x - y for x, y in zip(s, u))
            if any(abs(v) > qq for v, qq in zip(t, order.q)):
                row.append(zero)
                continue
            if any(t) and next(v for v in t if v) < 0:
                t = tuple(-v for v in t)
            row.append(G[order.lag_index[t]])
        M.append(row)
    return M


def _det_and_form(M, Y):
    """``|Sigma|`` and ``Y' adj(Sigma) Y`` (the latter as minus a bordered determinant)."""
    nv = M[0][0].nvars
    D = poly_det(M)
    B = [row + [MPoly.constant(nv, float(y))] for row, y in zip(M, Y)]
    B.append([MPoly.constant(nv, float(y)) for y in Y] + [MPoly(nv)])
    return D, -poly_det(B)


def ml_score_system(order, Y, space: str = "a", reduced: bool = False):
    """Cleared score equations of the Gaussian likelihood.

    With ``D = |Sigma|`` and ``q = Y' adj(Sigma) Y`` the log-likelihood is
    ``-1/2 log D - 1/2 q / D``; multiplying its partial derivatives by
    ``-2 D^2`` gives the polynomials ``D dD + D dq - q dD``.

    Since ``D`` and ``q`` are homogeneous, every critical point off
    ``D = 0`` satisfies ``q = m D`` (``m`` the sample size).  With
    ``reduced`` that relation replaces the first equation and the others
    become ``(m - 1) dk D - dk q`` for ``k >= 1``, which lowers the degrees
    and removes most of the solutions at ``a = 0``.  Solutions of the
    reduced system with a vanishing first variable may be spurious and must
    be checked against the full system.

    Returns
    -------
    (PolySystem, D, q)
    """
    order = _order(order)
    Y = np.asarray(getattr(Y, "values", Y), dtype=float)
    n = Y.shape
    M = sigma_polynomials(order, n, space)
    D, qf = _det_and_form(M, Y.ravel())
    if reduced:
        m = Y.size
        eqs = [(qf - m * D).pruned()]
        eqs += [((m - 1) * D.diff(k) - qf.diff(k)).pruned() for k in range(1, D.nvars)]
        return PolySystem(eqs), D, qf
    eqs = [(D * D.diff(k) + D * qf.diff(k) - qf * D.diff(k)).pruned() for k in range(D.nvars)]
    return PolySystem(eqs), D, qf


@dataclass
class MlCritical:
    """Certified critical points of the likelihood in coefficient space."""

    points: np.ndarray
    residual: np.ndarray
    low: int
    high: int
    stats: dict


def ml_critical_points(order, Y, opts: TrackerOptions | None = None) -> MlCritical:
    """Distinct complex critical points of the likelihood, modulo ``a -> -a``.

    The reduced score system is solved for the sample rescaled to unit mean
    square; since ``Sigma(c a) = c^2 Sigma(a)`` the critical points scale
    back by the same factor.
    Endpoints with ``|Sigma| = 0`` or failing the full score system are
    dropped.  Stalled paths on ``|Sigma| = 0`` are spurious; other stalled
    paths are Newton-refined and either added or counted as uncertain.
    """
    order = _order(order)
    Y = np.asarray(getattr(Y, "values", Y), dtype=float)
    rms = float(np.sqrt(np.mean(Y ** 2)))
    if rms == 0:
        raise ValueError("the sample is identically zero")
    Yn = Y / rms
    red, D, qf = ml_score_system(order, Yn, reduced=True)
    full = PolySystem([(D * D.diff(k) + D * qf.diff(k) - qf * D.diff(k)).pruned() for k in range(D.nvars)])
    sols = solve_total_degree(red, opts or TrackerOptions())
    deg = D.degree

    def on_det(z):
        return abs(D(z)) <= 1e-6 * max(1.0, np.linalg.norm(z)) ** deg

    def genuine(z):
        return not on_det(z) and full.residual(z) <= 1e-8 * (1 + np.linalg.norm(z)) ** full.maxdeg

    pts = [z for z in sols.points if genuine(z)]
    uncertain = 0
    for z in sols.suspect:
        if not np.all(np.isfinite(z)) or on_det(z):
            continue
        try:
            z = newton_refine(red, z, iters=20)
        except SolverError:
            uncertain += 1
            continue
        if genuine(z):
            pts.append(z)
        elif not on_det(z):
            uncertain += 1
    P = _dedupe_sign(np.array(pts)) if pts else np.zeros((0, order.ncoef), dtype=complex)
    res = np.array([full.residual(z) for z in P]) if len(P) else np.zeros(0)
    stats = dict(sols.stats, uncertain=uncertain, scale=rms)
    return MlCritical(P * rms, res, len(P), len(P) + uncertain, stats)


def ml_degree_count(order, n, Y=None, seed: int = 0, opts: TrackerOptions | None = None) -> int:
    """ML degree: number of distinct complex critical points for a generic sample.

    ``Y`` defaults to a standard normal draw with ``seed``.

    Raises
    ------
    BudgetExceeded
        If the cleared system has too many paths.
    ContaminatedCount
        If stalled paths leave the count uncertain; carries the interval.
    """
    order = _order(order)
    n = (n,) * order.d if np.isscalar(n) else tuple(n)
    if Y is None:
        Y = np.random.default_rng(seed).standard_normal(n)
    crit = ml_critical_points(order, np.asarray(Y, dtype=float).reshape(n), opts)
    if crit.high != crit.low:
        raise ContaminatedCount(crit.low, crit.high)
    return crit.low


def _ma1_from_gamma(g0, g1) -> np.ndarray:
    disc = max(g0 * g0 - 4 * g1 * g1, 0.0)
    a0 = np.sqrt((g0 + np.sqrt(disc)) / 2)
    return np.array([a0, g1 / a0])


def mle_solve_homotopy(p: MleProblem, opts: TrackerOptions | None = None) -> CriticalReport:
    """Global likelihood maximizer by solving the score equations.

    For MA(1) the reduced system in autocovariance coordinates is solved;
    real critical tables inside the image ``g0 >= 2|g1|`` are compared with
    the best points on the two boundary rays ``g = c (2, +-1)`` (where
    ``a0 = +-a1``), whose scale has the closed form ``c = Y' S0^-1 Y / m``.
    The winner is returned in invertible form with ``a0 > 0``.  Other
    orders use the full system in coefficient space.
    """
    opts = opts or TrackerOptions()
    Y = p.Y
    m = Y.size
    if p.order.q != (1,):
        crit = ml_critical_points(p.order, p.sample.values, opts)
        P = crit.points
        real = _real_mask(P)
        obj = np.array([mle_loglik(z.real, p) if r else np.nan for z, r in zip(P, real)])
        ridx = [int(i) for i in np.nonzero(real)[0] if np.isfinite(obj[i])]
        if not ridx:
            raise SolverError("no real feasible critical point")
        best = max(ridx, key=lambda i: obj[i])
        a = CoefGrid(p.order, P[best].real)
        return CriticalReport(p.order, P, _images(p.order, P), obj, ridx, ridx, a, gamma_map(a),
                              float(obj[best]), crit.stats)
    sys, D, qf = ml_score_system(p.order, p.sample.values, space="gamma", reduced=True)
    sols = solve_total_degree(sys, opts)
    cands = []
    for z in sols.points:
        if np.max(np.abs(z.imag)) > 1e-6 * (1 + np.linalg.norm(z)):
            continue
        g0, g1 = z.real
        if g0 > 0 and g0 >= 2 * abs(g1):
            cands.append((g0, g1, "interior"))
    o = p.order
    for s in (1, -1):
        S0 = np.real(linalg.toeplitz([2.0, s * 1.0] + [0.0] * (m - 2)))
        c = float(Y @ np.linalg.solve(S0, Y)) / m
        if c > 0:
            cands.append((2 * c, s * c, "boundary"))
    if not cands:
        raise SolverError("no feasible critical point")
    A = np.array([_ma1_from_gamma(g0, g1) for g0, g1, _ in cands])
    obj = np.array([_loglik_gamma(AcovTable(o, [g0, g1]), p.n, Y) for g0, g1, _ in cands])
    best = int(np.argmax(obj))
    a = CoefGrid(o, A[best])
    return CriticalReport(
        order=o,
        points=A.astype(complex),
        images=np.array([[g0, g1] for g0, g1, _ in cands], dtype=complex),
        objective=obj,
        real_indices=list(range(len(cands))),
        real_image_indices=list(range(len(cands))),
        selected=a,
        selected_image=gamma_map(a),
        selected_objective=float(obj[best]),
        path_stats=sols.stats,
        extra={"kinds": [k for *_, k in cands]},
    )


# ----------------------------------------------------------------------------
# innovations algorithm


def innovations_d1(g: AcovTable, iters: int = 50, tol: float = 1e-6) -> CoefGrid:
    """MA coefficients from autocovariances by the innovations recursion.

    After ``iters`` steps the last-row coefficients ``theta_(m,1..q)`` give
    ``(1, theta_1, ..., theta_q)``, rescaled so the implied variance matches
    ``gamma(0)``.  A ``ConvergenceWarning`` is issued when the last two rows
    still differ by more than ``tol`` (typically a unit-circle root).

    Raises
    ------
    ValueError
        If the table is not positive definite.
    """
    if g.order.d != 1:
        raise ValueError("innovations_d1 needs a one-dimensional order")
    q = g.order.q[0]
    gv = np.real(np.asarray(g.values, dtype=complex))

    def kappa(h):
        h = abs(h)
        return gv[h] if h <= q else 0.0

    if gv[0] <= 0:
        raise ValueError("gamma(0) must be positive")
    v = [gv[0]]
    theta = [np.zeros(0)]
    for n in range(1, iters + 1):
        th = np.zeros(n + 1)  # th[j] = theta_{n,j}
        for k in range(n):
            s = kappa(n - k)
            for j in range(k):
                s -= theta[k][k - j] * th[n - j] * v[j]
            th[n - k] = s / v[k]
        vn = gv[0] - sum(th[n - j] ** 2 * v[j] for j in range(n))
        if vn <= 0:
            raise ValueError("autocovariance table is not positive definite")
        v.append(vn)
        theta.append(th)
    last = theta[-1][1:q + 1]
    prev = theta[-2][1:q + 1] if iters > 1 else last
    if np.max(np.abs(last - prev)) > tol:
        warnings.warn("innovations recursion has not converged; the table may have a unit-circle root",
                      ConvergenceWarning, stacklevel=2)
    a = np.concatenate([[1.0], last])
    a *= np.sqrt(gv[0] / np.sum(a * a))
    return CoefGrid(g.order, a)


# ----------------------------------------------------------------------------
# simulation study


def simulation_study(a, n: int, reps: int, seed: int = 0, method: str = "homotopy",
                     opts: TrackerOptions | None = None) -> np.ndarray:
    """MLE of an MA(1) model over ``reps`` simulated paths of length ``n``.

    Path ``i`` uses noise seed ``seed + i``.  ``method`` is ``"homotopy"``
    (global, via the score equations) or ``"local"`` (ascent from the
    innovations estimate).  Returns the estimates as a ``(reps, 2)`` array.
    """
    from .fields import NoiseSpec, empirical_acov, simulate

    a = a if isinstance(a, CoefGrid) else CoefGrid(1, a)
    if a.order.q != (1,):
        raise ValueError("the simulation study is defined for MA(1)")
    out = np.empty((reps, 2))
    for i in range(reps):
        y = simulate(a, n, NoiseSpec(seed + i))
        p = MleProblem(a.order, y)
        if method == "homotopy":
            out[i] = mle_solve_homotopy(p, opts).selected.flat
        elif method == "local":
            g = empirical_acov(y, a.order, center=False)
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", ConvergenceWarning)
                    init = innovations_d1(g)
            except ValueError:
                init = CoefGrid(a.order, [np.std(y.values), 0.0])
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", OptimizationWarning)
                out[i] = mle_solve_local(p, init).flat
        else:
            raise ValueError(f"unknown method {method!r}")
    return out
