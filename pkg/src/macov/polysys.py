"""Dense multivariate polynomials and a total-degree homotopy solver.

Paths are tracked in homogeneous coordinates on a random affine patch, so
solutions at infinity stay at finite projective coordinates and are
classified at the end instead of being chased to overflow.  All paths are
advanced together as one batch of numpy arrays.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from numbers import Number

import numpy as np

from ._parallel import max_workers

__all__ = [
    "MPoly",
    "PolySystem",
    "SolutionSet",
    "TrackerOptions",
    "BudgetExceeded",
    "SolverError",
    "solve_total_degree",
    "newton_refine",
    "univariate_roots",
    "count_distinct",
    "parse_system",
    "format_system",
    "poly_det",
]


class SolverError(RuntimeError):
    """Raised when a numerical solve cannot produce a usable answer."""


class BudgetExceeded(SolverError):
    """Raised when a homotopy would need more paths than allowed."""


class MPoly:
    """Sparse multivariate polynomial ``{exponent tuple: coefficient}``.

    Zero coefficients are dropped on construction.  Coefficients may be any
    numeric type (``Fraction`` is fine for exact construction); evaluation
    works in complex floating point.
    """

    __slots__ = ("nvars", "terms", "_compiled")

    def __init__(self, nvars: int, terms=None):
        self.nvars = int(nvars)
        clean = {}
        if terms:
            items = terms.items() if isinstance(terms, dict) else terms
            for exp, c in items:
                exp = tuple(int(e) for e in exp)
                if len(exp) != self.nvars:
                    raise ValueError(f"exponent {exp} has wrong length for {nvars} variables")
                if any(e < 0 for e in exp):
                    raise ValueError(f"negative exponent in {exp}")
                clean[exp] = clean.get(exp, 0) + c
        self.terms = {e: c for e, c in clean.items() if c != 0}
        self._compiled = None

    @classmethod
    def constant(cls, nvars, c):
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def variable(cls, i, nvars):
        exp = [0] * nvars
        exp[i] = 1
        return cls(nvars, {tuple(exp): 1})

    @classmethod
    def variables(cls, nvars):
        return [cls.variable(i, nvars) for i in range(nvars)]

    @classmethod
    def from_univariate(cls, coefs):
        """Univariate polynomial from ascending coefficients ``c_0, c_1, ...``."""
        return cls(1, {(k,): c for k, c in enumerate(coefs)})

    @property
    def degree(self) -> int:
        if not self.terms:
            return -1
        return max(sum(e) for e in self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def _coerce(self, other):
        if isinstance(other, MPoly):
            if other.nvars != self.nvars:
                raise ValueError("polynomials have different numbers of variables")
            return other
        if isinstance(other, Number):
            return MPoly.constant(self.nvars, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0) + c
        return MPoly(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return MPoly(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Number):
            return MPoly(self.nvars, {e: c * other for e, c in self.terms.items()})
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(x + y for x, y in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return MPoly(self.nvars, out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative powers are not polynomials")
        out = MPoly.constant(self.nvars, 1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash((self.nvars, frozenset(self.terms.items())))

    def diff(self, i: int) -> "MPoly":
        out = {}
        for e, c in self.terms.items():
            if e[i]:
                e2 = list(e)
                e2[i] -= 1
                out[tuple(e2)] = c * e[i]
        return MPoly(self.nvars, out)

    def map_coeffs(self, fn) -> "MPoly":
        return MPoly(self.nvars, {e: fn(c) for e, c in self.terms.items()})

    def pruned(self, rel: float = 1e-13) -> "MPoly":
        """Drop floating-point coefficients below ``rel`` times the largest one."""
        if not self.terms:
            return self
        big = max(abs(c) for c in self.terms.values())
        return MPoly(self.nvars, {e: c for e, c in self.terms.items() if abs(c) > rel * big})

    def substitute(self, values: dict) -> "MPoly":
        """Fix some variables to numbers; the variable count is unchanged."""
        out = {}
        for e, c in self.terms.items():
            e2 = list(e)
            for i, v in values.items():
                c = c * v ** e[i]
                e2[i] = 0
            out[tuple(e2)] = out.get(tuple(e2), 0) + c
        return MPoly(self.nvars, out)

    def homogenize(self) -> "MPoly":
        """Homogenize with a new variable placed first."""
        deg = self.degree
        return MPoly(self.nvars + 1, {(deg - sum(e),) + e: c for e, c in self.terms.items()})

    def compiled(self):
        if self._compiled is None:
            exps = np.array(list(self.terms), dtype=np.int64).reshape(-1, self.nvars)
            coefs = np.array([complex(c) for c in self.terms.values()], dtype=complex)
            self._compiled = (exps, coefs)
        return self._compiled

    def __call__(self, z):
        """Evaluate at one point (shape ``(nvars,)``) or a batch ``(P, nvars)``."""
        z = np.asarray(z, dtype=complex)
        single = z.ndim <= 1
        z = np.atleast_2d(z.reshape(-1, self.nvars) if single else z)
        exps, coefs = self.compiled()
        if exps.shape[0] == 0:
            vals = np.zeros(z.shape[0], dtype=complex)
        else:
            mono = np.prod(z[:, None, :] ** exps[None, :, :], axis=2)
            vals = mono @ coefs
        return vals[0] if single else vals

    def __repr__(self):
        return f"MPoly({format_poly(self)})"


def format_poly(p: MPoly) -> str:
    if not p.terms:
        return "0"
    parts = []
    for e in sorted(p.terms, key=lambda e: (-sum(e), tuple(-x for x in e))):
        c = p.terms[e]
        c = complex(c)
        cs = repr(c.real) if c.imag == 0 else f"({c.real!r}{c.imag:+}j)"
        mons = [f"x{i + 1}" if k == 1 else f"x{i + 1}^{k}" for i, k in enumerate(e) if k]
        parts.append(" * ".join([cs] + mons))
    return " + ".join(parts)


_TOKEN = re.compile(
    r"\s*(?:(?P<num>\((?:[^()]*)\)|(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?j?)"
    r"|(?P<var>x(?P<idx>\d+)(?:\^(?P<pow>\d+))?)|(?P<op>[+\-*]))")


def _parse_line(line: str):
    terms = []
    pos = 0
    sign = 1
    coef = None
    mon = {}
    started = False

    def flush():
        nonlocal coef, mon, started
        if started:
            terms.append((sign * (1 if coef is None else coef), dict(mon)))
        coef, mon, started = None, {}, False

    while pos < len(line):
        m = _TOKEN.match(line, pos)
        if not m or m.end() == pos:
            if line[pos:].strip() == "":
                break
            raise ValueError(f"cannot parse polynomial near {line[pos:]!r}")
        pos = m.end()
        if m.group("op") in ("+", "-"):
            if started:
                flush()
                sign = 1
            if m.group("op") == "-":
                sign = -sign
        elif m.group("op") == "*":
            continue
        elif m.group("num") is not None:
            c = complex(m.group("num").replace(" ", ""))
            c = c.real if c.imag == 0 else c
            coef = c if coef is None else coef * c
            started = True
        else:
            i = int(m.group("idx"))
            if i < 1:
                raise ValueError("variables are numbered from x1")
            mon[i] = mon.get(i, 0) + int(m.group("pow") or 1)
            started = True
    flush()
    return terms


def parse_system(text: str) -> "PolySystem":
    """Parse the line-based text format: one polynomial per line.

    Terms look like ``coef * x1^e1 * x2^e2``; ``*`` may be replaced by
    spaces, ``#`` starts a comment, blank lines are ignored.
    """
    rows = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            rows.append(_parse_line(line))
    if not rows:
        raise ValueError("no polynomials found")
    nvars = max((max(mon) for row in rows for _, mon in row if mon), default=1)
    polys = []
    for row in rows:
        terms = {}
        for c, mon in row:
            exp = tuple(mon.get(i + 1, 0) for i in range(nvars))
            terms[exp] = terms.get(exp, 0) + c
        polys.append(MPoly(nvars, terms))
    return PolySystem(polys)


def format_system(sys: "PolySystem") -> str:
    return "\n".join(format_poly(p) for p in sys.equations) + "\n"


class _BatchEval:
    """Batched evaluation of a list of polynomials and their Jacobian."""

    def __init__(self, polys, nvars):
        self.nvars = nvars
        self.neq = len(polys)
        rows, coefs, eqs = [], [], []
        for i, p in enumerate(polys):
            exps, cs = p.compiled()
            rows.append(exps)
            coefs.append(cs)
            eqs.append(np.full(len(cs), i))
        self.exps = np.concatenate(rows) if rows else np.zeros((0, nvars), dtype=np.int64)
        coef = np.concatenate(coefs)
        eq = np.concatenate(eqs)
        T = len(coef)
        self.maxdeg = int(self.exps.max()) if T else 0
        self.C = np.zeros((T, self.neq), dtype=complex)
        self.C[np.arange(T), eq] = coef
        self.dC = []
        self.dexps = []
        for v in range(nvars):
            Cv = np.zeros((T, self.neq), dtype=complex)
            Cv[np.arange(T), eq] = coef * self.exps[:, v]
            self.dC.append(Cv)
            dv = self.exps.copy()
            dv[:, v] = np.maximum(dv[:, v] - 1, 0)
            self.dexps.append(dv)

    def _powers(self, Z):
        P = Z.shape[0]
        pw = np.empty((P, self.nvars, self.maxdeg + 1), dtype=complex)
        pw[:, :, 0] = 1
        for k in range(1, self.maxdeg + 1):
            pw[:, :, k] = pw[:, :, k - 1] * Z
        return pw

    def __call__(self, Z, jac=True):
        pw = self._powers(Z)
        # per-variable factors z_v^e_v for every term, shape (P, T)
        fac = [pw[:, v, self.exps[:, v]] for v in range(self.nvars)]
        pre = [None] * (self.nvars + 1)
        pre[0] = np.ones_like(fac[0]) if fac else None
        for v in range(self.nvars):
            pre[v + 1] = pre[v] * fac[v]
        vals = pre[-1] @ self.C
        if not jac:
            return vals
        J = np.empty((Z.shape[0], self.neq, self.nvars), dtype=complex)
        suf = np.ones_like(fac[0])
        for v in range(self.nvars - 1, -1, -1):
            dv = pw[:, v, self.dexps[v][:, v]]
            J[:, :, v] = (pre[v] * dv * suf) @ self.dC[v]
            suf = suf * fac[v]
        return vals, J


class PolySystem:
    """A list of polynomials in a common set of variables."""

    def __init__(self, equations):
        equations = list(equations)
        if not equations:
            raise ValueError("empty system")
        nv = {p.nvars for p in equations}
        if len(nv) != 1:
            raise ValueError("all equations must have the same number of variables")
        self.equations = equations
        self.nvars = nv.pop()
        self._eval = None

    def __len__(self):
        return len(self.equations)

    @property
    def is_square(self) -> bool:
        return len(self.equations) == self.nvars

    @property
    def degrees(self) -> list[int]:
        return [p.degree for p in self.equations]

    @property
    def bezout(self) -> int:
        return math.prod(max(d, 0) for d in self.degrees)

    @property
    def maxdeg(self) -> int:
        return max(self.degrees)

    def _batch(self):
        if self._eval is None:
            self._eval = _BatchEval(self.equations, self.nvars)
        return self._eval

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        if z.ndim == 1:
            return self._batch()(z[None, :], jac=False)[0]
        return self._batch()(z, jac=False)

    def jacobian(self, z):
        z = np.asarray(z, dtype=complex)
        if z.ndim == 1:
            return self._batch()(z[None, :])[1][0]
        return self._batch()(z)[1]

    def evaluate_with_jacobian(self, Z):
        return self._batch()(np.asarray(Z, dtype=complex))

    def residual(self, z) -> float:
        return float(np.max(np.abs(self(z))))


@dataclass
class TrackerOptions:
    """Knobs for the predictor-corrector path tracker."""

    max_paths: int = 20000
    blowup: float = 1e8
    h_init: float = 0.02
    h_max: float = 0.05
    h_min: float = 1e-7
    corrector_tol: float = 1e-9
    corrector_iters: int = 3
    grow_after: int = 5
    max_steps: int = 20000
    final_tol: float = 1e-8
    cluster_tol: float = 1e-6
    real_tol: float = 1e-6
    retrack: int = 2
    seed: int | None = 0


@dataclass
class SolutionSet:
    """Endpoints of a homotopy solve.

    ``points`` holds the deduplicated converged solutions; ``suspect`` holds
    endpoints of paths that stalled near the end (typically singular
    solutions) and are kept apart from the clean count.
    """

    points: np.ndarray
    residual: np.ndarray
    converged: np.ndarray
    cluster_id: np.ndarray
    is_real: np.ndarray
    suspect: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), dtype=complex))
    stats: dict = field(default_factory=dict)
    system: PolySystem | None = field(default=None, repr=False)
    multiplicity: np.ndarray | None = None

    def __len__(self):
        return len(self.points)

    @property
    def real_points(self) -> np.ndarray:
        return self.points[self.is_real].real


def _solve_batch(J, r):
    """Solve ``J x = r`` for a stack of systems; singular ones give nan."""
    try:
        return np.linalg.solve(J, r[..., None])[..., 0]
    except np.linalg.LinAlgError:
        out = np.full(r.shape, np.nan + 0j)
        for i in range(J.shape[0]):
            try:
                out[i] = np.linalg.solve(J[i], r[i])
            except np.linalg.LinAlgError:
                pass
        return out


class _Homotopy:
    """``H(Z, s) = (1 - s) g G(Z) + s F(Z)`` on the patch ``c . Z = 1``."""

    def __init__(self, system: PolySystem, rng):
        self.n = system.nvars
        self.deg = np.array(system.degrees)
        self.F = _BatchEval([p.homogenize() for p in system.equations], self.n + 1)
        self.gamma = np.exp(2j * np.pi * rng.random())
        c = rng.normal(size=self.n + 1) + 1j * rng.normal(size=self.n + 1)
        self.patch = c / np.linalg.norm(c)

    def start_points(self):
        roots = [np.exp(2j * np.pi * np.arange(d) / d) for d in self.deg]
        grids = np.meshgrid(*roots, indexing="ij")
        z = np.stack([g.ravel() for g in grids], axis=1)
        Z = np.hstack([np.ones((z.shape[0], 1)), z])
        return Z / (Z @ self.patch)[:, None]

    def _start(self, Z):
        d = self.deg
        z0 = Z[:, :1]
        z = Z[:, 1:]
        G = z ** d - z0 ** d
        P = Z.shape[0]
        JG = np.zeros((P, self.n, self.n + 1), dtype=complex)
        JG[:, :, 0] = -d * z0 ** (d - 1)
        idx = np.arange(self.n)
        JG[:, idx, idx + 1] = d * z ** (d - 1)
        return G, JG

    def evaluate(self, Z, s):
        F, JF = self.F(Z)
        G, JG = self._start(Z)
        s_ = s[:, None]
        Hv = (1 - s_) * self.gamma * G + s_ * F
        JH = (1 - s_)[:, :, None] * self.gamma * JG + s_[:, :, None] * JF
        P = Z.shape[0]
        Jfull = np.empty((P, self.n + 1, self.n + 1), dtype=complex)
        Jfull[:, : self.n] = JH
        Jfull[:, self.n] = self.patch
        rfull = np.empty((P, self.n + 1), dtype=complex)
        rfull[:, : self.n] = Hv
        rfull[:, self.n] = Z @ self.patch - 1
        Hs = np.zeros((P, self.n + 1), dtype=complex)
        Hs[:, : self.n] = F - self.gamma * G
        return rfull, Jfull, Hs


def _track(hom: _Homotopy, Z, opts: TrackerOptions, h_max: float):
    """Track a batch of paths from s = 0 to s = 1.

    Returns final points, final s values and a status code per path:
    0 reached s = 1, 1 stalled after s > 0.999, 2 failed earlier.
    """
    P = Z.shape[0]
    Z = Z.copy()
    s = np.zeros(P)
    h = np.full(P, min(opts.h_init, h_max))
    succ = np.zeros(P, dtype=int)
    status = np.full(P, -1)
    steps = 0
    while True:
        act = np.nonzero(status < 0)[0]
        if act.size == 0 or steps >= opts.max_steps:
            break
        steps += 1
        Za, sa = Z[act], s[act]
        ha = np.minimum(h[act], 1.0 - sa)
        _, J, Hs = hom.evaluate(Za, sa)
        dZ = -_solve_batch(J, Hs)
        s1 = np.where(ha >= 1.0 - sa, 1.0, sa + ha)
        Zp = Za + (s1 - sa)[:, None] * dZ
        ok = np.all(np.isfinite(Zp), axis=1)
        prev = None
        done = np.zeros(act.size, dtype=bool)
        for _ in range(opts.corrector_iters):
            r, J, _ = hom.evaluate(Zp, s1)
            delta = -_solve_batch(J, r)
            nd = np.linalg.norm(delta, axis=1)
            nz = np.linalg.norm(Zp, axis=1)
            bad = ~np.isfinite(nd)
            if prev is not None:
                bad |= (nd > 0.5 * prev) & (nd > opts.corrector_tol * nz)
            ok &= ~bad
            # damped update: cap the step length relative to the point
            damp = np.minimum(1.0, 0.1 * nz / np.where(nd > 0, nd, 1.0))
            step = np.where(np.isfinite(delta), delta, 0) * damp[:, None]
            Zp = np.where(done[:, None], Zp, Zp + step)
            done |= (nd <= opts.corrector_tol * nz) & (damp == 1.0)
            prev = np.where(np.isfinite(nd), nd, np.inf)
        ok &= done & np.all(np.isfinite(Zp), axis=1)
        acc = act[ok]
        rej = act[~ok]
        Z[acc] = Zp[ok]
        s[acc] = s1[ok]
        succ[acc] += 1
        grow = acc[succ[acc] >= opts.grow_after]
        h[grow] = np.minimum(2 * h[grow], h_max)
        succ[grow] = 0
        status[acc[s[acc] >= 1.0]] = 0
        h[rej] /= 2
        succ[rej] = 0
        small = rej[h[rej] < opts.h_min]
        status[small] = np.where(s[small] > 0.999, 1, 2)
    status[status < 0] = 2
    return Z, s, status


def _refine_affine(system: PolySystem, z, iters=8):
    """A few Newton steps on the affine system; returns point and residual."""
    z = z.copy()
    for _ in range(iters):
        F, J = system.evaluate_with_jacobian(z)
        bad = ~np.all(np.isfinite(F), axis=1)
        delta = -_solve_batch(J, F)
        fin = np.all(np.isfinite(delta), axis=1) & ~bad
        z[fin] += delta[fin]
    res = np.max(np.abs(system(z)), axis=1) if len(z) else np.zeros(0)
    return z, res


def _cluster(points, tol):
    """Greedy clustering; returns cluster ids in canonical (sorted) order."""
    m = len(points)
    ids = np.full(m, -1)
    if m == 0:
        return ids
    order = np.lexsort(tuple(np.round(points[:, ::-1].real, 6).T) + ())
    reps = []
    for i in order:
        p = points[i]
        for cid, rep in enumerate(reps):
            if np.linalg.norm(p - rep) <= tol * (1 + np.linalg.norm(rep)):
                ids[i] = cid
                break
        else:
            ids[i] = len(reps)
            reps.append(p)
    return ids


def _real_mask(points, real_tol):
    if len(points) == 0:
        return np.zeros(0, dtype=bool)
    norms = np.linalg.norm(points, axis=1)
    return np.all(np.abs(points.imag) <= real_tol * (1 + norms)[:, None], axis=1)


def solve_total_degree(sys: PolySystem, opts: TrackerOptions | None = None, **kw) -> SolutionSet:
    """All isolated complex solutions of a square system by homotopy continuation.

    Paths start at the roots of ``z_i^{d_i} - 1`` and follow
    ``(1 - s) g G + s F`` with a random unit complex ``g``.  Endpoints with
    ``||z|| > blowup`` (or at projective infinity) count as divergent,
    stalled endpoints past ``s = 0.999`` go to ``suspect``.

    Raises
    ------
    ValueError
        If the system is not square.
    BudgetExceeded
        If the Bezout number exceeds ``opts.max_paths``.
    SolverError
        If every path diverged.
    """
    opts = opts or TrackerOptions()
    for k, v in kw.items():
        setattr(opts, k, v)
    if not sys.is_square:
        raise ValueError(f"system has {len(sys)} equations in {sys.nvars} unknowns")
    bez = sys.bezout
    if bez > opts.max_paths:
        raise BudgetExceeded(f"Bezout number {bez} exceeds path budget {opts.max_paths}")
    if bez == 0:
        raise SolverError("system contains a zero polynomial")
    rng = np.random.default_rng(opts.seed)
    hom = _Homotopy(sys, rng)
    Z0 = hom.start_points()

    def run(Zstart, h_max):
        chunks = np.array_split(np.arange(len(Zstart)), max(1, min(max_workers(), len(Zstart) // 64)))
        if len(chunks) == 1:
            return _track(hom, Zstart, opts, h_max)
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(len(chunks)) as ex:
            parts = list(ex.map(lambda c: _track(hom, Zstart[c], opts, h_max), chunks))
        return tuple(np.concatenate(x) for x in zip(*parts))

    Z, s, status = run(Z0, opts.h_max)
    h_max = opts.h_max
    for _ in range(opts.retrack):
        z, kind, res = _classify(sys, hom, Z, status, opts)
        redo = _jumped_paths(sys, z, kind, opts) | (status == 2)
        if not redo.any():
            break
        h_max /= 4
        Zr, sr, str_ = run(Z0[redo], h_max)
        Z[redo], s[redo], status[redo] = Zr, sr, str_
    z, kind, res = _classify(sys, hom, Z, status, opts)

    conv = kind == "converged"
    stats = {
        "bezout": bez,
        "converged": int(conv.sum()),
        "divergent": int((kind == "divergent").sum()),
        "suspect": int((kind == "suspect").sum()),
        "failed": int((kind == "failed").sum()),
        "gamma": [hom.gamma.real, hom.gamma.imag],
    }
    if stats["divergent"] == bez:
        raise SolverError("all paths diverged")
    pts = z[conv]
    ids = _cluster(pts, opts.cluster_tol)
    nclu = ids.max() + 1 if len(ids) else 0
    reps = np.array([pts[ids == c][0] for c in range(nclu)], dtype=complex).reshape(-1, sys.nvars)
    mult = np.array([(ids == c).sum() for c in range(nclu)], dtype=int)
    reps, rres = _refine_affine(sys, reps, iters=3)
    stats["distinct"] = int(nclu)
    return SolutionSet(
        points=reps,
        residual=rres,
        converged=np.ones(nclu, dtype=bool),
        cluster_id=np.arange(nclu),
        is_real=_real_mask(reps, opts.real_tol),
        suspect=z[kind == "suspect"],
        stats=stats,
        system=sys,
        multiplicity=mult,
    )


def _classify(sys, hom, Z, status, opts):
    P = Z.shape[0]
    kind = np.full(P, "failed", dtype=object)
    z = np.full((P, sys.nvars), np.nan + 0j)
    res = np.full(P, np.inf)
    z0 = Z[:, 0]
    norms = np.linalg.norm(Z[:, 1:], axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        far = (np.abs(z0) * opts.blowup < norms) | (z0 == 0)
    reached = status <= 1
    kind[reached & far] = "divergent"
    cand = np.nonzero(reached & ~far)[0]
    if cand.size:
        zc = Z[cand, 1:] / Z[cand, :1]
        zc, rc = _refine_affine(sys, zc)
        scale = 1 + np.linalg.norm(zc, axis=1) ** sys.maxdeg
        good = (rc <= opts.final_tol * scale) & (status[cand] == 0)
        big = np.linalg.norm(zc, axis=1) > opts.blowup
        z[cand] = zc
        res[cand] = rc
        kind[cand[big]] = "divergent"
        kind[cand[good & ~big]] = "converged"
        kind[cand[~good & ~big]] = "suspect"
    return z, kind, res


def _jumped_paths(sys, z, kind, opts):
    """Paths sharing a nonsingular endpoint: a sign of path jumping."""
    conv = np.nonzero(kind == "converged")[0]
    flag = np.zeros(len(z), dtype=bool)
    if conv.size < 2:
        return flag
    pts = z[conv]
    ids = _cluster(pts, 1e-6)
    J = sys.jacobian(pts)
    with np.errstate(all="ignore"):
        cond = np.linalg.cond(J)
    for c in np.unique(ids):
        members = conv[ids == c]
        if len(members) > 1 and cond[ids == c][0] < 1e8:
            flag[members] = True
    return flag


def newton_refine(sys: PolySystem, z0, iters: int = 50) -> np.ndarray:
    """Newton's method from ``z0`` until the residual contract is met.

    Raises ``SolverError`` on a singular Jacobian or when no convergence
    happens within ``iters`` steps.
    """
    z = np.array(z0, dtype=complex).ravel()
    if z.size != sys.nvars or not sys.is_square:
        raise ValueError("newton_refine needs a square system and a matching start point")
    target = 1e-12 * (1 + np.linalg.norm(z) ** sys.maxdeg)
    for _ in range(iters):
        F, J = sys.evaluate_with_jacobian(z[None, :])
        F, J = F[0], J[0]
        if np.max(np.abs(F)) <= target:
            return z
        try:
            if np.linalg.cond(J) > 1e14:
                raise np.linalg.LinAlgError
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            raise SolverError("singular Jacobian during Newton refinement") from None
        z = z + step
        if not np.all(np.isfinite(z)):
            break
        if np.linalg.norm(step) <= 1e-15 * (1 + np.linalg.norm(z)):
            if sys.residual(z) <= target * 10:
                return z
    if np.all(np.isfinite(z)) and sys.residual(z) <= target:
        return z
    raise SolverError("Newton refinement did not converge")


def univariate_roots(p, cluster_tol: float = 1e-8) -> SolutionSet:
    """All complex roots of a univariate polynomial.

    Companion-matrix eigenvalues (``numpy.roots``) polished by Newton steps
    on the original coefficients.  Roots closer than ``cluster_tol``
    (relative) share a cluster id.
    """
    if isinstance(p, MPoly):
        if p.nvars != 1:
            raise ValueError("univariate_roots needs a polynomial in one variable")
        if p.is_zero():
            raise ValueError("zero polynomial")
        deg = p.degree
        coefs = np.zeros(deg + 1, dtype=complex)
        for (k,), c in p.terms.items():
            coefs[k] = complex(c)
    else:
        coefs = np.trim_zeros(np.asarray(p, dtype=complex), "b")
        if coefs.size == 0:
            raise ValueError("zero polynomial")
        deg = coefs.size - 1
    if deg < 1:
        raise ValueError("polynomial has no roots (degree < 1)")
    desc = coefs[::-1]
    roots = np.roots(desc).astype(complex)
    dp = np.polyder(desc)
    for _ in range(3):
        f = np.polyval(desc, roots)
        g = np.polyval(dp, roots)
        with np.errstate(all="ignore"):
            step = f / g
        better = np.isfinite(step) & (np.abs(np.polyval(desc, roots - step)) < np.abs(f))
        roots = np.where(better, roots - step, roots)
    ids = _cluster(roots[:, None], cluster_tol)
    res = np.abs(np.polyval(desc, roots))
    return SolutionSet(
        points=roots[:, None],
        residual=res,
        converged=np.ones(deg, dtype=bool),
        cluster_id=ids,
        is_real=_real_mask(roots[:, None], 1e-6),
        stats={"degree": deg, "distinct": int(ids.max() + 1)},
    )


def count_distinct(sols: SolutionSet, cluster_tol: float = 1e-6, canon=None) -> int:
    """Number of distinct solutions after optional canonicalization.

    ``canon`` maps a point to a representative of its equivalence class
    (for example fixing an overall sign).  Cluster representatives are
    Newton-refined first when the solution set carries its system.
    """
    pts = np.asarray(sols.points)
    if len(pts) == 0:
        return 0
    if sols.system is not None and sols.system.is_square:
        refined = []
        for p in pts:
            try:
                refined.append(newton_refine(sols.system, p, iters=10))
            except SolverError:
                refined.append(p)
        pts = np.array(refined)
    if canon is not None:
        pts = np.array([canon(p) for p in pts])
    ids = _cluster(pts, cluster_tol)
    return int(ids.max() + 1)


def poly_det(M) -> MPoly:
    """Determinant of a square matrix of polynomials by memoized Laplace expansion.

    Expansion runs along rows; minors are keyed by the set of unused
    columns, so banded and sparse matrices stay cheap.
    """
    n = len(M)
    if n == 0 or any(len(row) != n for row in M):
        raise ValueError("poly_det needs a nonempty square matrix")
    nv = next(e.nvars for row in M for e in row if isinstance(e, MPoly))
    M = [[e if isinstance(e, MPoly) else MPoly.constant(nv, e) for e in row] for row in M]
    memo: dict[tuple[int, int], MPoly] = {}

    def rec(r, cols):
        if r == n:
            return MPoly.constant(nv, 1)
        key = (r, cols)
        if key in memo:
            return memo[key]
        tot = MPoly(nv)
        sign = 1
        for j in range(n):
            if cols >> j & 1:
                if not M[r][j].is_zero():
                    sub = rec(r + 1, cols & ~(1 << j))
                    if not sub.is_zero():
                        term = M[r][j] * sub
                        tot = tot + term if sign > 0 else tot - term
                sign = -sign
        memo[key] = tot
        return tot

    return rec(0, (1 << n) - 1)
