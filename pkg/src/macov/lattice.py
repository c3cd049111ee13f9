"""Lattice orders, coefficient grids, autocovariance tables and the map between them.

A moving-average field of order ``q`` on ``Z^d`` is determined by its
coefficient grid ``a_k``, ``k in [0, q]``.  Its autocovariance is

    gamma(t) = sum_{k, k+t in [0, q]} a_k a_{k+t}

with unit white-noise variance.  Only half of the lags are stored, since
``gamma(-t) = gamma(t)``.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "Order",
    "CoefGrid",
    "AcovTable",
    "gamma_map",
    "laurent_residual",
    "reverse",
    "quartic_value",
    "singular_component_membership",
    "projective_normalize",
    "is_proper_order",
]


@dataclass(frozen=True)
class Order:
    """Model order ``q = (q_1, ..., q_d)`` with every ``q_i >= 1``."""

    q: tuple[int, ...]

    def __init__(self, q):
        if np.isscalar(q):
            q = (q,)
        q = tuple(int(v) for v in q)
        if len(q) == 0:
            raise ValueError("order must have at least one axis")
        if any(v < 1 for v in q):
            raise ValueError(f"every q_i must be >= 1, got {q}")
        object.__setattr__(self, "q", q)

    @property
    def d(self) -> int:
        return len(self.q)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(v + 1 for v in self.q)

    @property
    def ncoef(self) -> int:
        """Q + 1, the number of coefficients."""
        return int(np.prod(self.shape))

    @property
    def nlags(self) -> int:
        """N + 1, the number of canonical half-lags."""
        return (int(np.prod([2 * v + 1 for v in self.q])) + 1) // 2

    @cached_property
    def lags(self) -> tuple[tuple[int, ...], ...]:
        """Canonical half-lags in ascending lexicographic order."""
        ranges = [range(-v, v + 1) for v in self.q]
        return tuple(t for t in itertools.product(*ranges) if _is_half(t))

    @cached_property
    def lag_index(self) -> dict[tuple[int, ...], int]:
        return {t: i for i, t in enumerate(self.lags)}

    @cached_property
    def coef_indices(self) -> tuple[tuple[int, ...], ...]:
        """Multi-indices ``k in [0, q]`` in row-major order."""
        return tuple(itertools.product(*[range(v + 1) for v in self.q]))

    def __str__(self):
        return "(" + ",".join(str(v) for v in self.q) + ")"


def _is_half(t) -> bool:
    for v in t:
        if v != 0:
            return v > 0
    return True


def _as_order(order) -> Order:
    return order if isinstance(order, Order) else Order(order)


@dataclass(frozen=True)
class CoefGrid:
    """Coefficients ``a_k`` of an MA(q) field, stored with shape ``q + 1``.

    Values may be real or complex.  Flat input is read in row-major order
    (last axis fastest).
    """

    order: Order
    values: np.ndarray = field(repr=False)

    def __init__(self, order, values):
        order = _as_order(order)
        arr = np.asarray(values)
        if arr.dtype.kind not in "fc":
            arr = arr.astype(float)
        if arr.size != order.ncoef:
            raise ValueError(
                f"order {order} needs {order.ncoef} coefficients, got {arr.size}")
        if arr.ndim != 1 and arr.shape != order.shape:
            raise ValueError(f"coefficient shape {arr.shape} does not match {order.shape}")
        arr = np.array(arr.reshape(order.shape))
        arr.flags.writeable = False
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "values", arr)

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel()

    @property
    def is_real(self) -> bool:
        return self.values.dtype.kind != "c" or bool(np.all(self.values.imag == 0))

    def __getitem__(self, k):
        return self.values[tuple(k)]

    def __repr__(self):
        return f"CoefGrid(order={self.order}, values={self.flat.tolist()})"

    def to_json(self) -> dict:
        flat = self.flat
        out = {"q": list(self.order.q), "a": [float(v) for v in flat.real]}
        if flat.dtype.kind == "c" and np.any(flat.imag != 0):
            out["a_imag"] = [float(v) for v in flat.imag]
        return out

    @classmethod
    def from_json(cls, obj) -> "CoefGrid":
        if isinstance(obj, str):
            obj = json.loads(obj)
        vals = np.asarray(obj["a"], dtype=float)
        if "a_imag" in obj:
            vals = vals + 1j * np.asarray(obj["a_imag"], dtype=float)
        return cls(obj["q"], vals)


@dataclass(frozen=True)
class AcovTable:
    """Half-lag autocovariance values in canonical lag order."""

    order: Order
    values: np.ndarray = field(repr=False)

    def __init__(self, order, values):
        order = _as_order(order)
        arr = np.array(values)
        if arr.dtype.kind not in "fc":
            arr = arr.astype(float)
        arr = arr.ravel()
        if arr.size != order.nlags:
            raise ValueError(f"order {order} needs {order.nlags} half-lag values, got {arr.size}")
        arr.flags.writeable = False
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "values", arr)

    def __call__(self, t):
        """``gamma(t)`` for any ``t``; zero outside ``[-q, q]``."""
        t = (t,) if np.isscalar(t) else tuple(int(v) for v in t)
        if len(t) != self.order.d:
            raise ValueError(f"lag {t} has wrong dimension for order {self.order}")
        if any(abs(v) > qi for v, qi in zip(t, self.order.q)):
            return self.values.dtype.type(0)
        if not _is_half(t):
            t = tuple(-v for v in t)
        return self.values[self.order.lag_index[t]]

    def full(self) -> np.ndarray:
        """Dense array of ``gamma(t)`` over ``[-q, q]`` (index ``t + q``)."""
        q = self.order.q
        out = np.zeros([2 * v + 1 for v in q], dtype=self.values.dtype)
        for t, val in zip(self.order.lags, self.values):
            out[tuple(v + qi for v, qi in zip(t, q))] = val
            out[tuple(-v + qi for v, qi in zip(t, q))] = val
        return out

    def __repr__(self):
        return f"AcovTable(order={self.order}, values={self.values.tolist()})"

    def to_json(self, lags: bool = True) -> dict:
        vals = self.values
        out = {"q": list(self.order.q), "gamma": [float(v) for v in vals.real]}
        if vals.dtype.kind == "c" and np.any(vals.imag != 0):
            out["gamma_imag"] = [float(v) for v in vals.imag]
        if lags:
            out["lags"] = [list(t) for t in self.order.lags]
        return out

    @classmethod
    def from_json(cls, obj) -> "AcovTable":
        if isinstance(obj, str):
            obj = json.loads(obj)
        vals = np.asarray(obj["gamma"], dtype=float)
        if "gamma_imag" in obj:
            vals = vals + 1j * np.asarray(obj["gamma_imag"], dtype=float)
        table = cls(obj["q"], vals)
        if "lags" in obj and [tuple(t) for t in obj["lags"]] != list(table.order.lags):
            raise ValueError("lags field does not match canonical half-lag order")
        return table


def _overlap_slices(t, q):
    """Slices selecting k and k + t with both inside [0, q]."""
    lo, hi = [], []
    for ti, qi in zip(t, q):
        if ti >= 0:
            lo.append(slice(0, qi - ti + 1))
            hi.append(slice(ti, qi + 1))
        else:
            lo.append(slice(-ti, qi + 1))
            hi.append(slice(0, qi + ti + 1))
    return tuple(lo), tuple(hi)


def gamma_map(a: CoefGrid) -> AcovTable:
    """Autocovariance table of the MA field with coefficients ``a``.

    No complex conjugation is applied, so the map is the same polynomial
    map over the reals and the complex numbers.

    Examples
    --------
    >>> gamma_map(CoefGrid(1, [1.0, 0.5])).values
    array([1.25, 0.5 ])
    """
    if not isinstance(a, CoefGrid):
        raise TypeError("gamma_map expects a CoefGrid")
    A = a.values
    q = a.order.q
    out = np.empty(a.order.nlags, dtype=A.dtype)
    for i, t in enumerate(a.order.lags):
        lo, hi = _overlap_slices(t, q)
        out[i] = np.sum(A[lo] * A[hi])
    return AcovTable(a.order, out)


def overlap_count(order, t) -> int:
    """Number of index pairs ``(k, k + t)`` inside ``[0, q]``."""
    order = _as_order(order)
    return int(np.prod([qi - abs(ti) + 1 for ti, qi in zip(t, order.q)]))


def laurent_residual(a: CoefGrid, g: AcovTable, x) -> complex:
    """``theta(x) theta(1/x) - sum_t gamma(t) x^t`` over ``t in [-q, q]``."""
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    order = a.order
    if g.order != order:
        raise ValueError("coefficient grid and table have different orders")
    if x.size != order.d:
        raise ValueError(f"x must have {order.d} entries")
    if np.any(x == 0):
        raise ValueError("x has a zero entry")
    theta = theta_inv = 0j
    for k in order.coef_indices:
        ak = a.values[k]
        theta += ak * np.prod(x ** np.array(k))
        theta_inv += ak * np.prod(x ** -np.array(k))
    total = 0j
    for t, val in zip(order.lags, g.values):
        xt = np.prod(x ** np.array(t))
        total += val * (xt if not any(t) else xt + 1 / xt)
    return complex(theta * theta_inv - total)


def reverse(a: CoefGrid) -> CoefGrid:
    """The coefficient grid ``a'_k = a_{q-k}``."""
    flipped = a.values[tuple(slice(None, None, -1) for _ in a.order.q)]
    return CoefGrid(a.order, flipped)


def is_proper_order(a: CoefGrid) -> bool:
    """True when every axis has nonzero coefficients at index 0 and index q_i."""
    nz = a.values != 0
    for axis, qi in enumerate(a.order.q):
        first = np.take(nz, 0, axis=axis)
        last = np.take(nz, qi, axis=axis)
        if not (first.any() and last.any()):
            return False
    return True


def projective_normalize(v, unit: bool = False) -> np.ndarray:
    """Fix the sign (and optionally the norm) of a vector.

    The first entry with non-negligible magnitude is made to have positive
    real part.  With ``unit`` the vector is also scaled to unit norm.
    """
    v = np.asarray(v)
    out = v / np.linalg.norm(v) if unit else v.copy()
    scale = np.max(np.abs(out)) if out.size else 0.0
    if scale == 0:
        return out
    for val in out.ravel():
        if abs(val) > 1e-8 * scale:
            key = val.real if abs(val.real) > 1e-8 * scale else val.imag
            if key < 0:
                out = -out
            break
    return out


# MA(1,1) hypersurface in the coordinates (g00, g01, g1m1, g10, g11):
# (coefficient, exponent vector)
_QUARTIC_TERMS = (
    (1, (0, 2, 0, 2, 0)),
    (-1, (1, 1, 0, 1, 1)),
    (1, (0, 0, 0, 2, 2)),
    (1, (0, 2, 0, 0, 2)),
    (-1, (1, 1, 1, 1, 0)),
    (1, (2, 0, 1, 0, 1)),
    (-2, (0, 0, 1, 2, 1)),
    (-2, (0, 2, 1, 0, 1)),
    (-4, (0, 0, 1, 0, 3)),
    (1, (0, 0, 2, 2, 0)),
    (1, (0, 2, 2, 0, 0)),
    (8, (0, 0, 2, 0, 2)),
    (-4, (0, 0, 3, 0, 1)),
)


def _check_ma11(g: AcovTable):
    if g.order.q != (1, 1):
        raise ValueError(f"expected order (1,1), got {g.order}")


def quartic_monomials(g: AcovTable) -> np.ndarray:
    """Signed terms of the MA(1,1) quartic evaluated at ``g``."""
    _check_ma11(g)
    v = g.values
    return np.array([c * np.prod(v ** np.array(e)) for c, e in _QUARTIC_TERMS])


def quartic_value(g: AcovTable):
    """Value of the quartic defining the MA(1,1) autocovariance variety."""
    return quartic_monomials(g).sum()


def _component_generators(v):
    g00, g01, g1m1, g10, g11 = v
    return {
        "C1": ((g10 - g01, 1), (g00 - 2 * g11 - 2 * g1m1, 1), (4 * g11 * g1m1 - g01 ** 2, 2)),
        "C2": ((g10 + g01, 1), (g00 + 2 * g11 + 2 * g1m1, 1), (4 * g11 * g1m1 - g01 ** 2, 2)),
        "C3": ((g11 - g1m1, 1), (g00 * g1m1 - g10 * g01, 2)),
    }


def singular_component_membership(g: AcovTable, tol: float = 1e-8) -> set[str]:
    """Components of the MA(1,1) singular locus that contain ``g``.

    A generator of degree ``m`` is taken to vanish when its magnitude is at
    most ``tol * ||g||^m``.
    """
    _check_ma11(g)
    scale = np.linalg.norm(g.values)
    if scale == 0:
        return {"C1", "C2", "C3"}
    found = set()
    for name, gens in _component_generators(g.values).items():
        if all(abs(val) <= tol * scale ** deg for val, deg in gens):
            found.add(name)
    return found
