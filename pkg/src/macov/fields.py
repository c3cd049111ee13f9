"""Simulation of MA(q) random fields and the empirical autocovariance estimator."""
from __future__ import annotations

import re
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .lattice import AcovTable, CoefGrid, Order

__all__ = [
    "NoiseSpec",
    "FieldGrid",
    "draw_noise",
    "filter_noise",
    "simulate",
    "empirical_acov",
    "write_csv",
    "read_csv",
    "write_binary",
    "read_binary",
    "write_pgm",
]


@dataclass(frozen=True)
class NoiseSpec:
    """Unit-variance white noise.

    The stream is ``numpy.random.default_rng(seed).standard_normal`` (PCG64
    bit generator, ziggurat normals), drawn in one call over the enlarged
    lattice in row-major order.
    """

    seed: int = 0
    kind: str = "gaussian"

    def __post_init__(self):
        if self.kind != "gaussian":
            raise ValueError(f"unsupported noise kind {self.kind!r}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must fit in 64 unsigned bits")


@dataclass(frozen=True)
class FieldGrid:
    """Field values on the lattice ``{1..n_1} x ... x {1..n_d}``."""

    values: np.ndarray = field(repr=False)
    order: Order | None = None
    seed: int | None = None

    def __post_init__(self):
        arr = np.array(self.values, dtype=float)
        if arr.ndim == 0:
            raise ValueError("a field needs at least one axis")
        if not np.all(np.isfinite(arr)):
            raise ValueError("field values must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def d(self) -> int:
        return self.values.ndim

    def flatten(self) -> np.ndarray:
        """Values in lexicographic site order."""
        return self.values.ravel()

    def __repr__(self):
        return f"FieldGrid(n={self.n}, order={self.order}, seed={self.seed})"


def _extents(n, d) -> tuple[int, ...]:
    n = (int(n),) * d if np.isscalar(n) else tuple(int(v) for v in n)
    if len(n) != d:
        raise ValueError(f"need {d} extents, got {len(n)}")
    if any(v < 1 for v in n):
        raise ValueError(f"extents must be positive, got {n}")
    return n


def draw_noise(order: Order, n, noise: NoiseSpec = NoiseSpec()) -> np.ndarray:
    """Noise on the enlarged lattice ``[1 - q, n]``."""
    n = _extents(n, order.d)
    shape = tuple(v + qi for v, qi in zip(n, order.q))
    rng = np.random.default_rng(int(noise.seed))
    return rng.standard_normal(shape)


def filter_noise(a: CoefGrid, z: np.ndarray) -> np.ndarray:
    """``Y_t = sum_k a_k Z_{t-k}`` keeping only fully supported sites."""
    return signal.convolve(z, np.real(a.values), mode="valid", method="direct")


def simulate(a: CoefGrid, n, noise: NoiseSpec = NoiseSpec()) -> FieldGrid:
    """Draw one realization of the MA field with coefficients ``a``.

    Noise is drawn on the enlarged lattice so every returned site sees the
    full filter; there is no edge truncation.
    """
    if not a.is_real:
        raise ValueError("simulation needs real coefficients")
    z = draw_noise(a.order, n, noise)
    return FieldGrid(filter_noise(a, z), order=a.order, seed=int(noise.seed))


def empirical_acov(y, order, center: bool = True) -> AcovTable:
    """Empirical autocovariances with divisor ``|B_{n,t}| = prod(n_i - |t_i|)``."""
    order = order if isinstance(order, Order) else Order(order)
    Y = y.values if isinstance(y, FieldGrid) else np.asarray(y, dtype=float)
    if Y.ndim != order.d:
        raise ValueError(f"field has {Y.ndim} axes but order has {order.d}")
    if any(ni <= qi for ni, qi in zip(Y.shape, order.q)):
        raise ValueError(f"every extent must exceed the order: n={Y.shape}, q={order.q}")
    if center:
        Y = Y - Y.mean()
    out = np.empty(order.nlags)
    for i, t in enumerate(order.lags):
        lo, hi = [], []
        for ti, ni in zip(t, Y.shape):
            if ti >= 0:
                lo.append(slice(0, ni - ti))
                hi.append(slice(ti, ni))
            else:
                lo.append(slice(-ti, ni))
                hi.append(slice(0, ni + ti))
        count = np.prod([ni - abs(ti) for ti, ni in zip(t, Y.shape)])
        out[i] = np.sum(Y[tuple(lo)] * Y[tuple(hi)]) / count
    return AcovTable(order, out)


def _header(grid: FieldGrid) -> str:
    q = "None" if grid.order is None else "(" + ",".join(map(str, grid.order.q)) + ")"
    n = "(" + ",".join(map(str, grid.n)) + ")"
    return f"q={q}, n={n}, seed={grid.seed}"


def write_csv(grid: FieldGrid, path):
    """CSV with a ``# q=..., n=..., seed=...`` header; d <= 2 only."""
    if grid.d > 2:
        raise ValueError("CSV output supports d <= 2; use write_binary")
    vals = np.atleast_2d(grid.values)
    with open(path, "w") as fh:
        fh.write("# " + _header(grid) + "\n")
        for row in vals:
            fh.write(",".join(format(v, ".17g") for v in row) + "\n")


_HDR = re.compile(r"q=(?P<q>\([^)]*\)|None),\s*n=(?P<n>\([^)]*\)),\s*seed=(?P<seed>\w+)")


def _tuple(text):
    return tuple(int(v) for v in text.strip("()").split(",") if v.strip())


def read_csv(path) -> FieldGrid:
    with open(path) as fh:
        first = fh.readline()
        m = _HDR.search(first)
        if not first.startswith("#") or not m:
            raise ValueError(f"{path}: missing '# q=..., n=..., seed=...' header")
        rows = [[float(v) for v in line.split(",")] for line in fh if line.strip()]
    n = _tuple(m["n"])
    vals = np.array(rows, dtype=float).reshape(n)
    order = None if m["q"] == "None" else Order(_tuple(m["q"]))
    seed = None if m["seed"] == "None" else int(m["seed"])
    return FieldGrid(vals, order=order, seed=seed)


# magic, version, d, seed (2**64-1 when unknown), element count, reserved;
# followed by d uint64 extents, d uint64 orders (0 when unknown), then data
_BIN = struct.Struct("<4sHHQQQ")
_NOSEED = 2 ** 64 - 1


def write_binary(grid: FieldGrid, path):
    """Little-endian float64 row-major grid behind a 32-byte header."""
    seed = _NOSEED if grid.seed is None else grid.seed
    q = (0,) * grid.d if grid.order is None else grid.order.q
    with open(path, "wb") as fh:
        fh.write(_BIN.pack(b"MAFG", 1, grid.d, seed, grid.values.size, 0))
        fh.write(struct.pack(f"<{grid.d}Q", *grid.n))
        fh.write(struct.pack(f"<{grid.d}Q", *q))
        fh.write(np.ascontiguousarray(grid.values, dtype="<f8").tobytes())


def read_binary(path) -> FieldGrid:
    with open(path, "rb") as fh:
        magic, version, d, seed, count, _ = _BIN.unpack(fh.read(_BIN.size))
        if magic != b"MAFG" or version != 1:
            raise ValueError(f"{path}: not a field grid file")
        n = struct.unpack(f"<{d}Q", fh.read(8 * d))
        q = struct.unpack(f"<{d}Q", fh.read(8 * d))
        data = np.frombuffer(fh.read(8 * count), dtype="<f8")
    if data.size != count or int(np.prod(n)) != count:
        raise ValueError(f"{path}: truncated or inconsistent grid")
    order = None if not all(q) else Order(q)
    return FieldGrid(data.reshape(n), order=order, seed=None if seed == _NOSEED else seed)


def write_pgm(grid: FieldGrid, path, maxval: int = 255):
    """Plain (P2) grayscale image of a 2-d grid, min-max scaled."""
    if grid.d != 2:
        raise ValueError("PGM output needs a 2-d grid")
    v = grid.values
    lo, hi = v.min(), v.max()
    scaled = np.zeros(v.shape, dtype=int) if hi == lo else np.rint((v - lo) / (hi - lo) * maxval).astype(int)
    rows, cols = v.shape
    with open(path, "w") as fh:
        fh.write(f"P2\n# {_header(grid)}\n{cols} {rows}\n{maxval}\n")
        for row in scaled:
            fh.write(" ".join(map(str, row)) + "\n")
