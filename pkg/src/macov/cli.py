"""Command-line interface: ``macov <subcommand> ...``.

Exit codes: 0 success, 2 validation or input error, 3 solver failure
(path budget, uncertified count, no real solution).
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import estimate as est
from . import fields, identify
from .lattice import (
    AcovTable,
    CoefGrid,
    Order,
    quartic_monomials,
    singular_component_membership,
)
from .polysys import BudgetExceeded, SolverError, TrackerOptions, format_poly, parse_system, solve_total_degree

EXIT_OK, EXIT_INPUT, EXIT_SOLVER = 0, 2, 3


class InputError(ValueError):
    pass


# ----------------------------------------------------------------------------
# output


def _fmt(obj, indent=0) -> str:
    """JSON text with floats at 17 significant digits (non-finite -> null)."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_fmt(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        obj = list(obj)
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_fmt(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _fmt(v, indent + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return format(v, ".17g") if math.isfinite(v) else "null"
    if obj is None:
        return "null"
    return json.dumps(str(obj))


def _emit(obj, out=None):
    text = _fmt(obj) + "\n"
    if out and out != "-":
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ----------------------------------------------------------------------------
# input helpers


def _ints(text) -> tuple[int, ...]:
    try:
        vals = tuple(int(v) for v in str(text).strip("()[] ").split(",") if v.strip())
    except ValueError:
        raise InputError(f"expected comma-separated integers, got {text!r}") from None
    if not vals:
        raise InputError("empty integer list")
    return vals


def _floats(text) -> np.ndarray:
    try:
        return np.array([float(v) for v in str(text).strip("()[] ").split(",") if v.strip()])
    except ValueError:
        raise InputError(f"expected comma-separated numbers, got {text!r}") from None


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: invalid JSON ({e})") from None


def _load_table(path) -> AcovTable:
    obj = _load_json(path)
    if "gamma" not in obj or "q" not in obj:
        raise InputError(f"{path}: expected an autocovariance table with 'q' and 'gamma'")
    return AcovTable.from_json(obj)


def _load_grid(path, q=None) -> fields.FieldGrid:
    if path.endswith(".json"):
        obj = _load_json(path)
        if "Y" not in obj:
            raise InputError(f"{path}: expected a sample with key 'Y'")
        vals = np.asarray(obj["Y"], dtype=float)
        order = Order(obj["q"]) if "q" in obj else (Order(q) if q else None)
        return fields.FieldGrid(vals, order=order)
    with open(path, "rb") as fh:
        magic = fh.read(4)
    if magic == b"MAFG":
        return fields.read_binary(path)
    return fields.read_csv(path)


def _order_arg(args, fallback=None) -> Order:
    if getattr(args, "q", None):
        return Order(_ints(args.q))
    if fallback is not None:
        return fallback
    raise InputError("an order is required (--q)")


def _opts(args) -> TrackerOptions:
    o = TrackerOptions()
    if getattr(args, "max_paths", None):
        o.max_paths = args.max_paths
    if getattr(args, "seed", None) is not None:
        o.seed = args.seed
    return o


# ----------------------------------------------------------------------------
# subcommands


def cmd_simulate(args):
    if args.a_file:
        a = CoefGrid.from_json(_load_json(args.a_file))
    elif args.a:
        a = CoefGrid(_order_arg(args), _floats(args.a))
    else:
        raise InputError("give coefficients with --a or --a-file")
    if args.q and Order(_ints(args.q)) != a.order:
        raise InputError("--q does not match the coefficient file")
    n = _ints(args.n)
    if len(n) == 1:
        n = n * a.order.d
    if len(n) != a.order.d:
        raise InputError(f"need 1 or {a.order.d} extents, got {len(n)}")
    if any(ni <= qi for ni, qi in zip(n, a.order.q)):
        raise InputError(f"n must exceed q for downstream acf: n={n}, q={a.order.q}")
    grid = fields.simulate(a, n, fields.NoiseSpec(args.seed))
    out = args.out
    if out.endswith(".bin") or a.order.d > 2:
        fields.write_binary(grid, out)
    else:
        fields.write_csv(grid, out)
    if args.pgm:
        fields.write_pgm(grid, args.pgm)
    _emit({"out": out, "n": list(grid.n), "q": list(a.order.q), "seed": args.seed,
           "sample_variance": float(np.var(grid.values))}, "-" if not args.quiet else os.devnull)


def cmd_acf(args):
    grid = _load_grid(args.input, args.q)
    order = _order_arg(args, grid.order)
    g = fields.empirical_acov(grid, order, center=not args.no_center)
    _emit(g.to_json(), args.out)


def cmd_invert(args):
    g = _load_table(args.input)
    method = args.method
    if method == "auto":
        method = "d1" if g.order.d == 1 else ("ma11" if g.order.q == (1, 1) else "generic")
    if method == "d1":
        f = identify.fiber_d1(g, real_only=args.real)
    elif method == "ma11":
        f = identify.fiber_ma11(g, real_only=args.real)
    elif method == "generic":
        f = identify.fiber_generic(g, _opts(args))
    else:
        raise InputError(f"unknown method {method!r}")
    if args.real and method == "generic":
        f.points = f.real_points
        f.real = [True] * len(f.points)
    idx = identify.invertible_index(f) if g.order.d == 1 else None
    _emit(f.to_json(idx), args.out)


def _mle_report(p: est.MleProblem, opts):
    if p.order.q == (1,) and p.Y.size == 2:
        a, case = est.mle_exact_ma1_n2(p.Y)
        return {"q": [1], "selected": a.to_json(), "case": case,
                "objective": est.mle_loglik(a, p), "method": "exact"}
    m = p.Y.size
    if p.order.q == (1,) and m <= 12 and m * (m - 1) <= opts.max_paths:
        rep = est.mle_solve_homotopy(p, opts).to_json()
        rep["method"] = "homotopy"
        return rep
    if p.order.d == 1:
        g = fields.empirical_acov(p.sample, p.order, center=False)
        try:
            init = est.innovations_d1(g)
        except ValueError:
            init = CoefGrid(p.order, np.eye(1, p.order.ncoef).ravel() * np.std(p.Y))
    else:
        init = CoefGrid(p.order, np.eye(1, p.order.ncoef).ravel() * np.std(p.Y))
    a = est.mle_solve_local(p, init)
    return {"q": list(p.order.q), "selected": a.to_json(), "objective": est.mle_loglik(a, p),
            "method": "local", "init": init.to_json()}


def cmd_estimate(args):
    opts = _opts(args)
    if args.method == "lse":
        if args.input.endswith(".json") and "gamma" in _load_json(args.input):
            g = _load_table(args.input)
        else:
            grid = _load_grid(args.input, args.q)
            g = fields.empirical_acov(grid, _order_arg(args, grid.order))
        w = _floats(args.weights) if args.weights else None
        rep = est.lse_solve(est.LseProblem(g.order, g, w), opts)
        out = rep.to_json()
        out["target"] = g.to_json()
        _emit(out, args.out)
        return
    if args.y:
        grid = fields.FieldGrid(_floats(args.y))
    else:
        grid = _load_grid(args.input, args.q)
    order = _order_arg(args, grid.order)
    _emit(_mle_report(est.MleProblem(order, grid), opts), args.out)


def cmd_member(args):
    g = _load_table(args.input)
    if g.order.q != (1, 1):
        raise InputError("membership predicates are available for order (1,1)")
    terms = quartic_monomials(g)
    val = float(np.real(terms.sum()))
    scale = float(np.max(np.abs(terms))) or 1.0
    on = abs(val) <= args.tol * scale
    comps = sorted(singular_component_membership(g, args.tol))
    if args.json:
        _emit({"quartic": val, "scale": scale, "on_variety": on, "singular_components": comps})
    else:
        print(f"on variety: {'yes' if on else 'no'}; singular components: {', '.join(comps) or 'none'}")


def cmd_solve(args):
    with open(args.input) as fh:
        sysm = parse_system(fh.read())
    sols = solve_total_degree(sysm, _opts(args))
    _emit({
        "equations": [format_poly(p) for p in sysm.equations],
        "solutions": [{"re": list(np.real(z)), "im": list(np.imag(z))} for z in sols.points],
        "residual": list(sols.residual),
        "is_real": list(sols.is_real),
        "suspect": [{"re": list(np.real(z)), "im": list(np.imag(z))} for z in sols.suspect],
        "path_stats": est._jsonable(sols.stats),
    }, args.out)


def cmd_mldegree(args):
    order = Order(_ints(args.q))
    n = _ints(args.n)
    if len(n) == 1:
        n = n * order.d
    opts = _opts(args)
    Y = np.random.default_rng(args.seed).standard_normal(n)
    crit = est.ml_critical_points(order, Y, opts)
    _emit({
        "q": list(order.q), "n": list(n), "seed": args.seed,
        "count": crit.low if crit.low == crit.high else None,
        "interval": [crit.low, crit.high],
        "residuals": list(crit.residual),
        "path_stats": est._jsonable(crit.stats),
    }, args.out)
    if crit.low != crit.high:
        raise est.ContaminatedCount(crit.low, crit.high)


# ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="macov", description="Moving-average random fields: simulate, invert, estimate.")
    ap.add_argument("--json-errors", action="store_true", help="report failures as JSON on stderr")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("simulate", help="simulate a field")
    p.add_argument("--q", help="order, e.g. 1,1")
    p.add_argument("--a", help="coefficients in row-major order")
    p.add_argument("--a-file", help="coefficient JSON {q, a}")
    p.add_argument("--n", required=True, help="extent(s), e.g. 50 or 50,40")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output grid (.csv, or .bin for binary)")
    p.add_argument("--pgm", help="also write a P2 image (2-d only)")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("acf", help="empirical autocovariances of a grid")
    p.add_argument("input")
    p.add_argument("--q")
    p.add_argument("--no-center", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_acf)

    p = sub.add_parser("invert", help="fiber of an autocovariance table")
    p.add_argument("input")
    p.add_argument("--method", default="auto", choices=["auto", "d1", "ma11", "generic"])
    p.add_argument("--real", action="store_true", help="real points only")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-paths", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("estimate", help="least-squares or maximum-likelihood estimate")
    p.add_argument("input", nargs="?")
    p.add_argument("--method", choices=["lse", "mle"], required=True)
    p.add_argument("--q")
    p.add_argument("--y", help="sample values inline (d = 1)")
    p.add_argument("--weights", help="per-lag weights for lse")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-paths", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("member", help="MA(1,1) variety and singular-locus membership")
    p.add_argument("input")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_member)

    p = sub.add_parser("solve", help="solve a polynomial system in text format")
    p.add_argument("input")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-paths", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("mldegree", help="count likelihood critical points for a random sample")
    p.add_argument("--q", required=True)
    p.add_argument("--n", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-paths", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_mldegree)
    return ap


def _fail(args, code, kind, msg):
    if getattr(args, "json_errors", False):
        sys.stderr.write(_fmt({"error": kind, "message": msg, "exit_code": code}) + "\n")
    else:
        sys.stderr.write(f"macov: {kind}: {msg}\n")
    return code


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.cmd == "estimate" and args.input is None and not args.y:
        return _fail(args, EXIT_INPUT, "validation", "give an input file or --y")
    for name in ("max_paths", "tol"):
        v = getattr(args, name, None)
        if v is not None and v <= 0:
            return _fail(args, EXIT_INPUT, "validation", f"--{name.replace('_', '-')} must be positive")
    try:
        args.func(args)
    except (BudgetExceeded, SolverError) as e:
        return _fail(args, EXIT_SOLVER, "solver", str(e))
    except (ValueError, KeyError, OSError) as e:
        return _fail(args, EXIT_INPUT, "validation", str(e))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
