"""``onesided`` command line: class constants, weak-type verification, maximal operators.

Exit codes: 0 pass, 1 assertion failure, 2 input error (nothing written),
3 certificate finding (a certificate failed on an input meeting its hypotheses).
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import gridfile
from ._parallel import thread_count
from .classes import a1_pointwise_check, muckenhoupt_constant, restricted_constant
from .generators import make_pair, make_set
from .grid import CellSet, GridDomain
from .harness import (default_t_values, sharpness_search, verify_2d_weak_type, verify_dyadic_weak_type,
                      verify_necessity)
from .maximal import (anchored_maximal, dyadic_minus_maximal, dyadic_plus_maximal, subsquare_maximal_2d,
                      xi_level)
from .report import SCHEMA, SCHEMA_VERSION, dumps, rows_to_csv

EXIT_PASS, EXIT_FAIL, EXIT_INPUT, EXIT_FINDING = 0, 1, 2, 3

OPERATORS = ("plus", "minus", "anchored", "quarter1", "quarter2", "quarter3")


class InputError(Exception):
    pass


def _fraction_list(text: str) -> list[float]:
    try:
        vals = [float(Fraction(s.strip())) for s in text.split(",") if s.strip()]
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from None
    if not vals or any(not v > 0 for v in vals):
        raise argparse.ArgumentTypeError("t values must be positive")
    return vals


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def _common(p: argparse.ArgumentParser, need_set: bool = False) -> None:
    g = p.add_argument_group("grid and inputs")
    g.add_argument("--dim", type=int, help="dimension (taken from input files when omitted)")
    g.add_argument("--depth", type=int, help="levels below the extent (taken from input files when omitted)")
    g.add_argument("--p", type=float, help="exponent (default: pair file's, else 2)")
    src = g.add_mutually_exclusive_group()
    src.add_argument("--pair", metavar="FILE", help="pair grid file")
    src.add_argument("--gen", metavar="NAME", help="pair generator, e.g. 'loguniform(seed=7)' (default unit)")
    if need_set:
        es = g.add_mutually_exclusive_group()
        es.add_argument("--set", metavar="FILE", help="set grid file")
        es.add_argument("--gen-set", metavar="NAME", help="set generator (default 'bernoulli(density=0.3)')")
    g.add_argument("--seed", type=int, default=0, help="root seed for every generator (default 0)")
    o = p.add_argument_group("output")
    o.add_argument("--out", metavar="PATH", help="JSON report path (stdout when omitted); a CSV goes next to it")
    o.add_argument("--figures", metavar="DIR", help="write PNG figures to DIR")
    o.add_argument("--timing", action="store_true", help="add wall-clock timing (reports stop being byte-stable)")
    o.add_argument("--strict", action="store_true", help="count vacuous checks (infinite constants) as failures")
    o.add_argument("--threads", type=_positive_int, help="worker threads (capped by ONESIDED_THREADS)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="onesided", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("constant", help="restricted, Muckenhoupt and A1 constants of a pair")
    _common(c)
    c.add_argument("--flavor", choices=("dyadic", "planar"), default="dyadic",
                   help="dyadic cubes, or every dyadic-size square at cell corners")
    c.add_argument("--side", choices=("+", "-"), default="+")
    c.add_argument("--oracle", action="store_true", help="cross-check against exhaustive subset search")

    v = sub.add_parser("verify", help="weak-type verification")
    vs = v.add_subparsers(dest="mode", required=True)
    d = vs.add_parser("dyadic", help="dyadic weak-type bound with per-band certificates")
    _common(d, need_set=True)
    d.add_argument("--t", type=_fraction_list, help="comma list (default 2^-L, ..., 1/2)")
    pl = vs.add_parser("planar", help="planar pipeline (dim 2)")
    _common(pl, need_set=True)
    pl.add_argument("--t", type=_fraction_list)
    pl.add_argument("--xi", help="truncation size, a power of two (e.g. 1/8)")
    n = vs.add_parser("necessity", help="class constant against measured weak-type ratios")
    _common(n)
    n.add_argument("--flavor", choices=("dyadic", "planar"), default="dyadic")
    s = vs.add_parser("sharpness", help="randomized search for near-extremal pairs")
    _common(s)
    s.add_argument("--budget", type=_positive_int, default=32, help="random trials (default 32)")
    s.add_argument("--climb", type=int, help="hill-climb steps (default: budget)")
    s.add_argument("--family", choices=("random", "unit"), default="random")

    m = sub.add_parser("maximal", help="evaluate a maximal operator on a set")
    _common(m, need_set=True)
    m.add_argument("--operator", choices=OPERATORS, default="plus")
    m.add_argument("--xi", help="truncation size for the quarter operators")
    m.add_argument("--t", type=_fraction_list, help="level-set sizes to report")
    m.add_argument("--oracle", action="store_true", help="use the brute-force evaluation")
    m.add_argument("--dump", metavar="PATH", help="write values as a grid file")
    m.add_argument("--encoding", choices=("text", "f64le"), default="f64le")
    return ap


# ---------------------------------------------------------------------------
# input resolution


def _child_seed(seed: int, i: int) -> int:
    return int(np.random.SeedSequence(seed).spawn(i + 1)[i].generate_state(1)[0])


def _check_domain(dom: GridDomain, args, what: str) -> None:
    if args.dim is not None and args.dim != dom.dim:
        raise InputError(f"{what} has dim {dom.dim}, but --dim {args.dim}")
    if args.depth is not None and args.depth != dom.depth:
        raise InputError(f"{what} has depth {dom.depth}, but --depth {args.depth}")


def _domain(args, files: list[tuple[str, str]]) -> GridDomain:
    doms = []
    for what, path in files:
        dom, _, _ = gridfile.read_grid(path)
        _check_domain(dom, args, what)
        doms.append(dom)
    if doms:
        if any(d != doms[0] for d in doms):
            raise InputError("input files live on different grids")
        return doms[0]
    dim = 1 if args.dim is None else args.dim
    depth = 4 if args.depth is None else args.depth
    try:
        return GridDomain(dim, depth)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _resolve(args, need_pair: bool = True, need_set: bool = False):
    files = []
    if getattr(args, "pair", None):
        files.append(("pair file", args.pair))
    if getattr(args, "set", None):
        files.append(("set file", args.set))
    dom = _domain(args, files)
    pair = E = None
    p = args.p
    if need_pair:
        if args.pair:
            pair = gridfile.read_pair(args.pair, p)
        else:
            pair = make_pair(args.gen or "unit", dom, 2.0 if p is None else p, _child_seed(args.seed, 0))
        if not pair.p >= 1:
            raise InputError(f"p must be at least 1, got {pair.p}")
    if need_set:
        if getattr(args, "set", None):
            E = gridfile.read_set(args.set)
        else:
            E = make_set(args.gen_set or "bernoulli(density=0.3)", dom, _child_seed(args.seed, 1))
    return dom, pair, E


def _config(args, dom: GridDomain, p: float | None) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k not in ("func",)}
    cfg["dim"], cfg["depth"] = dom.dim, dom.depth
    cfg["extent"] = {"level": dom.extent.level, "anchor": list(dom.extent.anchor)}
    cfg["p"] = p
    cfg.pop("timing", None)
    return cfg


def _xi(text):
    if text is None:
        return None
    try:
        xi = Fraction(text)
        xi_level(xi)
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"bad --xi {text!r}: {exc}") from None
    return xi


# ---------------------------------------------------------------------------
# commands


def _cmd_constant(args):
    dom, pair, _ = _resolve(args)
    flavor = "dyadic" if args.flavor == "dyadic" else "anchored"
    results = {"restricted": restricted_constant(pair, flavor, args.side).to_dict()}
    if pair.p > 1:
        results["muckenhoupt"] = muckenhoupt_constant(pair, flavor, args.side).to_dict()
    else:
        results["a1"] = a1_pointwise_check(pair, flavor, args.side).to_dict()
    passed, finding = True, False
    if args.oracle:
        from .oracle import exhaustive_restricted_constant

        if args.side != "+":
            raise InputError("--oracle checks the '+' side only")
        if 2 ** ((dom.depth - 1) * dom.dim) > 16:
            raise InputError("--oracle enumerates subsets; use grids whose largest Q+ has at most 16 cells")
        ref = exhaustive_restricted_constant(pair, flavor)
        match = ref == results["restricted"]["value"]
        results["oracle"] = {"restricted": ref, "match": match}
        passed = match
    vacuous = not math.isfinite(results["restricted"]["value"])
    summary = {"passed": passed, "vacuous": vacuous, "finding": finding}
    return dom, pair.p, results, summary, [], None


def _vacuous(report) -> bool:
    rows = report.rows
    return any(r.get("vacuous") for r in rows) or bool(report.constants.get("unbounded"))


def _cmd_verify(args):
    mode = args.mode
    if mode == "sharpness":
        dom = _domain(args, [])
        p = 2.0 if args.p is None else args.p
        if not p >= 1:
            raise InputError(f"p must be at least 1, got {p}")
        rep = sharpness_search(dom, p, args.budget, args.seed, args.family, args.climb, args.threads)
        summary = {"passed": rep.passed, "vacuous": False, "finding": rep.finding}
        cols = ["trial", "objective", "t", "ratio", "passed"]
        return dom, p, rep.to_dict(), summary, [(rep.rows, cols)], rep
    if mode == "necessity":
        dom, pair, _ = _resolve(args)
        rep = verify_necessity(pair, args.flavor, seed=args.seed)
    else:
        if mode == "planar" and (args.dim if args.dim is not None else None) not in (None, 2):
            raise InputError(f"planar verification needs --dim 2, got {args.dim}")
        dom, pair, E = _resolve(args, need_set=True)
        if mode == "planar" and dom.dim != 2:
            raise InputError(f"planar verification needs a 2D grid, got dim {dom.dim}")
        t = args.t or default_t_values(dom)
        if mode == "dyadic":
            rep = verify_dyadic_weak_type(pair, E, t, seed=args.seed)
        else:
            rep = verify_2d_weak_type(pair, E, t, xi=_xi(args.xi), seed=args.seed)
    summary = {"passed": rep.passed, "vacuous": _vacuous(rep), "finding": rep.finding}
    return dom, pair.p, rep.to_dict(), summary, [(rep.rows, ["t", "lhs", "rhs", "ratio", "passed"])], rep


def _evaluate(op: str, E: CellSet, xi, oracle: bool, threads):
    from . import oracle as orc

    dom = E.domain
    if op.startswith("quarter") and dom.dim != 2:
        raise InputError("quarter operators need a 2D grid")
    if xi is not None and not op.startswith("quarter"):
        raise InputError("--xi applies to the quarter operators only")
    if oracle:
        if dom.n_cells > 4096:
            raise InputError("--oracle is limited to grids of at most 4096 cells")
        if op == "plus":
            return orc.brute_dyadic_maximal(E, "+")
        if op == "minus":
            return orc.brute_dyadic_maximal(E, "-")
        if op == "anchored":
            return orc.brute_anchored_maximal(E)
        return orc.brute_subsquare_maximal(E, int(op[-1]), xi)
    if op == "plus":
        return dyadic_plus_maximal(E, threads=threads).values
    if op == "minus":
        return dyadic_minus_maximal(E, threads=threads).values
    if op == "anchored":
        return anchored_maximal(E).values
    return subsquare_maximal_2d(E, i=int(op[-1]), xi=xi).values


def _cmd_maximal(args):
    dom, _, E = _resolve(args, need_pair=False, need_set=True)
    vals = np.asarray(_evaluate(args.operator, E, _xi(args.xi), args.oracle, thread_count(args.threads)),
                      dtype=np.float64)
    t = args.t or default_t_values(dom)
    rows = [{"t": x, "cells": int((vals > x).sum())} for x in t]
    results = {"operator": args.operator, "evaluation": "oracle" if args.oracle else "fast",
               "max": float(vals.max()) if vals.size else 0.0, "mean": float(np.mean(vals)),
               "E_cells": E.count, "level_sets": rows}
    if args.dump:
        gridfile.write_field(args.dump, dom, vals, encoding=args.encoding,
                             extra={"operator": args.operator})
        results["dump"] = args.dump
    summary = {"passed": True, "vacuous": False, "finding": False}
    return dom, None, results, summary, [(rows, ["t", "cells"])], vals


def _figures(args, dom, extra, tables) -> list[str]:
    from . import plotting

    out = Path(args.figures)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    name = args.command if args.command != "verify" else f"verify-{args.mode}"
    if args.command == "maximal":
        written.append(plotting.plot_field(extra.reshape(dom.shape), out / f"{name}-values.png",
                                           f"{args.operator} maximal"))
    elif args.command == "verify" and args.mode == "sharpness":
        rows = [r for r in tables[0][0] if r["trial"] != "climb"]
        written.append(plotting.plot_trials([r["ratio"] for r in rows], out / f"{name}-trials.png", "sharpness"))
    elif args.command == "verify" and args.mode in ("dyadic", "planar"):
        written.append(plotting.plot_sweep(tables[0][0], out / f"{name}-sweep.png", f"{args.mode} weak type"))
    return [str(p) for p in written]


_COMMANDS = {"constant": _cmd_constant, "verify": _cmd_verify, "maximal": _cmd_maximal}


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_PASS
    start = time.perf_counter()
    try:
        dom, p, results, summary, tables, extra = _COMMANDS[args.command](args)
    except (InputError, gridfile.GridFileError, OSError, ValueError) as exc:
        print(f"onesided: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if summary["finding"]:
        code = EXIT_FINDING
    elif not summary["passed"] or (args.strict and summary["vacuous"]):
        code = EXIT_FAIL
    else:
        code = EXIT_PASS
    summary["exit_code"] = code
    doc = {"schema": SCHEMA, "version": SCHEMA_VERSION, "command": args.command,
           "config": _config(args, dom, p), "results": results, "summary": summary}
    if args.figures:
        doc["figures"] = _figures(args, dom, extra, tables)
    if args.timing:
        doc["timing"] = {"seconds": time.perf_counter() - start}
    text = dumps(doc)
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)
        if tables:
            rows, cols = tables[0]
            out.with_suffix(".csv").write_text(rows_to_csv(rows, cols))
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
