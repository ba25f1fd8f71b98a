"""Command-line front end: gen, census, theory, verify, cumulant-lab."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import acceptance
from . import cumulants as cu
from .census import CapExceeded, DEFAULT_CAP, census, named_graph
from .confmodel import Multigraph, TriesExhausted, sample_multigraph, sample_simple, sample_via_cuffs
from .degrees import (
    DegenerateDistribution,
    ParityViolation,
    from_pmf_rounded,
    read_degrees,
    read_pmf,
    sample_iid,
)
from .formulas import asymptotic_report

DEFAULT_THEORY_GRAPHS = "K1,K2,P3,K13,P4,loop,double,C3"


class CLIError(Exception):
    pass


def _degrees(args):
    if args.degrees:
        return read_degrees(args.degrees, fix_odd=args.fix_odd)
    if not args.pmf:
        raise CLIError("give --pmf or --degrees")
    dist = read_pmf(args.pmf)
    if args.n is None or args.n < 1:
        raise CLIError("--pmf needs --n >= 1")
    if args.iid:
        return sample_iid(dist, args.n, np.random.default_rng(args.seed))
    return from_pmf_rounded(dist, args.n)


def _sample(args):
    seq = _degrees(args)
    # the degree draw (iid mode) and the matching use separate streams of the same seed
    rng = np.random.default_rng(np.random.SeedSequence(args.seed, spawn_key=(1,)))
    if args.simple:
        G, _ = sample_simple(seq, rng, max_tries=args.max_tries)
    elif args.cuffs:
        G = sample_via_cuffs(seq, rng)
    else:
        G = sample_multigraph(seq, rng)
    return G


def write_edges(G: Multigraph, out) -> None:
    out.write(f"# n={G.n} m={G.m}\n")
    for u, v in G.edge_list():
        out.write(f"{u} {v}\n")


def read_edges(path) -> Multigraph:
    n = None
    edges = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            for tok in line[1:].split():
                if tok.startswith("n="):
                    n = int(tok[2:])
            continue
        u, v = map(int, line.split())
        edges.append((u, v))
    if n is None:
        n = 1 + max((max(e) for e in edges), default=-1)
    return Multigraph.from_edges(n, edges)


def _emit(text: str, path) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_gen(args) -> int:
    G = _sample(args)
    buf = io.StringIO()
    write_edges(G, buf)
    _emit(buf.getvalue(), args.out)
    return 0


def cmd_census(args) -> int:
    G = read_edges(args.edges) if args.edges else _sample(args)
    cen = census(G, cap=args.cap)
    if args.csv:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["code", "v", "e", "count"])
        for row in cen.to_json()["classes"]:
            w.writerow([row["code"], row["v"], row["e"], row["count"]])
        for size, edges in cen.large:
            w.writerow(["LARGE", size, edges, 1])
        text = buf.getvalue()
    else:
        text = json.dumps(cen.to_json(), indent=2) + "\n"
    _emit(text, args.out)
    return 0


def cmd_theory(args) -> int:
    dist = read_pmf(args.pmf)
    graphs = {name: named_graph(name) for name in args.graphs.split(",") if name}
    rep = asymptotic_report(dist, graphs)
    data = rep.to_json()
    if args.csv:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["quantity", "value", "exact"])
        for key, val in data.items():
            if isinstance(val, dict) and "value" not in val:
                for sub, x in val.items():
                    w.writerow([f"{key}:{sub}", x["value"], x.get("exact", "")])
            elif isinstance(val, dict):
                w.writerow([key, val["value"], val.get("exact", "")])
            elif val is not None:
                w.writerow([key, val, ""])
        text = buf.getvalue()
    else:
        text = json.dumps(data, indent=2) + "\n"
    _emit(text, args.out)
    return 0


def cmd_verify(args) -> int:
    names = list(acceptance.CHECKS) if args.experiment == "all" else [args.experiment]
    results = []
    for name in names:
        kw = {}
        if name in acceptance.DEFAULTS:
            for key in ("n", "R", "seed"):
                if key in acceptance.DEFAULTS[name] and getattr(args, key) is not None:
                    kw[key] = getattr(args, key)
        res = acceptance.run_check(name, **kw)
        print(res.line(), file=sys.stderr)
        results.append(res)
    if args.csv:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["experiment", "comparison", "observed", "theory", "tolerance", "passed", "note"])
        for r in results:
            for c in r.comparisons:
                w.writerow([r.name, c.name, c.observed, c.theory, c.tolerance, c.passed, c.note])
        text = buf.getvalue()
    else:
        text = json.dumps([r.to_json() for r in results], indent=2) + "\n"
    _emit(text, args.out)
    return 0 if all(r.passed for r in results) else 1


def cmd_cumulant_lab(args) -> int:
    src = args.family
    obj = json.loads(Path(src).read_text() if Path(src).exists() else src)
    fam = cu.IndicatorFamily.from_json(obj)
    blocks = cu.blocks_and_mue(fam)
    kappa = cu.exact_mixed_cumulant(fam)
    out = {
        "N": fam.N,
        "r": fam.r,
        "kappa": {"exact": str(kappa), "value": float(kappa)},
        "b": blocks.b,
        "mue": blocks.mue,
        "bound_exponent": blocks.exponent,
        "degenerate_members": fam.degenerate_members(),
    }
    ok = True
    if fam.N <= cu.MAX_ORACLE_N:
        oracle = cu.permutation_oracle(fam)
        out["oracle_agrees"] = oracle == kappa
        ok &= oracle == kappa
    if args.scale:
        Ns = [int(x) for x in args.scale.split(",")]
        need = 1 + max((max(a, b) for m in fam.members for a, b in m), default=0)
        if min(Ns) < need:
            raise CLIError(f"scaling sizes must be at least {need}")
        sc = cu.scaling_exponent(lambda N: cu.IndicatorFamily(N, fam.members), Ns)
        out["scaling"] = {"Ns": Ns, "slope": sc.slope if sc.slope != float("-inf") else None,
                          "bound": sc.bound, "compliant": sc.compliant}
        ok &= sc.compliant
    _emit(json.dumps(out, indent=2) + "\n", args.out)
    return 0 if ok else 1


def _add_source(p):
    p.add_argument("--pmf", help="JSON [[k, p_k], ...]")
    p.add_argument("--degrees", help="degree file: integers or JSON histogram")
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iid", action="store_true", help="draw degrees iid from the pmf")
    p.add_argument("--fix-odd", action="store_true", help="repair odd total degree")
    p.add_argument("--simple", action="store_true", help="reject until simple")
    p.add_argument("--cuffs", action="store_true", help="use the cuff construction")
    p.add_argument("--max-tries", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cmgraphs", description=__doc__)
    parser.add_argument("--config", help="JSON file of option defaults; flags override it")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="sample a configuration-model graph as an edge list")
    _add_source(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("census", help="component census of a graph")
    _add_source(p)
    p.add_argument("--edges", help="edge list written by gen")
    p.add_argument("--cap", type=int, default=DEFAULT_CAP)
    p.add_argument("--csv", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_census)

    p = sub.add_parser("theory", help="asymptotic constants for a pmf")
    p.add_argument("--pmf", required=True)
    p.add_argument("--graphs", default=DEFAULT_THEORY_GRAPHS, help="comma-separated graph names")
    p.add_argument("--csv", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("verify", help="run an acceptance experiment")
    p.add_argument("experiment", choices=[*acceptance.CHECKS, "all"])
    p.add_argument("--n", type=int)
    p.add_argument("--R", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--csv", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("cumulant-lab", help="mixed cumulant of an indicator family")
    p.add_argument("family", help='JSON file or literal {"N": .., "members": [[[a, b], ..], ..]}')
    p.add_argument("--scale", help="comma-separated N values for the decay fit")
    p.add_argument("--out")
    p.set_defaults(func=cmd_cumulant_lab)
    return parser


def _apply_config(parser, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    cfg = json.loads(Path(known.config).read_text())
    for action in parser._subparsers._group_actions:
        for sp in action.choices.values():
            sp.set_defaults(**{k.replace("-", "_"): v for k, v in cfg.items()})


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except (CLIError, ParityViolation, TriesExhausted, DegenerateDistribution, CapExceeded,
            FileNotFoundError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
