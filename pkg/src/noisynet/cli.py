"""Command-line interface: ``noisynet {estimate,coexpress,generate,simulate,subgraph}``.

Exit codes: 0 success, 1 computation error, 2 usage error or refusal to
estimate unknown error rates from a single network.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io as _io
import json
import math
import sys
from pathlib import Path

from . import __version__
from .bootstrap import DEFAULT_B, analyze
from .coexpress import coexpress, nominal_alpha, read_expression_csv, replicate_groups
from .errors import NoisyNetError
from .generator import DEFAULT_MAX_ITERS, generate_constrained
from .graph import GraphTargets, clustering_coefficient, count_triangles, count_two_stars
from .io import FormatError, read_network, write_network
from .patterns import parse_patterns
from .simulation import SimulationConfig, format_csv, run_grid, table_configs, to_json, write_csv

SINGLE_NETWORK_REFUSAL = (
    "cannot estimate unknown error rates from a single network: the model (alpha, beta, A) and its dual "
    "(1-beta, 1-alpha, complement of A) generate identically distributed observations, so it is impossible "
    "to produce a consistent estimate. Supply 2 replicates with --alpha or --beta, 3 replicates with "
    "neither, or give both --alpha and --beta."
)


class UsageError(Exception):
    pass


def _clean(v):
    """JSON-safe value: NaN becomes null, numpy scalars become Python numbers."""
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if hasattr(v, "item") and not isinstance(v, (str, bytes)):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def _emit(doc, args, table_rows=None) -> None:
    """Print ``doc`` as JSON, or ``table_rows`` as CSV when --csv is given."""
    if args.format == "csv" and table_rows is not None:
        buf = _io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerows(table_rows)
        text = buf.getvalue()
    else:
        text = json.dumps(_clean(doc), indent=2) + "\n"
    if getattr(args, "output", None):
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# estimate

def _parse_rate(value: str | None):
    if value is None or value == "nominal":
        return value
    try:
        x = float(value)
    except ValueError:
        raise UsageError(f"rate must be a number in [0, 1], got {value!r}") from None
    if not 0.0 <= x <= 1.0:
        raise UsageError(f"rate must lie in [0, 1], got {x}")
    return x


def _mode(n_files: int, alpha, beta) -> str:
    if alpha is not None and beta is not None:
        return "both_known"
    if n_files == 1:
        raise UsageError(SINGLE_NETWORK_REFUSAL)
    if alpha is not None:
        return "alpha_known"
    if beta is not None:
        return "beta_known"
    if n_files < 3:
        raise UsageError("both rates unknown: three replicates are needed (got 2); "
                         "alternatively supply --alpha or --beta")
    return "both_unknown"


def cmd_estimate(args) -> int:
    if not 1 <= len(args.networks) <= 3:
        raise UsageError("estimate takes 1 to 3 network files")
    alpha = _parse_rate(args.alpha if args.assume_alpha is None else args.assume_alpha)
    beta = _parse_rate(args.beta)
    loaded = [read_network(p) for p in args.networks]
    if alpha == "nominal":
        meta = loaded[0][1]
        if "nominal_alpha" not in meta:
            raise UsageError(f"{args.networks[0]} has no '# nominal_alpha=' header; "
                             "it is written by the coexpress subcommand")
        alpha = float(meta["nominal_alpha"])
    mode = _mode(len(loaded), alpha, beta)
    graphs = [g for g, _ in loaded]
    if mode == "both_known":
        graphs = graphs[:1]
    patterns = parse_patterns(args.patterns)
    rep = analyze(graphs, patterns, mode, alpha=alpha, beta=beta, B=args.bootstrap,
                  rng_seed=args.seed, level=args.level, dump_csv=args.dump_bootstrap)
    r = rep.rates
    known = {"alpha": mode in ("alpha_known", "both_known"), "beta": mode in ("beta_known", "both_known")}

    rates = {}
    for name in ("alpha", "beta", "delta"):
        entry = {"estimate": r.raw[name], "clamped": r.clamped[name], "known": known.get(name, False)}
        if not entry["known"]:
            entry["se"] = r.se(name)
        rates[name] = entry
    rates["delta"]["ci"] = {"lower": r.ci_delta[0], "upper": r.ci_delta[1], "level": args.level,
                            "route": "asymptotic"}

    pats = []
    for q, est in enumerate(rep.estimates):
        entry = {"name": est.pattern.name, "density": est.c_hat, "count": est.implied_count}
        if rep.intervals is not None:
            d = rep.intervals.densities[q]
            entry["density_ci"] = {"lower": d.lower, "upper": d.upper, "level": args.level,
                                   "route": "bootstrap-assembled"}
            c = rep.intervals.counts[q]
            if c is not None:
                entry["count_ci"] = {"lower": c.lower, "upper": c.upper, "level": args.level,
                                     "route": "bootstrap-assembled"}
        pats.append(entry)

    clustering = None
    kinds = [e.pattern.kind for e in rep.estimates]
    if "two_star" in kinds and "triangle" in kinds:
        c2 = rep.estimates[kinds.index("two_star")].c_hat
        c3 = rep.estimates[kinds.index("triangle")].c_hat
        clustering = {"estimate": c3 / c2 if c2 else None}
        if rep.intervals is not None and rep.intervals.clustering is not None:
            cl = rep.intervals.clustering
            clustering["ci"] = {"lower": cl.lower, "upper": cl.upper, "level": args.level,
                                "route": "bootstrap-assembled (delta method)"}

    doc = {
        "tool": "noisynet",
        "version": __version__,
        "inputs": [{"path": str(pth), "sha256": _sha256(pth), "p": g.p} for pth, (g, _) in zip(args.networks, loaded)],
        "seed": args.seed,
        "mode": mode,
        "level": args.level,
        "bootstrap_B": args.bootstrap,
        "rates": rates,
        "iterations": r.iterations,
        "patterns": pats,
        "clustering": clustering,
        "flags": rep.flags,
    }

    table = [["quantity", "estimate", "lower", "upper", "route"]]
    table.append(["delta", r.delta_hat, r.ci_delta[0], r.ci_delta[1], "asymptotic"])
    for name in ("alpha", "beta"):
        table.append([name, r.raw[name], "", "", "known" if known[name] else "estimated"])
    for entry in pats:
        ci = entry.get("density_ci", {})
        table.append([f"density:{entry['name']}", entry["density"], ci.get("lower", ""), ci.get("upper", ""),
                      ci.get("route", "")])
        if "count_ci" in entry:
            ci = entry["count_ci"]
            table.append([f"count:{entry['name']}", entry["count"], ci["lower"], ci["upper"], ci["route"]])
    if clustering is not None:
        ci = clustering.get("ci", {})
        table.append(["clustering", clustering["estimate"], ci.get("lower", ""), ci.get("upper", ""),
                      ci.get("route", "")])
    _emit(doc, args, table)
    return 0


# coexpress

def _parse_groups(text: str, n: int) -> list[list[int]]:
    """'0-39;40-79' or '0,2,4;1,3,5' style column lists, 0-based."""
    groups = []
    for part in text.split(";"):
        cols = []
        for tok in part.split(","):
            tok = tok.strip()
            if not tok:
                continue
            if "-" in tok:
                lo, hi = tok.split("-", 1)
                cols.extend(range(int(lo), int(hi) + 1))
            else:
                cols.append(int(tok))
        if any(c < 0 or c >= n for c in cols):
            raise UsageError(f"replicate column index out of range 0..{n - 1}")
        groups.append(cols)
    return groups


def cmd_coexpress(args) -> int:
    expr = read_expression_csv(args.expression)
    if args.replicates:
        groups = _parse_groups(args.replicates, expr.n)
    else:
        groups = replicate_groups(expr.n, args.n_replicates, args.layout)
    nets = coexpress(expr, groups, args.fwer)
    a_b = nominal_alpha(expr.g, args.fwer)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = []
    for i, net in enumerate(nets, 1):
        path = out_dir / f"{args.prefix}{i}.edges"
        write_network(path, net, {"nominal_alpha": repr(a_b), "fwer": args.fwer, "samples": len(groups[i - 1])})
        files.append({"path": str(path), "edges": net.edge_count()})
    doc = {"genes": expr.g, "replicate_sets": len(nets), "fwer": args.fwer, "nominal_alpha": a_b, "networks": files}
    _emit(doc, args, [["path", "edges"]] + [[f["path"], f["edges"]] for f in files])
    return 0


# generate / subgraph / simulate

def cmd_generate(args) -> int:
    targets = GraphTargets.from_density(args.p, args.delta, args.two_stars, args.triangles)
    a = generate_constrained(targets, args.seed, args.max_iters)
    write_network(args.out, a)
    doc = {"path": args.out, "p": a.p, "edges": a.edge_count(), "two_stars": count_two_stars(a),
           "triangles": count_triangles(a), "seed": args.seed}
    _emit(doc, args, [list(doc), list(doc.values())])
    return 0


def cmd_subgraph(args) -> int:
    a, _ = read_network(args.network)
    n2 = count_two_stars(a)
    doc = {"p": a.p, "edges": a.edge_count(), "two_stars": n2, "triangles": count_triangles(a),
           "clustering": clustering_coefficient(a) if n2 else None}
    if args.format == "text":
        for k, v in doc.items():
            print(f"{k}\t{'' if v is None else v}")
        return 0
    _emit(doc, args, [list(doc), ["" if v is None else v for v in doc.values()]])
    return 0


def _row_list(text: str) -> list[int]:
    rows = [int(x) for x in text.split(",") if x.strip()]
    if any(not 1 <= r <= 16 for r in rows):
        raise UsageError("table rows are numbered 1 to 16")
    return rows


def cmd_simulate(args) -> int:
    common = dict(replications=args.reps, bootstrap_B=args.bootstrap, mode=args.mode,
                  base_seed=args.seed, ci_level=args.level)
    if args.table1_row:
        configs = table_configs(_row_list(args.table1_row), **common)
    else:
        need = ("p", "delta", "two_stars", "triangles")
        missing = [n for n in need if getattr(args, n) is None]
        if missing:
            raise UsageError(f"give --table1-row or all of --p --delta --two-stars --triangles (missing {missing})")
        configs = [SimulationConfig(args.p, args.delta, args.alpha, args.beta, args.two_stars, args.triangles,
                                    **common)]
    rows = run_grid(configs, workers=args.threads)
    if args.out_csv:
        write_csv(rows, args.out_csv)
    if args.out_json:
        Path(args.out_json).write_text(to_json(rows) + "\n")
    text = format_csv(rows) if args.format == "csv" else to_json(rows) + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


# parser

def _add_globals(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--seed", type=int, default=d(0), help="random seed (default 0)")
    p.add_argument("--threads", type=int, default=d(1), help="worker processes for independent scenarios")
    p.add_argument("--level", type=float, default=d(0.95), help="confidence level (default 0.95)")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--json", dest="format", action="store_const", const="json", default=d("json"))
    g.add_argument("--csv", dest="format", action="store_const", const="csv", default=d("json"))
    p.add_argument("-o", "--output", default=d(None), help="write the report here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="noisynet", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"noisynet {__version__}")
    _add_globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    e = sub.add_parser("estimate", help="error rates, densities and intervals from 1-3 replicates")
    _add_globals(e, suppress=True)
    e.add_argument("networks", nargs="+", help="replicate network files (.edges or .csv), Y then Y* then Y**")
    e.add_argument("--alpha", help="known type I rate")
    e.add_argument("--beta", help="known type II rate")
    e.add_argument("--assume-alpha", choices=["nominal"],
                   help="take alpha from the '# nominal_alpha=' header written by coexpress")
    e.add_argument("--patterns", default="edge,two-star,triangle",
                   help="comma list: edge, two-star, triangle, open-triple, path:k, cycle:k")
    e.add_argument("--bootstrap", type=int, default=DEFAULT_B, metavar="B", help="bootstrap replicates, 0 to skip")
    e.add_argument("--dump-bootstrap", metavar="CSV", help="write per-replicate bootstrap statistics")
    e.set_defaults(func=cmd_estimate)

    c = sub.add_parser("coexpress", help="threshold Fisher-transformed correlations into networks")
    _add_globals(c, suppress=True)
    c.add_argument("expression", help="CSV: header row of sample names, then one row per gene")
    c.add_argument("--fwer", type=float, default=0.05, help="family-wise error rate (default 0.05)")
    grp = c.add_mutually_exclusive_group(required=True)
    grp.add_argument("--replicates", help="explicit 0-based columns per replicate, e.g. '0-39;40-79;80-119'")
    grp.add_argument("--n-replicates", type=int, help="split the columns evenly into this many replicates")
    c.add_argument("--layout", choices=["blocked", "interleaved"], default="blocked")
    c.add_argument("--out-dir", default=".", help="directory for the replicate edge files")
    c.add_argument("--prefix", default="replicate", help="file name prefix (default 'replicate')")
    c.set_defaults(func=cmd_coexpress)

    g = sub.add_parser("generate", help="random graph with exact edge, two-star and triangle counts")
    _add_globals(g, suppress=True)
    g.add_argument("--p", type=int, required=True)
    g.add_argument("--delta", type=float, required=True, help="edge density; edges = floor(delta p(p-1)/2)")
    g.add_argument("--two-stars", type=int, required=True)
    g.add_argument("--triangles", type=int, required=True)
    g.add_argument("--max-iters", type=int, default=DEFAULT_MAX_ITERS)
    g.add_argument("--out", required=True, help="output file (.edges or .csv)")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("simulate", help="Monte-Carlo MAE / coverage study")
    _add_globals(s, suppress=True)
    s.add_argument("--table1-row", help="comma list of reference-grid rows (1-16)")
    s.add_argument("--p", type=int)
    s.add_argument("--delta", type=float)
    s.add_argument("--alpha", type=float, default=0.05)
    s.add_argument("--beta", type=float, default=0.05)
    s.add_argument("--two-stars", type=int)
    s.add_argument("--triangles", type=int)
    s.add_argument("--reps", type=int, default=500)
    s.add_argument("--bootstrap", type=int, default=DEFAULT_B, metavar="B")
    s.add_argument("--mode", default="both_unknown",
                   choices=["both_unknown", "alpha_known", "beta_known", "both_known"])
    s.add_argument("--out-csv")
    s.add_argument("--out-json")
    s.set_defaults(func=cmd_simulate)

    t = sub.add_parser("subgraph", help="exact edge, two-star and triangle counts of a network")
    _add_globals(t, suppress=True)
    t.add_argument("network")
    t.add_argument("--text", dest="format", action="store_const", const="text", default=argparse.SUPPRESS,
                   help="tab-separated key/value lines")
    t.set_defaults(func=cmd_subgraph)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not 0 < args.level < 1:
        parser.error("--level must lie in (0, 1)")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"noisynet {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (NoisyNetError, FormatError, ValueError, OSError) as exc:
        print(f"noisynet {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
