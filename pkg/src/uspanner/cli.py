"""Command-line harness: ``uspanner generate | run | verify``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import generators
from .checks import verify_graph
from .hierarchy import (build_deformable_spanner, build_hierarchy, c_for_separation, check_hierarchy,
                        cousin_pair_wspd, mapping_histogram)
from .metric import EUCLIDEAN, Metric, MetricError, aspect_ratio, load_matrix, load_points, save_matrix, save_points
from .orders import STRATEGIES, PairOrder
from .plotting import plot_spanner, plot_sweep
from .simulator import check_stores, invariant_suite, run_construction
from .spanner import SpannerGraph, build_spanner
from .wspd import build_greedy_wspd, verify_wspd

log = logging.getLogger("uspanner")

SUMMARY_COLUMNS = ["n", "s", "edges", "messages", "max_store", "max_stretch", "max_hops",
                   "edges_per_node", "avg_degree", "max_degree", "max_degree_ratio", "weight_ratio",
                   "message_ratio", "store_ratio", "lg_alpha", "mapping_max", "ok"]


def resolve_s(s: float | None, epsilon: float | None) -> float:
    """Exactly one of ``s`` and ``epsilon``; ``s = 1 + 2/epsilon``."""
    if (s is None) == (epsilon is None):
        raise ValueError("give exactly one of --s and --epsilon")
    if epsilon is not None:
        if epsilon <= 0:
            raise ValueError("epsilon must be positive")
        s = 1 + 2 / epsilon
    if not s > 1:
        raise ValueError(f"s must exceed 1, got {s}")
    return float(s)


def load_instance(args, n: int | None = None) -> tuple[Metric, str]:
    """Metric from ``--points``/``--matrix`` or from the generator flags."""
    if getattr(args, "points", None):
        return load_points(args.points), "file"
    if getattr(args, "matrix", None):
        return load_matrix(args.matrix, check_triangle=not args.skip_triangle_check), "file"
    n = n or args.n
    if args.metric == "graph":
        return generators.geometric_graph_metric(n, args.seed), "generated"
    return Metric.from_points(generators.make_points(args.dist, n, args.dim, args.seed)), "generated"


# -- generate ---------------------------------------------------------------------

def cmd_generate(args) -> int:
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if args.metric == "graph":
        save_matrix(out, generators.geometric_graph_metric(args.n, args.seed).dist)
    else:
        save_points(out, generators.make_points(args.dist, args.n, args.dim, args.seed))
    print(out)
    return 0


# -- run --------------------------------------------------------------------------

def run_one(metric: Metric, s: float, order: PairOrder, out: Path, *,
            max_route_pairs: int | None = 20000, stretch_sources: int | None = None,
            hierarchy: bool = True, figures: bool = True) -> dict:
    """Build, simulate, verify and export one instance; returns the summary."""
    out.mkdir(parents=True, exist_ok=True)
    g = build_spanner(metric, s, order)
    w = build_greedy_wspd(metric, s, order)
    sim = run_construction(metric, s, order)

    graph_key = [(e.u, e.v) for e in g.edges]
    checks = {
        "wspd_equivalence_ok": graph_key == [(p.center_a, p.center_b) for p in w.pairs],
        "locality_ok": graph_key == [(e.u, e.v) for e in sim.graph.edges],
        "greedy_wspd_ok": verify_wspd(metric, w).ok,
    }
    if stretch_sources is None and metric.n > 500:
        stretch_sources = 500
    report = verify_graph(metric, g, hops=True, max_hop_pairs=max_route_pairs,
                          stretch_sources=stretch_sources)
    checks["graph_ok"] = report["ok"]
    sim_report = invariant_suite(sim, routes=True, max_route_pairs=max_route_pairs)
    checks["simulator_ok"] = sim_report["ok"]
    checks["stores_ok"] = not check_stores(sim)

    stats = report.get("stats", {})
    lga = stats.get("lg_alpha", 1.0)
    summary = {
        "n": metric.n, "metric": metric.kind, "s": s, "order": order.describe(),
        "edges": len(g.edges),
        "messages": sim.message_count,
        "max_store": sim.summary()["max_store"],
        "max_stretch": report.get("stretch", {}).get("max_stretch", 1.0),
        "max_hops": max(report.get("max_hops", 0), sim_report.get("max_hops", 0)),
        "aspect_ratio": aspect_ratio(metric) if metric.n > 1 else 1.0,
        **{k: stats[k] for k in ("lg_alpha", "mst_weight", "total_weight", "edges_per_node",
                                 "avg_degree", "max_degree", "max_degree_ratio", "weight_ratio")
           if k in stats},
        "message_ratio": sim.message_count / (metric.n * lga),
        "store_ratio": sim.summary()["max_store"] / lga,
        "wspd_pairs": len(w.pairs), "wspd_total_size": w.total_size(),
    }
    if hierarchy and metric.n > 1:
        h = build_hierarchy(metric)
        ds = build_deformable_spanner(h, c_for_separation(s))
        cw = cousin_pair_wspd(ds)
        hist = mapping_histogram(ds, w)
        checks["hierarchy_ok"] = not check_hierarchy(h)
        checks["cousin_wspd_ok"] = not verify_wspd(metric, cw, ids=np.array([], dtype=int)).not_separated
        summary["hierarchy_levels"] = h.top
        summary["cousin_pairs"] = len(cw.pairs)
        summary["mapping_max"] = max(hist.values(), default=0)
        h.save(out / "hierarchy.json")
    summary["checks"] = checks
    summary["verification"] = report
    summary["ok"] = all(checks.values())

    g.save(out / "graph.json")
    (out / "graph.dot").write_text(g.to_dot())
    w.save(out / "wspd.json")
    sim.export_log(out / "events.jsonl")
    if figures and metric.kind == EUCLIDEAN and metric.dim_hint == 2:
        plot_spanner(metric.points, g, out / "graph.svg")
    (out / "summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True, default=_json_default) + "\n")
    return summary


def _json_default(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    raise TypeError(f"not JSON serializable: {type(x)}")


def cmd_run(args) -> int:
    s = resolve_s(args.s, args.epsilon)
    order_seed = args.seed if args.order_seed is None else args.order_seed
    out = Path(args.out)
    sizes = [int(x) for x in args.sweep.split(",")] if args.sweep else [None]
    rows = []
    for n in sizes:
        metric, source = load_instance(args, n)
        sub = out / f"n{metric.n}" if args.sweep else out
        sub.mkdir(parents=True, exist_ok=True)
        if source == "generated":
            if metric.kind == EUCLIDEAN:
                save_points(sub / "points.csv", metric.points)
            else:
                save_matrix(sub / "matrix.csv", metric.dist)
        order = PairOrder(args.order, order_seed)
        log.info("running n=%d s=%g order=%s", metric.n, s, args.order)
        summary = run_one(metric, s, order, sub, max_route_pairs=args.max_route_pairs,
                          stretch_sources=args.stretch_sources, hierarchy=not args.no_hierarchy,
                          figures=not args.no_figures)
        rows.append({k: summary.get(k) for k in SUMMARY_COLUMNS})
        print(json.dumps({k: summary.get(k) for k in ("n", "edges", "messages", "max_store",
                                                       "max_stretch", "max_hops", "ok")}))
    if args.sweep:
        with open(out / "sweep.csv", "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=SUMMARY_COLUMNS)
            writer.writeheader()
            writer.writerows(rows)
        (out / "sweep.json").write_text(json.dumps(rows, indent=1) + "\n")
        if not args.no_figures:
            plot_sweep(rows, out / "sweep.svg")
    return 0 if all(r["ok"] for r in rows) else 1


# -- verify -----------------------------------------------------------------------

def cmd_verify(args) -> int:
    try:
        g = SpannerGraph.load(args.graph)
        if args.points:
            metric = load_points(args.points)
        elif args.matrix:
            metric = load_matrix(args.matrix, check_triangle=not args.skip_triangle_check)
        else:
            raise ValueError("give --points or --matrix")
        if args.s is not None:
            g.s = resolve_s(args.s, None)
        report = verify_graph(metric, g, hops=True, max_hop_pairs=args.max_route_pairs,
                              stretch_sources=args.stretch_sources)
    except (ValueError, KeyError, MetricError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    text = json.dumps(report, indent=1, sort_keys=True, default=_json_default)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return 0 if report["ok"] else 1


# -- argument parsing -------------------------------------------------------------

def _instance_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, default=100, help="number of points")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--dist", choices=["uniform", "clustered", "grid"], default="uniform")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--metric", choices=["euclidean", "graph"], default="euclidean",
                   help="graph = shortest-path metric of a random geometric graph")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uspanner", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a point (or matrix) CSV")
    _instance_flags(gen)
    gen.add_argument("--out", required=True, help="output CSV path")
    gen.set_defaults(func=cmd_generate)

    run = sub.add_parser("run", help="build, simulate, verify and export")
    _instance_flags(run)
    src = run.add_mutually_exclusive_group()
    src.add_argument("--points", help="point CSV instead of a generated instance")
    src.add_argument("--matrix", help="distance-matrix CSV instead of a generated instance")
    sval = run.add_mutually_exclusive_group(required=True)
    sval.add_argument("--s", type=float)
    sval.add_argument("--epsilon", type=float)
    run.add_argument("--order", choices=[x for x in STRATEGIES if x != "explicit"], default="random")
    run.add_argument("--order-seed", type=int, default=None, help="defaults to --seed")
    run.add_argument("--sweep", help="comma-separated n values, e.g. 100,200,400,800")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--max-route-pairs", type=int, default=20000,
                     help="route at most this many pairs (random sample beyond)")
    run.add_argument("--stretch-sources", type=int, default=None,
                     help="sample this many stretch sources (default: exact up to n=500)")
    run.add_argument("--skip-triangle-check", action="store_true")
    run.add_argument("--no-hierarchy", action="store_true")
    run.add_argument("--no-figures", action="store_true")
    run.set_defaults(func=cmd_run)

    ver = sub.add_parser("verify", help="re-verify an exported graph")
    ver.add_argument("--graph", required=True)
    vsrc = ver.add_mutually_exclusive_group(required=True)
    vsrc.add_argument("--points")
    vsrc.add_argument("--matrix")
    ver.add_argument("--s", type=float, default=None, help="override s from the graph file")
    ver.add_argument("--out", help="also write the report here")
    ver.add_argument("--max-route-pairs", type=int, default=20000)
    ver.add_argument("--stretch-sources", type=int, default=None)
    ver.add_argument("--skip-triangle-check", action="store_true")
    ver.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, MetricError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
