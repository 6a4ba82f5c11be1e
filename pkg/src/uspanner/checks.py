"""Graph-level invariant suite shared by the CLI and the tests."""
from __future__ import annotations

import numpy as np

from .metric import Metric, min_max_distance
from .spanner import (SpannerGraph, WspdIndex, check_path, hop_stretch_path, induced_wspd,
                      stretch_bound, stretch_report, verify_separation_lemma,
                      weight_degree_stats)
from .wspd import verify_wspd


def hop_checks(metric: Metric, g: SpannerGraph, max_pairs: int | None = None, seed: int = 0) -> dict:
    """Route pairs through the induced WSPD and check stretch and hop bounds."""
    n = metric.n
    index = WspdIndex(n, induced_wspd(metric, g))
    d_min = min_max_distance(metric)[0]
    a, b = np.triu_indices(n, 1)
    pairs = np.column_stack([a, b])
    if max_pairs is not None and len(pairs) > max_pairs:
        pairs = pairs[np.random.default_rng(seed).choice(len(pairs), max_pairs, replace=False)]
    edges = g.edge_set()
    max_hops, failures, missing = 0, [], 0
    for p, q in pairs.tolist():
        try:
            path = hop_stretch_path(metric, g, index, p, q)
        except LookupError:
            missing += 1
            continue
        res = check_path(metric, g, path, g.s, d_min, edges)
        max_hops = max(max_hops, res["hops"])
        if not res["ok"]:
            failures.append([p, q])
    return {"hop_pairs_checked": len(pairs), "max_hops": max_hops,
            "hop_failures": failures[:20], "missing_cover": missing,
            "hops_ok": not failures and missing == 0}


def verify_graph(metric: Metric, g: SpannerGraph, hops: bool = True,
                 max_hop_pairs: int | None = None, stretch_sources: int | None = None,
                 seed: int = 0) -> dict:
    """Every graph-level check, as a flat JSON-ready dict with an ``ok`` flag."""
    if g.n != metric.n:
        raise ValueError(f"graph has {g.n} nodes but the metric has {metric.n} points")
    sep = verify_separation_lemma(metric, g)
    out = {
        "n": metric.n, "s": g.s, "edges": len(g.edges),
        "separation": sep.to_json(),
        "separation_ok": sep.ok,
    }
    if sep.bad_edges:
        # the induced balls are meaningless once lengths disagree with the metric
        out["ok"] = False
        return out
    wr = verify_wspd(metric, induced_wspd(metric, g))
    out["wspd"] = {k: v for k, v in wr.to_json().items() if k != "uncovered"}
    out["wspd"]["uncovered"] = len(wr.uncovered)
    out["wspd_ok"] = wr.ok
    if metric.n >= 2:
        st = stretch_report(metric, g, max_sources=stretch_sources, seed=seed)
        out["stretch"] = st.to_json()
        out["stretch_bound"] = stretch_bound(g.s)
        out["stretch_ok"] = st.connected and st.max_stretch <= stretch_bound(g.s) + 1e-9
        stats = weight_degree_stats(metric, g)
        out["stats"] = stats
        if hops and out["wspd_ok"]:
            out.update(hop_checks(metric, g, max_hop_pairs, seed))
    out["ok"] = all(v for k, v in out.items() if k.endswith("_ok"))
    return out

