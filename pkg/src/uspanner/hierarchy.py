"""Discrete center hierarchy, deformable spanner and cousin-pair WSPD.

Distances are divided by the closest-pair distance once at build time, so
level ``i`` works with radius ``2**i`` in units of ``d_min``.
"""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .metric import Metric, min_max_distance
from .wspd import Wspd, WspPair


@dataclass(eq=False)
class DiscreteCenterHierarchy:
    metric: Metric
    d_min: float
    levels: list[np.ndarray]        # levels[i] = sorted ids of S_i
    parents: list[dict[int, int]]   # parents[i][p] for p in S_{i-1}; parents[0] unused
    ancestors: np.ndarray = field(repr=False)  # ancestors[i, p] = P^(i)(p)

    @property
    def top(self) -> int:
        return len(self.levels) - 1

    def nd(self, a, b):
        """Normalized distance(s)."""
        return self.metric.dist[a, b] / self.d_min

    def ancestor(self, p: int, i: int) -> int:
        return int(self.ancestors[i, p])

    def __post_init__(self):
        self._desc: dict[tuple[int, int], np.ndarray] = {}

    def descendants(self, i: int, c: int) -> np.ndarray:
        """Points whose level-``i`` ancestor is ``c`` (memoized)."""
        key = (i, c)
        if key not in self._desc:
            self._desc[key] = np.flatnonzero(self.ancestors[i] == c)
        return self._desc[key]

    def to_json(self) -> dict:
        return {"d_min": self.d_min,
                "levels": [lv.tolist() for lv in self.levels],
                "parents": [{str(k): v for k, v in sorted(par.items())} for par in self.parents]}

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1) + "\n")


def build_hierarchy(metric: Metric) -> DiscreteCenterHierarchy:
    """Greedy maximal discrete centers, ascending-id scan at every level.

    A point of ``S_{i-1}`` joins ``S_i`` unless a center already kept on
    level ``i`` is strictly closer than ``2**i``; its parent is the lowest-id
    center within ``2**i``.
    """
    n = metric.n
    d_min = min_max_distance(metric)[0] if n > 1 else 1.0
    nd = metric.dist / d_min
    levels = [np.arange(n)]
    parents: list[dict[int, int]] = [{}]
    anc = [np.arange(n)]
    i = 0
    while levels[-1].size > 1:
        i += 1
        radius = 2.0 ** i
        kept: list[int] = []
        for p in levels[-1].tolist():
            if not kept or nd[p, kept].min() >= radius:
                kept.append(p)
        kept_arr = np.asarray(kept)
        par = {}
        for p in levels[-1].tolist():
            near = kept_arr[nd[p, kept_arr] <= radius]
            par[p] = int(near.min())
        levels.append(kept_arr)
        parents.append(par)
        prev = anc[-1]
        anc.append(np.fromiter((par[int(a)] for a in prev), dtype=int, count=n))
    return DiscreteCenterHierarchy(metric, d_min, levels, parents, np.vstack(anc))


def check_hierarchy(h: DiscreteCenterHierarchy) -> list[str]:
    """Exhaustive covering / separation / ancestor-distance checks."""
    problems = []
    for i in range(1, h.top + 1):
        radius = 2.0 ** i
        lv = h.levels[i]
        if not set(lv.tolist()) <= set(h.levels[i - 1].tolist()):
            problems.append(f"S_{i} is not a subset of S_{i - 1}")
        for p, par in h.parents[i].items():
            if par not in set(lv.tolist()):
                problems.append(f"parent of {p} at level {i} is not in S_{i}")
            if h.nd(p, par) > radius:
                problems.append(f"covering fails: {p} -> {par} at level {i}")
        if lv.size > 1:
            sub = h.metric.dist[np.ix_(lv, lv)] / h.d_min
            off = sub.copy()
            np.fill_diagonal(off, np.inf)
            if off.min() < radius:
                problems.append(f"separation fails at level {i}")
    if h.levels[-1].size != 1:
        problems.append("top level is not a single center")
    if h.metric.n > 1:
        _, d_max = min_max_distance(h.metric)
        alpha = d_max / h.d_min
        if h.top > math.ceil(math.log2(alpha)) + 1:
            problems.append(f"too many levels: {h.top} > ceil(lg alpha) + 1")
    pts = np.arange(h.metric.n)
    for i in range(h.top + 1):
        d = h.metric.dist[pts, h.ancestors[i]] / h.d_min
        if np.any(d > 2.0 ** (i + 1)):
            problems.append(f"ancestor bound fails at level {i}")
    return problems


@dataclass(eq=False)
class DeformableSpanner:
    hierarchy: DiscreteCenterHierarchy
    c: float
    level_edges: list[list[tuple[int, int]]]

    def adjacent(self, i: int, u: int, v: int) -> bool:
        return u == v or self.hierarchy.nd(u, v) <= self.c * 2.0 ** i

    def edge_count(self) -> int:
        return len(self.edge_set())

    def edge_set(self) -> set[tuple[int, int]]:
        return {e for lv in self.level_edges for e in lv}

    def total_weight(self) -> float:
        return float(sum(self.hierarchy.metric.dist[u, v] for u, v in self.edge_set()))

    def level_degrees(self, i: int) -> dict[int, int]:
        deg = Counter()
        for u, v in self.level_edges[i]:
            deg[u] += 1
            deg[v] += 1
        return {int(p): deg.get(int(p), 0) for p in self.hierarchy.levels[i]}


def c_for_epsilon(eps: float) -> float:
    return 4 + 16 / eps


def c_for_separation(s: float) -> float:
    return 4 * (s + 1)


def build_deformable_spanner(h: DiscreteCenterHierarchy, c: float) -> DeformableSpanner:
    if c < 1:
        raise ValueError(f"deformable spanner needs c >= 1, got {c}")
    level_edges = []
    for i, lv in enumerate(h.levels):
        sub = h.metric.dist[np.ix_(lv, lv)] / h.d_min
        a, b = np.nonzero(np.triu(sub <= c * 2.0 ** i, 1))
        level_edges.append([(int(lv[x]), int(lv[y])) for x, y in zip(a, b)])
    return DeformableSpanner(h, float(c), level_edges)


def cousin_pairs(ds: DeformableSpanner) -> list[tuple[int, int, int]]:
    """``(level, u, v)`` with ``u < v`` non-adjacent but parents adjacent."""
    h = ds.hierarchy
    out = []
    for i in range(h.top):
        lv = h.levels[i]
        sub = h.metric.dist[np.ix_(lv, lv)] / h.d_min
        a, b = np.nonzero(np.triu(sub > ds.c * 2.0 ** i, 1))
        for x, y in zip(a.tolist(), b.tolist()):
            u, v = int(lv[x]), int(lv[y])
            if ds.adjacent(i + 1, h.parents[i + 1][u], h.parents[i + 1][v]):
                out.append((i, u, v))
    return out


def cousin_pair_wspd(ds: DeformableSpanner) -> Wspd:
    """Descendant sets of every cousin pair; ``(c/4 - 1)``-well-separated."""
    h = ds.hierarchy
    pairs = []
    for seq, (i, u, v) in enumerate(cousin_pairs(ds)):
        pairs.append(WspPair(u, v, 2.0 ** (i + 1) * h.d_min,
                             h.descendants(i, u), h.descendants(i, v), seq))
    return Wspd(ds.c / 4 - 1, pairs, {"strategy": "cousin-pairs", "c": ds.c})


def map_to_cousin_pair(ds: DeformableSpanner, p: int, q: int) -> tuple[int, int, int] | None:
    """Level where the ancestors of ``p`` and ``q`` stop being adjacent.

    Returns ``(i, u_i, v_i)`` with ``u_i, v_i`` non-adjacent and their parents
    adjacent, or None when ``p`` and ``q`` are adjacent on level 0.
    """
    if p == q:
        raise ValueError("points must differ")
    h = ds.hierarchy
    for j in range(h.top + 1):
        if ds.adjacent(j, h.ancestor(p, j), h.ancestor(q, j)):
            if j == 0:
                return None
            return j - 1, h.ancestor(p, j - 1), h.ancestor(q, j - 1)
    raise AssertionError("ancestors never become adjacent")


def mapping_histogram(ds: DeformableSpanner, w: Wspd) -> Counter:
    """How many greedy pairs map to each cousin pair (orientation-free key)."""
    hist: Counter = Counter()
    for pr in w.pairs:
        m = map_to_cousin_pair(ds, pr.center_a, pr.center_b)
        if m is None:
            continue
        i, u, v = m
        hist[(i, min(u, v), max(u, v))] += 1
    return hist
