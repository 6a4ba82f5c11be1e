"""The uncoordinated spanner: edge-admission rule, construction, verification."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .metric import Metric, ball, lg_aspect, min_max_distance, mst_weight
from .orders import PairOrder
from .wspd import Wspd, WspPair, ball_radius, check_s, make_pair


@dataclass(frozen=True)
class Edge:
    u: int
    v: int
    length: float
    seq: int
    r: float


@dataclass(eq=False)
class SpannerGraph:
    n: int
    s: float
    edges: list[Edge] = field(default_factory=list)

    def add(self, metric: Metric, u: int, v: int, seq: int | None = None) -> Edge:
        length = metric.d(u, v)
        seq = (self.edges[-1].seq + 1 if self.edges else 0) if seq is None else seq
        e = Edge(u, v, length, seq, ball_radius(length, self.s))
        self.edges.append(e)
        return e

    def endpoint_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """``(u, v, r, seq)`` arrays in stored order."""
        if not self.edges:
            z = np.zeros(0, dtype=int)
            return z, z, np.zeros(0), z
        u = np.fromiter((e.u for e in self.edges), dtype=int, count=len(self.edges))
        v = np.fromiter((e.v for e in self.edges), dtype=int, count=len(self.edges))
        r = np.fromiter((e.r for e in self.edges), dtype=float, count=len(self.edges))
        seq = np.fromiter((e.seq for e in self.edges), dtype=int, count=len(self.edges))
        return u, v, r, seq

    def edge_set(self) -> set[tuple[int, int]]:
        return {(min(e.u, e.v), max(e.u, e.v)) for e in self.edges}

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=int)
        for e in self.edges:
            deg[e.u] += 1
            deg[e.v] += 1
        return deg

    def adjacency(self) -> csr_matrix:
        u, v, _, _ = self.endpoint_arrays()
        w = np.fromiter((e.length for e in self.edges), dtype=float, count=len(self.edges))
        return csr_matrix((np.concatenate([w, w]), (np.concatenate([u, v]), np.concatenate([v, u]))),
                          shape=(self.n, self.n))

    # -- exports ----------------------------------------------------------
    def to_json(self) -> dict:
        return {"n": self.n, "s": self.s,
                "edges": [{"u": e.u, "v": e.v, "len": e.length, "seq": e.seq} for e in self.edges]}

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1) + "\n")

    @classmethod
    def from_json(cls, data: dict) -> "SpannerGraph":
        """Rebuild from exported JSON; the stored lengths are kept verbatim."""
        for key in ("n", "s", "edges"):
            if key not in data:
                raise ValueError(f"graph JSON lacks field {key!r}")
        g = cls(int(data["n"]), float(data["s"]))
        for e in data["edges"]:
            length = float(e["len"])
            g.edges.append(Edge(int(e["u"]), int(e["v"]), length, int(e["seq"]),
                                ball_radius(length, g.s)))
        return g

    @classmethod
    def load(cls, path: str | Path) -> "SpannerGraph":
        return cls.from_json(json.loads(Path(path).read_text()))

    def to_dot(self) -> str:
        lines = ["graph spanner {", f'  label="n={self.n} s={self.s:g} edges={len(self.edges)}";']
        lines += [f"  {i};" for i in range(self.n)]
        lines += [f'  {e.u} -- {e.v} [len={e.length:.6g}, label="{e.seq}"];' for e in self.edges]
        lines.append("}")
        return "\n".join(lines) + "\n"


def edge_rule_admits(metric: Metric, g: SpannerGraph, s: float, p: int, q: int) -> bool:
    """True iff no existing edge has ``p`` and ``q`` inside its two end balls.

    Reference implementation: scans the whole edge list.
    """
    if p == q:
        raise ValueError("edge endpoints must differ")
    if not g.edges:
        return True
    u, v, _, _ = g.endpoint_arrays()
    r = metric.dist[u, v] / (2 * s + 2)
    dp_u, dq_v = metric.dist[p, u], metric.dist[q, v]
    dp_v, dq_u = metric.dist[p, v], metric.dist[q, u]
    hit = ((dp_u <= r) & (dq_v <= r)) | ((dp_v <= r) & (dq_u <= r))
    return not bool(hit.any())


class _CoverIndex:
    """For every node, the far endpoints and radii of edges whose ball holds it."""

    def __init__(self, n: int):
        self.far = [np.empty(4, dtype=int) for _ in range(n)]
        self.rad = [np.empty(4) for _ in range(n)]
        self.count = [0] * n

    def add(self, x: int, far: int, r: float) -> None:
        k = self.count[x]
        if k == self.far[x].size:
            self.far[x] = np.resize(self.far[x], 2 * k)
            self.rad[x] = np.resize(self.rad[x], 2 * k)
        self.far[x][k] = far
        self.rad[x][k] = r
        self.count[x] = k + 1

    def covered(self, dist: np.ndarray, p: int, q: int) -> bool:
        k = self.count[p]
        return k > 0 and bool((dist[q, self.far[p][:k]] <= self.rad[p][:k]).any())


def build_spanner(metric: Metric, s: float, order: PairOrder | None = None) -> SpannerGraph:
    """Process pairs in ``order``; build ``pq`` unless an earlier edge covers it."""
    s = check_s(s)
    order = order or PairOrder()
    g = SpannerGraph(metric.n, s)
    idx = _CoverIndex(metric.n)
    dist = metric.dist
    for p, q in order.pairs_for(metric):
        if idx.covered(dist, p, q):
            continue
        e = g.add(metric, p, q)
        for x in ball(metric, p, e.r):
            idx.add(int(x), q, e.r)
        for x in ball(metric, q, e.r):
            idx.add(int(x), p, e.r)
    return g


def induced_wspd(metric: Metric, g: SpannerGraph, present: np.ndarray | None = None) -> Wspd:
    """One ball pair ``(B_r(u), B_r(v))`` per edge, in seq order."""
    pairs = [make_pair(metric, e.u, e.v, g.s, e.seq, present) for e in sorted(g.edges, key=lambda e: e.seq)]
    return Wspd(g.s, pairs, {"strategy": "induced"})


# -- verification -------------------------------------------------------------

@dataclass
class SeparationReport:
    uncovered_non_edges: list[tuple[int, int]]
    overlapping_edges: list[tuple[int, int]]  # (earlier seq, later seq)
    bad_edges: list[int]  # self loops, duplicates, wrong lengths

    @property
    def ok(self) -> bool:
        return not (self.uncovered_non_edges or self.overlapping_edges or self.bad_edges)

    def to_json(self) -> dict:
        return {"uncovered_non_edges": [list(p) for p in self.uncovered_non_edges],
                "overlapping_edges": [list(p) for p in self.overlapping_edges],
                "bad_edges": self.bad_edges, "ok": self.ok}


def verify_separation_lemma(metric: Metric, g: SpannerGraph,
                            ids: np.ndarray | None = None) -> SeparationReport:
    """Both halves of the separation property, plus basic edge sanity.

    Radii are recomputed from the metric, so a tampered edge length shows up
    in ``bad_edges`` rather than silently changing the balls.
    """
    n = metric.n
    u, v, _, seq = g.endpoint_arrays()
    bad = []
    seen = set()
    for e in g.edges:
        key = (min(e.u, e.v), max(e.u, e.v))
        if e.u == e.v or key in seen or not math.isclose(e.length, metric.d(e.u, e.v), rel_tol=1e-12):
            bad.append(e.seq)
        seen.add(key)
    r = metric.dist[u, v] / (2 * g.s + 2)
    cov = np.zeros((n, n), dtype=bool)
    overlaps = []
    for k in range(len(u)):
        in_u = metric.dist[u[k]] <= r[k]
        in_v = metric.dist[v[k]] <= r[k]
        cov[np.ix_(in_u, in_v)] = True
        cov[np.ix_(in_v, in_u)] = True
        later = seq > seq[k]
        hit = later & ((in_u[u] & in_v[v]) | (in_v[u] & in_u[v]))
        overlaps += [(int(seq[k]), int(t)) for t in seq[hit]]
    adj = np.zeros((n, n), dtype=bool)
    adj[u, v] = adj[v, u] = True
    sub = np.arange(n) if ids is None else np.asarray(ids, dtype=int)
    miss = ~(cov | adj)[np.ix_(sub, sub)]
    i, j = np.nonzero(miss)
    keep = i < j
    uncovered = [(int(sub[a]), int(sub[b])) for a, b in zip(i[keep], j[keep])]
    overlaps.sort()
    return SeparationReport(uncovered, overlaps, bad)


def stretch_bound(s: float) -> float:
    return (s + 1) / (s - 1)


@dataclass
class StretchReport:
    max_stretch: float
    argmax: tuple[int, int] | None
    deciles: list[float]
    connected: bool
    pairs_checked: int

    def to_json(self) -> dict:
        return {"max_stretch": self.max_stretch if math.isfinite(self.max_stretch) else "inf",
                "argmax": list(self.argmax) if self.argmax else None,
                "deciles": self.deciles, "connected": self.connected,
                "pairs_checked": self.pairs_checked}


def graph_distances(g: SpannerGraph, sources=None) -> np.ndarray:
    return dijkstra(g.adjacency(), directed=False, indices=sources)


def stretch_report(metric: Metric, g: SpannerGraph, ids: np.ndarray | None = None,
                   max_sources: int | None = None, seed: int = 0) -> StretchReport:
    """Max over pairs of graph distance / metric distance.

    Exact by default; with ``max_sources`` only that many random sources are
    expanded (each still against every target).
    """
    sub = np.arange(metric.n) if ids is None else np.asarray(ids, dtype=int)
    if sub.size < 2:
        return StretchReport(1.0, None, [1.0] * 11, True, 0)
    sources = sub
    if max_sources is not None and sub.size > max_sources:
        sources = np.sort(np.random.default_rng(seed).choice(sub, max_sources, replace=False))
    gd = np.atleast_2d(graph_distances(g, sources))[:, sub]
    md = metric.dist[np.ix_(sources, sub)]
    mask = sources[:, None] != sub[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(mask, gd / np.where(mask, md, 1.0), -np.inf)
    flat = ratio[mask]
    k = int(np.argmax(ratio))
    a, b = np.unravel_index(k, ratio.shape)
    mx = float(ratio[a, b])
    connected = bool(np.isfinite(flat).all())
    deciles = np.quantile(flat, np.linspace(0, 1, 11)).tolist() if connected else [math.inf] * 11
    return StretchReport(mx, (int(sources[a]), int(sub[b])), deciles, connected, int(flat.size))


def weight_degree_stats(metric: Metric, g: SpannerGraph) -> dict:
    if metric.n < 2:
        raise ValueError("need at least two points")
    deg = g.degrees()
    total = float(sum(e.length for e in g.edges))
    mst = mst_weight(metric)
    lga = lg_aspect(metric)
    return {
        "edges": len(g.edges),
        "total_weight": total,
        "mst_weight": mst,
        "max_degree": int(deg.max()),
        "avg_degree": float(deg.mean()),
        "lg_alpha": lga,
        "edges_per_node": len(g.edges) / metric.n,
        "weight_ratio": total / (mst * lga),
        "max_degree_ratio": int(deg.max()) / lga,
    }


# -- hop-bounded paths --------------------------------------------------------

def hop_bound(length: float, d_min: float, s: float) -> int:
    """Ceiling of ``2 * (length / d_min) ** (1 / (1 + lg s))``."""
    return math.ceil(2 * (length / d_min) ** (1 / (1 + math.log2(s))))


class WspdIndex:
    """For each ordered point pair, the covering WSP with the smallest seq."""

    def __init__(self, n: int, w: Wspd):
        self.wspd = w
        self.pairs: list[WspPair] = sorted(w.pairs, key=lambda p: p.seq)
        self.best = np.full((n, n), -1, dtype=int)
        self.a_side = np.zeros((n, n), dtype=bool)
        for k in range(len(self.pairs) - 1, -1, -1):
            pr = self.pairs[k]
            a, b = pr.members_a, pr.members_b
            self.best[np.ix_(a, b)] = k
            self.best[np.ix_(b, a)] = k
            self.a_side[np.ix_(a, b)] = True
            self.a_side[np.ix_(b, a)] = False

    def covering(self, x: int, y: int) -> tuple[int, int, WspPair]:
        """``(near_x, near_y, pair)`` where the pair edge runs near_x -- near_y."""
        k = int(self.best[x, y])
        if k < 0:
            raise LookupError(f"no well-separated pair covers ({x}, {y})")
        pr = self.pairs[k]
        if self.a_side[x, y]:
            return pr.center_a, pr.center_b, pr
        return pr.center_b, pr.center_a, pr


def hop_stretch_path(metric: Metric, g: SpannerGraph, index: WspdIndex, p: int, q: int) -> list[int]:
    """Path ``p ~> p'``, edge ``p'q'``, ``q' ~> q`` through the covering pair."""
    if p == q:
        return [p]
    near_p, near_q, _ = index.covering(p, q)
    return hop_stretch_path(metric, g, index, p, near_p) + hop_stretch_path(metric, g, index, near_q, q)


def path_length(metric: Metric, path: list[int]) -> float:
    return float(sum(metric.dist[a, b] for a, b in zip(path, path[1:])))


def check_path(metric: Metric, g: SpannerGraph, path: list[int], s: float,
               d_min: float | None = None, edges: set | None = None) -> dict:
    """Stretch and hop count of ``path`` against both bounds."""
    p, q = path[0], path[-1]
    if d_min is None:
        d_min = min_max_distance(metric)[0]
    if edges is None:
        edges = g.edge_set()
    on_graph = all((min(a, b), max(a, b)) in edges for a, b in zip(path, path[1:]))
    length = path_length(metric, path)
    direct = metric.d(p, q)
    hops = len(path) - 1
    return {"on_graph": on_graph, "stretch": length / direct, "hops": hops,
            "hop_bound": hop_bound(direct, d_min, s),
            "ok": on_graph and length / direct <= stretch_bound(s) + 1e-9
            and hops <= hop_bound(direct, d_min, s)}
