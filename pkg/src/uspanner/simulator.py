"""Distributed-agent model of the uncoordinated construction.

Agents decide whether to build an edge using only the edge records they were
notified about. Messages are delivered immediately and checks are serialized,
so the simulator is a plain deterministic loop over a schedule.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .metric import Metric, MetricError, ball, min_max_distance
from .orders import PairOrder
from .spanner import (SpannerGraph, check_path, induced_wspd, stretch_bound, stretch_report,
                      verify_separation_lemma)
from .wspd import ball_radius, check_s, verify_wspd


class ProtocolViolation(RuntimeError):
    """A node lacked the local information the protocol guarantees it has."""


@dataclass(frozen=True)
class EdgeRecord:
    u: int
    v: int
    length: float
    r: float
    near: int      # the endpoint whose ball holds this node
    my_dist: float
    seq: int

    @property
    def far(self) -> int:
        return self.v if self.near == self.u else self.u


@dataclass
class AgentState:
    id: int
    store: list[EdgeRecord] = field(default_factory=list)

    def __post_init__(self):
        self._rebuild()

    def _rebuild(self) -> None:
        k = len(self.store)
        self._far = np.empty(max(k, 4), dtype=int)
        self._rad = np.empty(max(k, 4))
        self._far[:k] = [rec.far for rec in self.store]
        self._rad[:k] = [rec.r for rec in self.store]

    def add(self, rec: EdgeRecord) -> None:
        k = len(self.store)
        if k == self._far.size:
            self._far = np.resize(self._far, 2 * k)
            self._rad = np.resize(self._rad, 2 * k)
        self._far[k] = rec.far
        self._rad[k] = rec.r
        self.store.append(rec)

    def purge(self, seqs: set[int]) -> int:
        before = len(self.store)
        self.store = [rec for rec in self.store if rec.seq not in seqs]
        self._rebuild()
        return before - len(self.store)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Far endpoints and radii of the stored records, aligned with ``store``."""
        k = len(self.store)
        return self._far[:k], self._rad[:k]


class NearNeighborOracle:
    """Exact closed-ball queries over the nodes currently in the network."""

    def __init__(self, metric: Metric, present: np.ndarray):
        self.metric = metric
        self.present = present
        self.queries = 0

    def query(self, center: int, r: float) -> np.ndarray:
        self.queries += 1
        return ball(self.metric, center, r, self.present)


@dataclass(eq=False)
class SimState:
    metric: Metric
    s: float
    agents: dict[int, AgentState]
    graph: SpannerGraph
    schedule: PairOrder
    present: np.ndarray
    message_count: int = 0
    probe_count: int = 0
    log: list[dict] = field(default_factory=list)
    next_seq: int = 0

    def __post_init__(self):
        self.oracle = NearNeighborOracle(self.metric, self.present)

    def present_ids(self) -> np.ndarray:
        return np.flatnonzero(self.present)

    def emit(self, kind: str, **data) -> None:
        self.log.append({"t": len(self.log), "kind": kind, **data})

    def _set_metric(self, metric: Metric, present: np.ndarray) -> None:
        self.metric = metric
        self.present = present
        self.graph.n = metric.n
        queries = self.oracle.queries
        self.oracle = NearNeighborOracle(metric, present)
        self.oracle.queries = queries

    # -- the protocol ---------------------------------------------------------
    def admits(self, x: int, y: int) -> bool:
        """``x`` consults its own store: is ``y`` near the far end of any record?"""
        far, rad = self.agents[x].arrays()
        return far.size == 0 or not bool((self.metric.dist[y, far] <= rad).any())

    def check(self, x: int, y: int) -> bool:
        if not self.admits(x, y):
            return False
        e = self.graph.add(self.metric, x, y, seq=self.next_seq)
        self.next_seq += 1
        self.emit("edge-built", u=x, v=y, seq=e.seq, len=e.length)
        sent = 0
        for end in (x, y):
            for m in self.oracle.query(end, e.r).tolist():
                self.agents[m].add(EdgeRecord(x, y, e.length, e.r, end, self.metric.d(m, end), e.seq))
                sent += 1
        self.message_count += sent
        self.emit("notify-batch", seq=e.seq, messages=sent)
        return True

    def store_sizes(self) -> dict[int, int]:
        return {a: len(ag.store) for a, ag in self.agents.items()}

    def summary(self) -> dict:
        sizes = self.store_sizes()
        return {"nodes": int(self.present.sum()), "edges": len(self.graph.edges),
                "messages": self.message_count,
                "max_store": max(sizes.values()) if sizes else 0,
                "total_store": sum(sizes.values())}

    def export_log(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            for ev in self.log:
                fh.write(json.dumps(ev, sort_keys=True) + "\n")


def run_construction(metric: Metric, s: float, schedule: PairOrder | None = None) -> SimState:
    s = check_s(s)
    schedule = schedule or PairOrder()
    present = np.ones(metric.n, dtype=bool)
    sim = SimState(metric, s, {i: AgentState(i) for i in range(metric.n)},
                   SpannerGraph(metric.n, s), schedule, present)
    for x, y in schedule.pairs_for(metric):
        sim.check(x, y)
    return sim


# -- queries on a quiescent network ---------------------------------------------

def covering_record(sim: SimState, p: int, q: int) -> EdgeRecord:
    """Earliest record in ``p``'s store whose far ball holds ``q``."""
    sim.probe_count += 1
    far, rad = sim.agents[p].arrays()
    hits = np.flatnonzero(sim.metric.dist[q, far] <= rad)
    if hits.size == 0:
        raise ProtocolViolation(f"node {p} holds no record covering ({p}, {q})")
    store = sim.agents[p].store
    return min((store[k] for k in hits.tolist()), key=lambda rec: rec.seq)


def local_route(sim: SimState, p: int, q: int) -> list[int]:
    """Source route assembled from the stores of the nodes along the way."""
    for node in (p, q):
        if not sim.present[node]:
            raise ValueError(f"node {node} is not in the network")
    if p == q:
        return [p]
    rec = covering_record(sim, p, q)
    return local_route(sim, p, rec.near) + local_route(sim, rec.far, q)


def local_nearest_neighbor(sim: SimState, x: int) -> int:
    """Nearest present node to ``x`` using ``x``'s store (lowest id on ties).

    Candidates are the endpoints of stored records. When ``x`` is itself an
    endpoint, the far ball may hold a closer node than its center, so that
    ball is fetched from the oracle.
    """
    store = sim.agents[x].store
    if not store:
        if sim.present.sum() > 1:
            raise ProtocolViolation(f"node {x} has an empty store")
        raise ValueError("no other node in the network")
    cand = set()
    for rec in store:
        cand.update((rec.u, rec.v))
        if rec.near == x:
            cand.update(sim.oracle.query(rec.far, rec.r).tolist())
    cand.discard(x)
    return min(cand, key=lambda y: (sim.metric.d(x, y), y))


def brute_nearest_neighbor(metric: Metric, x: int, present: np.ndarray | None = None) -> int:
    d = metric.dist[x].copy()
    d[x] = np.inf
    if present is not None:
        d[~present] = np.inf
    return int(np.argmin(d))  # argmin returns the lowest index among ties


# -- churn ----------------------------------------------------------------------

def insert_node(sim: SimState, point=None, row=None, order: str = "ascending", seed: int = 0) -> int:
    """Join a new node; returns its id.

    The newcomer first collects the records of existing edges whose balls it
    falls into, then checks an edge to every present peer.
    """
    x = _coincident(sim.metric, point, row)
    if x is not None:
        if sim.present[x]:
            raise MetricError(f"duplicate point: node {x} is already at that position")
        # a node that left earlier rejoins under its old id
        present = sim.present
        present[x] = True
        metric = sim.metric
    else:
        metric = sim.metric.with_point(point=point, row=row)
        x = metric.n - 1
        present = np.append(sim.present, True)
        sim._set_metric(metric, present)
    sim.agents[x] = AgentState(x)
    peers = [int(y) for y in np.flatnonzero(present) if y != x]
    sim.emit("join", node=x, peers=len(peers))
    learned = 0
    for e in sim.graph.edges:
        for end in (e.u, e.v):
            d = metric.d(x, end)
            if d <= e.r:
                sim.agents[x].add(EdgeRecord(e.u, e.v, e.length, e.r, end, d, e.seq))
                learned += 1
    sim.message_count += learned
    if order == "random":
        peers = np.random.default_rng(seed).permutation(peers).tolist()
    elif order != "ascending":
        raise ValueError(f"unknown join order {order!r}")
    for y in peers:
        sim.check(x, y)
    return x


def _coincident(metric: Metric, point, row) -> int | None:
    if metric.kind == "euclidean":
        if point is None:
            raise MetricError("euclidean metric needs coordinates for a new point")
        same = np.flatnonzero(np.all(metric.points == np.asarray(point, dtype=float), axis=1))
    else:
        if row is None:
            raise MetricError("matrix metric needs a distance row for a new point")
        same = np.flatnonzero(np.asarray(row, dtype=float) == 0)
    return int(same[0]) if same.size else None


def delete_node(sim: SimState, y: int) -> set[int]:
    """Remove ``y``; returns the set of nodes that had to re-check.

    Every node holding a record of an edge incident to ``y`` purges it and
    then re-checks edges to all present nodes.
    """
    if y < 0 or y >= sim.metric.n or not sim.present[y]:
        raise ValueError(f"node {y} is not in the network")
    removed = [e for e in sim.graph.edges if y in (e.u, e.v)]
    sim.present[y] = False
    del sim.agents[y]
    sim.graph.edges = [e for e in sim.graph.edges if y not in (e.u, e.v)]
    affected: set[int] = set()
    sent = 0
    for e in removed:
        # y's side is still located by its last known position
        members = set(ball(sim.metric, e.u, e.r, sim.present).tolist())
        members |= set(ball(sim.metric, e.v, e.r, sim.present).tolist())
        sent += len(members)
        for m in members:
            if sim.agents[m].purge({e.seq}):
                affected.add(m)
    sim.message_count += sent
    sim.emit("leave", node=y, removed_edges=len(removed), notified=sent, affected=len(affected))
    present = sim.present_ids().tolist()
    for a in sorted(affected):
        for b in present:
            if b != a:
                sim.check(a, b)
    sim.emit("reroute", affected=sorted(affected))
    return affected


# -- invariants at quiescence ---------------------------------------------------

def snapshot(sim: SimState) -> tuple[Metric, SpannerGraph, np.ndarray]:
    """Present nodes re-indexed ``0..k-1`` with the graph mapped accordingly."""
    ids = sim.present_ids()
    sub = sim.metric.restrict(ids)
    back = {int(old): new for new, old in enumerate(ids.tolist())}
    g = SpannerGraph(len(ids), sim.s)
    for e in sim.graph.edges:
        g.add(sub, back[e.u], back[e.v], seq=e.seq)
    return sub, g, ids


def check_stores(sim: SimState) -> list[str]:
    """Every node stores exactly the edges whose end balls contain it."""
    problems = []
    expect: dict[int, set[int]] = {int(a): set() for a in sim.present_ids()}
    for e in sim.graph.edges:
        for end in (e.u, e.v):
            for m in ball(sim.metric, end, e.r, sim.present).tolist():
                expect[m].add(e.seq)
    for a, ag in sim.agents.items():
        have = {rec.seq for rec in ag.store}
        if have != expect.get(a, set()):
            problems.append(f"node {a}: store {sorted(have)} != expected {sorted(expect.get(a, set()))}")
    return problems


def invariant_suite(sim: SimState, routes: bool = True, max_route_pairs: int | None = None,
                    seed: int = 0) -> dict:
    """Separation lemma, stretch, WSPD coverage, NN, routing and store checks."""
    metric, g, ids = snapshot(sim)
    out: dict = {"nodes": int(ids.size), "edges": len(g.edges)}
    sep = verify_separation_lemma(metric, g)
    out["separation_ok"] = sep.ok
    wr = verify_wspd(metric, induced_wspd(metric, g))
    out["wspd_ok"] = wr.ok
    out["wspd_total_size"] = wr.total_size
    if ids.size >= 2:
        st = stretch_report(metric, g)
        out["max_stretch"] = st.max_stretch
        out["stretch_ok"] = st.connected and st.max_stretch <= stretch_bound(sim.s) + 1e-9
        nn_bad = [int(x) for x in ids
                  if local_nearest_neighbor(sim, int(x)) != brute_nearest_neighbor(sim.metric, int(x), sim.present)]
        out["nn_ok"] = not nn_bad
        out["nn_failures"] = nn_bad
    else:
        out.update(max_stretch=1.0, stretch_ok=True, nn_ok=True, nn_failures=[])
    store_problems = check_stores(sim)
    out["stores_ok"] = not store_problems
    out["max_store"] = max((len(a.store) for a in sim.agents.values()), default=0)
    if routes and ids.size >= 2:
        out.update(route_checks(sim, max_pairs=max_route_pairs, seed=seed))
    out["ok"] = all(v for k, v in out.items() if k.endswith("_ok"))
    return out


def route_checks(sim: SimState, max_pairs: int | None = None, seed: int = 0) -> dict:
    """Route every (or a sample of) ordered pairs and check both bounds."""
    ids = sim.present_ids()
    d_min = min_max_distance(sim.metric.restrict(ids))[0]
    a, b = np.meshgrid(ids, ids, indexing="ij")
    mask = a != b
    pairs = np.column_stack([a[mask], b[mask]])
    if max_pairs is not None and len(pairs) > max_pairs:
        pairs = pairs[np.random.default_rng(seed).choice(len(pairs), max_pairs, replace=False)]
    edges = sim.graph.edge_set()
    max_hops, worst_stretch, failures, violations = 0, 1.0, [], 0
    for p, q in pairs.tolist():
        try:
            path = local_route(sim, p, q)
        except ProtocolViolation:
            violations += 1
            continue
        res = check_path(sim.metric, sim.graph, path, sim.s, d_min, edges)
        max_hops = max(max_hops, res["hops"])
        worst_stretch = max(worst_stretch, res["stretch"])
        if not res["ok"]:
            failures.append((p, q))
    return {"routes_checked": len(pairs), "max_hops": max_hops, "max_route_stretch": worst_stretch,
            "route_failures": failures[:20], "protocol_violations": violations,
            "routes_ok": not failures and violations == 0}
