"""Greedy well-separated pair decomposition and its verifier."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .metric import Metric, ball, diam, set_distance
from .orders import PairOrder


def check_s(s: float) -> float:
    s = float(s)
    if not s > 1:
        raise ValueError(f"separation parameter must satisfy s > 1, got {s}")
    return s


def ball_radius(length: float, s: float) -> float:
    return length / (2 * s + 2)


@dataclass(frozen=True, eq=False)
class WspPair:
    center_a: int
    center_b: int
    radius: float
    members_a: np.ndarray
    members_b: np.ndarray
    seq: int

    def size(self) -> int:
        return len(self.members_a) + len(self.members_b)

    def to_json(self) -> dict:
        return {"seq": self.seq, "a": self.center_a, "b": self.center_b, "r": self.radius,
                "A": self.members_a.tolist(), "B": self.members_b.tolist()}


@dataclass(eq=False)
class Wspd:
    s: float
    pairs: list[WspPair] = field(default_factory=list)
    order: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.pairs)

    def total_size(self) -> int:
        return sum(p.size() for p in self.pairs)

    def without(self, seq: int) -> "Wspd":
        return Wspd(self.s, [p for p in self.pairs if p.seq != seq], dict(self.order))

    def to_json(self) -> dict:
        return {"s": self.s, "order": self.order, "pairs": [p.to_json() for p in self.pairs]}

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1) + "\n")

    @classmethod
    def from_json(cls, data: dict) -> "Wspd":
        pairs = [WspPair(int(p["a"]), int(p["b"]), float(p["r"]),
                         np.asarray(p["A"], dtype=int), np.asarray(p["B"], dtype=int), int(p["seq"]))
                 for p in data["pairs"]]
        return cls(float(data["s"]), pairs, data.get("order", {}))


def pair_covers(pair: WspPair, x: int, y: int) -> bool:
    """Orientation-free coverage test."""
    in_a = np.isin([x, y], pair.members_a)
    in_b = np.isin([x, y], pair.members_b)
    return bool((in_a[0] and in_b[1]) or (in_b[0] and in_a[1]))


def make_pair(metric: Metric, p: int, q: int, s: float, seq: int,
              present: np.ndarray | None = None) -> WspPair:
    r = ball_radius(metric.d(p, q), s)
    return WspPair(p, q, r, ball(metric, p, r, present), ball(metric, q, r, present), seq)


def build_greedy_wspd(metric: Metric, s: float, order: PairOrder | None = None) -> Wspd:
    """Scan pairs in ``order``; every still-uncovered pair emits its ball pair."""
    s = check_s(s)
    if metric.n < 2:
        raise ValueError("need at least two points")
    order = order or PairOrder()
    n = metric.n
    covered = np.zeros((n, n), dtype=bool)
    np.fill_diagonal(covered, True)
    remaining = n * (n - 1) // 2
    pairs: list[WspPair] = []
    for p, q in order.pairs_for(metric):
        if covered[p, q]:
            continue
        pair = make_pair(metric, p, q, s, len(pairs))
        pairs.append(pair)
        a, b = pair.members_a, pair.members_b
        block = covered[np.ix_(a, b)]
        # balls are disjoint, so no diagonal entry is touched here
        remaining -= int(block.size - block.sum())
        covered[np.ix_(a, b)] = True
        covered[np.ix_(b, a)] = True
        if remaining == 0:
            break
    return Wspd(s, pairs, order.describe())


@dataclass
class WspdReport:
    pair_count: int
    total_size: int
    not_separated: list[int]
    uncovered: list[tuple[int, int]]
    bad_members: list[int]

    @property
    def ok(self) -> bool:
        return not (self.not_separated or self.uncovered or self.bad_members)

    def to_json(self) -> dict:
        return {"pairs": self.pair_count, "total_size": self.total_size,
                "not_separated": self.not_separated,
                "uncovered": [list(p) for p in self.uncovered],
                "bad_members": self.bad_members, "ok": self.ok}


def verify_wspd(metric: Metric, w: Wspd, ids: np.ndarray | None = None) -> WspdReport:
    """Check separation of every pair and coverage of every point pair.

    ``ids`` restricts the coverage requirement to a subset of the points.
    """
    n = metric.n
    not_sep, bad = [], []
    cov = np.zeros((n, n), dtype=bool)
    for pr in w.pairs:
        a, b = pr.members_a, pr.members_b
        if a.size == 0 or b.size == 0:
            not_sep.append(pr.seq)
            continue
        if pr.center_a not in a or pr.center_b not in b:
            bad.append(pr.seq)
        if set_distance(metric, a, b) < w.s * max(diam(metric, a), diam(metric, b)):
            not_sep.append(pr.seq)
        cov[np.ix_(a, b)] = True
        cov[np.ix_(b, a)] = True
    sub = np.arange(n) if ids is None else np.asarray(ids, dtype=int)
    c = cov[np.ix_(sub, sub)]
    i, j = np.nonzero(~c)
    keep = i < j
    uncovered = [(int(sub[x]), int(sub[y])) for x, y in zip(i[keep], j[keep])]
    return WspdReport(len(w.pairs), w.total_size(), not_sep, uncovered, bad)
