"""Pair-selection orders.

The construction is defined for an arbitrary processing order of the point
pairs, so the order is an explicit, injectable value.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .metric import Metric

STRATEGIES = (
    "random",
    "lexicographic",
    "reverse-lexicographic",
    "decreasing-distance",
    "increasing-distance",
    "explicit",
)


@dataclass(frozen=True)
class PairOrder:
    strategy: str = "random"
    seed: int = 0
    pairs: tuple[tuple[int, int], ...] = field(default=(), repr=False)

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown order strategy {self.strategy!r}; choose from {STRATEGIES}")

    @classmethod
    def explicit(cls, pairs) -> "PairOrder":
        return cls("explicit", 0, tuple((int(a), int(b)) for a, b in pairs))

    def describe(self) -> dict:
        out = {"strategy": self.strategy, "seed": self.seed}
        if self.strategy == "explicit":
            out["pairs"] = [list(p) for p in self.pairs]
        return out

    def arrays(self, metric: Metric) -> tuple[np.ndarray, np.ndarray]:
        """Two aligned id arrays; position k is the k-th pair to process."""
        n = metric.n
        if self.strategy == "explicit":
            arr = np.asarray(self.pairs, dtype=int).reshape(-1, 2)
            _check_explicit(arr, n)
            return arr[:, 0].copy(), arr[:, 1].copy()
        first, second = np.triu_indices(n, 1)
        if self.strategy == "lexicographic":
            return first, second
        if self.strategy == "reverse-lexicographic":
            return first[::-1].copy(), second[::-1].copy()
        if self.strategy == "random":
            perm = np.random.default_rng(self.seed).permutation(first.size)
            return first[perm], second[perm]
        lengths = metric.dist[first, second]
        key = lengths if self.strategy == "increasing-distance" else -lengths
        perm = np.lexsort((second, first, key))
        return first[perm], second[perm]

    def pairs_for(self, metric: Metric):
        a, b = self.arrays(metric)
        return zip(a.tolist(), b.tolist())


def _check_explicit(arr: np.ndarray, n: int) -> None:
    if arr.size and (arr.min() < 0 or arr.max() >= n):
        raise ValueError("explicit order refers to ids outside the metric")
    if np.any(arr[:, 0] == arr[:, 1]):
        raise ValueError("explicit order contains a self pair")
    lo = np.minimum(arr[:, 0], arr[:, 1])
    hi = np.maximum(arr[:, 0], arr[:, 1])
    keys = lo.astype(np.int64) * n + hi
    if np.unique(keys).size != keys.size or keys.size != n * (n - 1) // 2:
        raise ValueError("explicit order must list every unordered pair exactly once")

