"""Finite metric spaces: distances, balls, diameters, aspect ratio, MST.

A :class:`Metric` owns a dense ``n x n`` distance table that every other
module reads from. Euclidean metrics keep their coordinates as well and carry
a KD-tree for range queries; explicit-matrix metrics are scanned linearly.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial import cKDTree

EUCLIDEAN = "euclidean"
MATRIX = "explicit-matrix"


class MetricError(ValueError):
    """Raised for malformed metric input (duplicates, asymmetry, ...)."""


def _pairwise_euclidean(points: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - points[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


@dataclass(frozen=True, eq=False)
class Metric:
    kind: str
    dist: np.ndarray
    points: np.ndarray | None = None
    _tree: cKDTree | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    @property
    def dim_hint(self) -> int | None:
        return None if self.points is None else self.points.shape[1]

    @classmethod
    def from_points(cls, points: Sequence[Sequence[float]] | np.ndarray) -> "Metric":
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise MetricError("points must be a non-empty n x d array")
        if not np.all(np.isfinite(pts)):
            raise MetricError("points must be finite")
        dist = _pairwise_euclidean(pts)
        _check_distinct(dist)
        pts.setflags(write=False)
        dist.setflags(write=False)
        return cls(EUCLIDEAN, dist, pts, cKDTree(pts))

    @classmethod
    def from_matrix(cls, matrix: Sequence[Sequence[float]] | np.ndarray,
                    check_triangle: bool = True) -> "Metric":
        dist = np.array(matrix, dtype=float)
        if dist.ndim != 2 or dist.shape[0] != dist.shape[1] or dist.shape[0] == 0:
            raise MetricError("distance matrix must be square and non-empty")
        if not np.all(np.isfinite(dist)) or np.any(dist < 0):
            raise MetricError("distances must be finite and nonnegative")
        if np.any(np.diag(dist) != 0):
            raise MetricError("distance matrix must have a zero diagonal")
        if not np.array_equal(dist, dist.T):
            raise MetricError("distance matrix must be symmetric")
        _check_distinct(dist)
        if check_triangle:
            bad = triangle_violation(dist)
            if bad is not None:
                i, j, k = bad
                raise MetricError(f"triangle inequality fails: d({i},{j}) > d({i},{k}) + d({k},{j})")
        dist.setflags(write=False)
        return cls(MATRIX, dist)

    def d(self, i: int, j: int) -> float:
        return float(self.dist[i, j])

    def with_point(self, point: Sequence[float] | None = None,
                   row: Sequence[float] | None = None) -> "Metric":
        """Return a new metric with one extra point appended as id ``n``.

        Euclidean metrics take coordinates; matrix metrics take the distance
        row to the existing points.
        """
        if self.kind == EUCLIDEAN:
            if point is None:
                raise MetricError("euclidean metric needs coordinates for a new point")
            pts = np.vstack([self.points, np.asarray(point, dtype=float)[None, :]])
            return Metric.from_points(pts)
        if row is None:
            raise MetricError("matrix metric needs a distance row for a new point")
        r = np.asarray(row, dtype=float)
        if r.shape != (self.n,):
            raise MetricError(f"distance row must have length {self.n}")
        big = np.zeros((self.n + 1, self.n + 1))
        big[: self.n, : self.n] = self.dist
        big[self.n, : self.n] = r
        big[: self.n, self.n] = r
        return Metric.from_matrix(big, check_triangle=False)

    def restrict(self, ids: Sequence[int]) -> "Metric":
        """Sub-metric on ``ids``; new id ``k`` is old id ``ids[k]``."""
        idx = np.asarray(ids, dtype=int)
        if self.kind == EUCLIDEAN:
            return Metric.from_points(self.points[idx])
        sub = self.dist[np.ix_(idx, idx)].copy()
        return Metric.from_matrix(sub, check_triangle=False)


def _check_distinct(dist: np.ndarray) -> None:
    n = dist.shape[0]
    off = dist.copy()
    np.fill_diagonal(off, np.inf)
    if n > 1 and np.min(off) <= 0:
        i, j = np.unravel_index(np.argmin(off), off.shape)
        raise MetricError(f"duplicate points: {i} and {j} are at distance 0")


def triangle_violation(dist: np.ndarray, rtol: float = 1e-12):
    """First ``(i, j, k)`` with ``d(i,j) > d(i,k) + d(k,j)``, or None. O(n^3)."""
    n = dist.shape[0]
    for k in range(n):
        via = dist[:, k][:, None] + dist[k, :][None, :]
        bad = dist > via * (1 + rtol)
        if bad.any():
            i, j = np.argwhere(bad)[0]
            return int(i), int(j), k
    return None


# -- point sets -------------------------------------------------------------

def as_idset(ids: Iterable[int]) -> np.ndarray:
    """Sorted, de-duplicated id array."""
    return np.unique(np.asarray(list(ids) if not isinstance(ids, np.ndarray) else ids, dtype=int))


def min_max_distance(metric: Metric) -> tuple[float, float]:
    if metric.n < 2:
        raise MetricError("need at least two points")
    iu = np.triu_indices(metric.n, 1)
    vals = metric.dist[iu]
    return float(vals.min()), float(vals.max())


def aspect_ratio(metric: Metric) -> float:
    d_min, d_max = min_max_distance(metric)
    return d_max / d_min


def lg_aspect(metric: Metric) -> float:
    """``lg alpha`` clamped below at 1 so it can be used as a normalizer."""
    return max(math.log2(aspect_ratio(metric)), 1.0)


def ball_scan(metric: Metric, center: int, r: float,
              present: np.ndarray | None = None) -> np.ndarray:
    """Closed ball by linear scan; the reference for :func:`ball`."""
    mask = metric.dist[center] <= r
    if present is not None:
        mask &= present
    return np.flatnonzero(mask)


def ball(metric: Metric, center: int, r: float,
         present: np.ndarray | None = None) -> np.ndarray:
    """Ids within distance ``r`` of ``center`` (closed ball, center included)."""
    if r < 0:
        raise ValueError("radius must be nonnegative")
    if metric._tree is None:
        return ball_scan(metric, center, r, present)
    # The tree only proposes candidates; membership is decided on the table.
    slack = r * 1e-9 + 1e-12
    cand = np.asarray(metric._tree.query_ball_point(metric.points[center], r + slack), dtype=int)
    cand = cand[metric.dist[center, cand] <= r]
    if present is not None:
        cand = cand[present[cand]]
    cand.sort()
    return cand


def _nonempty(ids) -> np.ndarray:
    arr = np.asarray(ids, dtype=int)
    if arr.size == 0:
        raise MetricError("point set must be nonempty")
    return arr


def diam(metric: Metric, a) -> float:
    a = _nonempty(a)
    return float(metric.dist[np.ix_(a, a)].max())


def set_distance(metric: Metric, a, b) -> float:
    a, b = _nonempty(a), _nonempty(b)
    return float(metric.dist[np.ix_(a, b)].min())


def is_s_well_separated(metric: Metric, a, b, s: float) -> bool:
    return set_distance(metric, a, b) >= s * max(diam(metric, a), diam(metric, b))


def mst_weight(metric: Metric) -> float:
    """Dense Prim over the complete distance graph, O(n^2)."""
    n = metric.n
    if n <= 1:
        return 0.0
    in_tree = np.zeros(n, dtype=bool)
    best = np.full(n, np.inf)
    best[0] = 0.0
    total = 0.0
    for _ in range(n):
        cand = np.where(in_tree, np.inf, best)
        u = int(np.argmin(cand))
        total += float(cand[u])
        in_tree[u] = True
        best = np.minimum(best, metric.dist[u])
    return total


def shortest_paths(n: int, edges: Iterable[tuple[int, int, float]], source: int) -> list[float]:
    """Single-source Dijkstra over an undirected weighted edge list."""
    adj: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for u, v, w in edges:
        adj[u].append((v, w))
        adj[v].append((u, w))
    out = [math.inf] * n
    out[source] = 0.0
    heap = [(0.0, source)]
    while heap:
        du, u = heapq.heappop(heap)
        if du > out[u]:
            continue
        for v, w in adj[u]:
            nd = du + w
            if nd < out[v]:
                out[v] = nd
                heapq.heappush(heap, (nd, v))
    return out


# -- files ------------------------------------------------------------------

def load_points(path: str | Path) -> Metric:
    """CSV of coordinates, one point per line; ``# dim=<d>`` header optional."""
    dim = None
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            if key.strip() == "dim":
                dim = int(val)
            continue
        rows.append([float(x) for x in line.split(",")])
    if not rows:
        raise MetricError(f"{path}: no points")
    widths = {len(r) for r in rows}
    if len(widths) != 1 or (dim is not None and widths != {dim}):
        raise MetricError(f"{path}: inconsistent dimension {sorted(widths)}")
    return Metric.from_points(rows)


def save_points(path: str | Path, points: np.ndarray) -> None:
    pts = np.asarray(points, dtype=float)
    lines = [f"# dim={pts.shape[1]}"]
    lines += [",".join(repr(float(x)) for x in row) for row in pts]
    Path(path).write_text("\n".join(lines) + "\n")


def load_matrix(path: str | Path, check_triangle: bool = True) -> Metric:
    rows = [[float(x) for x in line.split(",")]
            for line in Path(path).read_text().splitlines()
            if line.strip() and not line.lstrip().startswith("#")]
    return Metric.from_matrix(rows, check_triangle=check_triangle)


def save_matrix(path: str | Path, dist: np.ndarray) -> None:
    Path(path).write_text("\n".join(",".join(repr(float(x)) for x in row) for row in dist) + "\n")
