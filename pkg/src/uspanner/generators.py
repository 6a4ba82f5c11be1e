"""Deterministic instance generators."""
from __future__ import annotations

import numpy as np
from scipy.sparse.csgraph import connected_components, shortest_path

from .metric import Metric


def uniform(n: int, dim: int = 2, seed: int = 0) -> np.ndarray:
    _check(n, dim)
    return np.random.default_rng(seed).random((n, dim))


def clustered(n: int, dim: int = 2, seed: int = 0, k: int = 2, sep: float = 100.0,
              diameter: float = 1.0) -> np.ndarray:
    """``k`` clusters of the given diameter, centers ``sep`` apart on the first axis."""
    _check(n, dim)
    if k < 1 or k > n:
        raise ValueError("cluster count must be in [1, n]")
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % k
    # uniform in a ball of radius diameter/2 around each center
    direction = rng.normal(size=(n, dim))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    radius = diameter / 2 * rng.random(n) ** (1 / dim)
    pts = direction * radius[:, None]
    pts[:, 0] += labels * sep
    return pts


def grid(n: int, dim: int = 2) -> np.ndarray:
    """First ``n`` points of the smallest integer grid with at least ``n`` points."""
    _check(n, dim)
    side = int(np.ceil(round(n ** (1 / dim), 9)))
    axes = np.meshgrid(*[np.arange(side, dtype=float)] * dim, indexing="ij")
    return np.column_stack([a.ravel() for a in axes])[:n]


def geometric_graph_metric(n: int, seed: int = 0, radius: float | None = None) -> Metric:
    """Shortest-path metric of a random geometric graph in the unit square.

    The connection radius grows until the graph is connected.
    """
    pts = uniform(n, 2, seed)
    diff = pts[:, None, :] - pts[None, :, :]
    eu = np.sqrt((diff ** 2).sum(-1))
    radius = radius or 1.5 * np.sqrt(np.log(n) / (np.pi * n))
    while True:
        w = np.where(eu <= radius, eu, 0.0)
        if connected_components(w, directed=False)[0] == 1:
            break
        radius *= 1.2
    d = shortest_path(w, directed=False)
    d = np.minimum(d, d.T)
    np.fill_diagonal(d, 0.0)
    return Metric.from_matrix(d)


def _check(n: int, dim: int) -> None:
    if n < 1:
        raise ValueError(f"point count must be positive, got {n}")
    if dim < 1:
        raise ValueError(f"dimension must be positive, got {dim}")


def make_points(dist: str, n: int, dim: int, seed: int) -> np.ndarray:
    if dist == "uniform":
        return uniform(n, dim, seed)
    if dist == "clustered":
        return clustered(n, dim, seed)
    if dist == "grid":
        return grid(n, dim)
    raise ValueError(f"unknown distribution {dist!r}")
