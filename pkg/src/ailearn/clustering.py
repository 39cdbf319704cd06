"""Lloyd's k-means with k-means++ seeding and best-of-restarts selection."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, DataError, ShapeError


@dataclass(frozen=True)
class KMeansParams:
    k: int = 2
    max_iterations: int = 300
    tolerance: float = 1e-6
    restarts: int = 8
    hartigan: bool = True  # single-point transfer refinement after Lloyd

    def validate(self) -> None:
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be >= 1")
        if self.tolerance < 0:
            raise ConfigError("tolerance must be >= 0")
        if self.restarts < 1:
            raise ConfigError("restarts must be >= 1")


@dataclass(frozen=True)
class Clustering:
    centroids: np.ndarray  # (k, d)
    assignments: np.ndarray  # (n,) cluster index per point
    inertia: float

    @property
    def k(self) -> int:
        return len(self.centroids)

    def members(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == j)


# (restart, iteration, inertia) -> None
IterationHook = Callable[[int, int, float], None]


def _sq_distances(x: np.ndarray, c: np.ndarray) -> np.ndarray:
    d = ((x[:, None, :] - c[None, :, :]) ** 2).sum(axis=2)
    return d


def _plusplus(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(x)
    centres = [x[rng.integers(n)]]
    closest = ((x - centres[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = closest.sum()
        if total > 0:
            idx = rng.choice(n, p=closest / total)
        else:
            idx = rng.integers(n)
        centres.append(x[idx])
        closest = np.minimum(closest, ((x - x[idx]) ** 2).sum(axis=1))
    return np.array(centres)


def _repair_empty(x: np.ndarray, centroids: np.ndarray, assign: np.ndarray,
                  dist: np.ndarray) -> None:
    """Give every empty cluster the point farthest from its own centroid.

    Works in place. Moving a point onto a fresh centroid drops its cost to
    zero, so inertia can only go down.
    """
    k = len(centroids)
    for j in range(k):
        counts = np.bincount(assign, minlength=k)
        if counts[j]:
            continue
        own = dist[np.arange(len(x)), assign]
        donors = counts[assign] > 1
        own = np.where(donors, own, -1.0)
        far = int(np.argmax(own))
        centroids[j] = x[far]
        assign[far] = j
        dist[:, j] = ((x - x[far]) ** 2).sum(axis=1)


def _lloyd(x: np.ndarray, centroids: np.ndarray, params: KMeansParams,
           hook: Optional[IterationHook], restart: int) -> tuple[np.ndarray, np.ndarray, float]:
    k = len(centroids)
    dist = _sq_distances(x, centroids)
    assign = np.argmin(dist, axis=1)
    _repair_empty(x, centroids, assign, dist)
    inertia = float(dist[np.arange(len(x)), assign].sum())
    if hook:
        hook(restart, 0, inertia)
    for it in range(1, params.max_iterations + 1):
        new_c = np.array([x[assign == j].mean(axis=0) for j in range(k)])
        new_dist = _sq_distances(x, new_c)
        new_assign = np.argmin(new_dist, axis=1)
        _repair_empty(x, new_c, new_assign, new_dist)
        new_inertia = float(new_dist[np.arange(len(x)), new_assign].sum())
        if new_inertia > inertia:
            # round-off only; keep the previous state so inertia never rises
            break
        change = inertia - new_inertia
        centroids, assign, inertia = new_c, new_assign, new_inertia
        if hook:
            hook(restart, it, inertia)
        if change < params.tolerance:
            break
    if params.hartigan:
        assign = _hartigan(x, assign, k, hook, restart, it)
    # final centroids are the means of the returned assignment
    centroids = np.array([x[assign == j].mean(axis=0) for j in range(k)])
    inertia = float(((x - centroids[assign]) ** 2).sum())
    return centroids, assign, inertia


def _hartigan(x: np.ndarray, assign: np.ndarray, k: int, hook: Optional[IterationHook],
              restart: int, it: int) -> np.ndarray:
    """Move single points between clusters while that lowers the inertia.

    Moving ``x`` from cluster ``a`` (size ``n_a``) to ``b`` changes the
    inertia by ``n_b/(n_b+1)*|x-c_b|^2 - n_a/(n_a-1)*|x-c_a|^2``; Lloyd's
    step ignores the centroid shift and can stop where such a move still
    helps. Every move strictly decreases the inertia.
    """
    assign = assign.copy()
    counts = np.bincount(assign, minlength=k).astype(np.float64)
    sums = np.array([x[assign == j].sum(axis=0) for j in range(k)])
    moved = True
    while moved:
        moved = False
        for i in range(len(x)):
            a = assign[i]
            if counts[a] < 2:
                continue
            cents = sums / counts[:, None]
            d = ((cents - x[i]) ** 2).sum(axis=1)
            gain = counts[a] / (counts[a] - 1) * d[a]
            cost = counts / (counts + 1) * d
            cost[a] = np.inf
            b = int(np.argmin(cost))
            # relative margin keeps round-off from cycling a point back and forth
            if cost[b] < gain * (1 - 1e-12):
                sums[a] -= x[i]
                sums[b] += x[i]
                counts[a] -= 1
                counts[b] += 1
                assign[i] = b
                moved = True
        if moved and hook:
            it += 1
            cents = np.array([x[assign == j].mean(axis=0) for j in range(k)])
            hook(restart, it, float(((x - cents[assign]) ** 2).sum()))
    return assign


def kmeans(points, params: KMeansParams, seed: int,
           on_iteration: Optional[IterationHook] = None) -> Clustering:
    """Cluster ``points`` into ``params.k`` groups.

    Runs ``params.restarts`` independent k-means++ seeded Lloyd runs and keeps
    the lowest inertia (ties go to the earliest restart). Clusters are then
    renumbered by their centroids in lexicographic order, so the result does
    not depend on which restart produced it.

    ``on_iteration`` is called with ``(restart, iteration, inertia)`` after
    every assignment step, which lets callers audit monotonicity.
    """
    params.validate()
    x = np.asarray(points, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError(f"points must be a 2-D array, got shape {x.shape}")
    if len(x) < params.k:
        raise DataError(f"{len(x)} points cannot form {params.k} clusters")

    best = None
    seeds = np.random.SeedSequence(seed).spawn(params.restarts)
    for r, ss in enumerate(seeds):
        rng = np.random.default_rng(ss)
        init = _plusplus(x, params.k, rng)
        result = _lloyd(x, init, params, on_iteration, r)
        if best is None or result[2] < best[2]:
            best = result
    centroids, assign, inertia = best

    order = np.lexsort(centroids.T[::-1])
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    return Clustering(centroids[order], rank[assign], inertia)


def nearest_centroid(centroids, x) -> int:
    c = np.asarray(centroids, dtype=np.float64)
    if c.size == 0:
        raise ConfigError("no centroids given")
    if c.ndim == 1:
        c = c[:, None]
    v = np.asarray(x, dtype=np.float64).reshape(-1)
    if v.shape[0] != c.shape[1]:
        raise ShapeError(f"centroids have dimension {c.shape[1]}, point has {v.shape[0]}")
    return int(np.argmin(((c - v) ** 2).sum(axis=1)))
