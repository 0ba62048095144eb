"""k-means with k-means++ seeding and restarts.

Stands in for the "(1+eps)-approximate" k-means step: each restart is
seeded by k-means++ (an O(log k) approximation in expectation) and refined
by Lloyd iterations; the best objective over restarts wins.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._rng import substream


@dataclass(frozen=True)
class KMeansConfig:
    k: int
    restarts: int = 20
    max_iters: int = 300
    tol: float = 1e-9
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be positive")
        if self.restarts < 1:
            raise ValueError("restarts must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")


def _sq_dists(points, centers):
    d = (
        np.sum(points * points, axis=1)[:, None]
        - 2.0 * points @ centers.T
        + np.sum(centers * centers, axis=1)[None, :]
    )
    return np.maximum(d, 0.0)


def kmeans_pp_init(points, k: int, rng: np.random.Generator) -> np.ndarray:
    m = points.shape[0]
    chosen = [int(rng.integers(m))]
    closest = _sq_dists(points, points[chosen]).ravel()
    for _ in range(1, k):
        total = closest.sum()
        if total > 0:
            idx = int(rng.choice(m, p=closest / total))
        else:
            # all points coincide with a center already; take any unused index
            unused = np.setdiff1d(np.arange(m), chosen)
            idx = int(rng.choice(unused))
        chosen.append(idx)
        closest = np.minimum(closest, _sq_dists(points, points[[idx]]).ravel())
    return points[chosen].copy()


def _assign(points, centers):
    d = _sq_dists(points, centers)
    # argmin returns the first minimum, so ties go to the lowest-index center
    labels = np.argmin(d, axis=1)
    return labels, d[np.arange(points.shape[0]), labels]


def lloyd(points, centers, max_iters: int = 300, tol: float = 1e-9):
    """Lloyd iterations from ``centers``; returns ``(labels, centers, history)``.

    ``history`` holds the objective after each assignment step. A cluster
    that empties is re-seeded at the point farthest from its center.
    """
    points = np.asarray(points, dtype=float)
    centers = np.array(centers, dtype=float)
    k = centers.shape[0]
    labels, d = _assign(points, centers)
    history = [float(d.sum())]
    for _ in range(max_iters):
        counts = np.bincount(labels, minlength=k)
        for c in np.flatnonzero(counts == 0):
            far = int(np.argmax(d))
            labels[far] = c
            d[far] = 0.0
            counts = np.bincount(labels, minlength=k)
        for c in range(k):
            centers[c] = points[labels == c].mean(axis=0)
        new_labels, d = _assign(points, centers)
        obj = float(d.sum())
        prev = history[-1]
        history.append(obj)
        if np.array_equal(new_labels, labels) or prev - obj <= tol * prev:
            labels = new_labels
            break
        labels = new_labels
    return labels, centers, history


def _restart(points, cfg, r):
    rng = substream(cfg.seed, r)
    labels, _, history = lloyd(points, kmeans_pp_init(points, cfg.k, rng), cfg.max_iters, cfg.tol)
    return labels, history[-1]


def kmeans_cluster(points, cfg: KMeansConfig):
    """Cluster the rows of ``points``; returns ``(labels, objective)``."""
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    m = points.shape[0]
    if m < cfg.k:
        raise ValueError(f"cannot form {cfg.k} clusters from {m} points")
    if not np.all(np.isfinite(points)):
        raise ValueError("points contain non-finite coordinates")
    best_labels, best_obj = None, np.inf
    for r in range(cfg.restarts):
        labels, obj = _restart(points, cfg, r)
        labels, obj = _fill_empty(points, labels, cfg.k)
        # strict comparison keeps the lowest restart index on ties
        if obj < best_obj:
            best_labels, best_obj = labels, obj
    return best_labels, float(best_obj)


def _fill_empty(points, labels, k):
    labels = labels.copy()
    counts = np.bincount(labels, minlength=k)
    while np.any(counts == 0):
        centers = np.array([points[labels == c].mean(axis=0) if counts[c] else points[0] for c in range(k)])
        d = np.sum((points - centers[labels]) ** 2, axis=1)
        # only move points whose cluster keeps at least one other member
        d[counts[labels] < 2] = -1.0
        labels[int(np.argmax(d))] = int(np.flatnonzero(counts == 0)[0])
        counts = np.bincount(labels, minlength=k)
    return labels, objective(points, labels)


def objective(points, labels) -> float:
    points = np.asarray(points, dtype=float)
    total = 0.0
    for c in np.unique(labels):
        block = points[labels == c]
        total += float(np.sum((block - block.mean(axis=0)) ** 2))
    return total
