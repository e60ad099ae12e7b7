"""Density-based grouping of alpha sphere centres.

Labels are integer arrays: cluster ids ``0..k-1`` and ``NOISE`` (-1).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

NOISE = -1
_UNVISITED = -2


class UndefinedScoreError(ValueError):
    """Silhouette needs at least two clusters."""


@dataclass(frozen=True)
class DbscanParams:
    eps: float = 4.5
    min_pts: int = 4

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if int(self.min_pts) != self.min_pts or self.min_pts < 1:
            raise ValueError(f"min_pts must be a positive integer, got {self.min_pts}")


@dataclass(frozen=True)
class ClusterLabeling:
    labels: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=np.int64).reshape(-1))

    @property
    def n_clusters(self) -> int:
        return int(self.labels.max()) + 1 if self.labels.size and self.labels.max() >= 0 else 0

    @property
    def n_noise(self) -> int:
        return int((self.labels == NOISE).sum())

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels[self.labels >= 0], minlength=self.n_clusters)

    def members(self, cluster_id: int) -> np.ndarray:
        return np.flatnonzero(self.labels == cluster_id)

    def __eq__(self, other):
        return isinstance(other, ClusterLabeling) and np.array_equal(self.labels, other.labels)

    __hash__ = None


def _as_points(centers) -> np.ndarray:
    return np.asarray(centers, dtype=float).reshape(-1, 3)


def region_query(points: np.ndarray, eps: float) -> list[np.ndarray]:
    """Indices within ``eps`` (inclusive, self included) of every point, ascending."""
    if len(points) == 0:
        return []
    tree = cKDTree(points)
    # Over-fetch slightly, then apply the exact inclusive test.
    cand = tree.query_ball_point(points, r=eps * (1.0 + 1e-9) + 1e-12, return_sorted=True)
    out = []
    for i, c in enumerate(cand):
        c = np.asarray(c, dtype=np.int64)
        d = np.sqrt(((points[c] - points[i]) ** 2).sum(axis=1))
        out.append(c[d <= eps])
    return out


def dbscan(centers, params: DbscanParams = DbscanParams()) -> ClusterLabeling:
    """DBSCAN over points in input order.

    A point is core when at least ``min_pts`` points (itself included) lie
    within ``eps``.  Clusters are numbered in order of discovery; a border
    point reachable from several clusters stays with the first one.
    """
    pts = _as_points(centers)
    n = len(pts)
    labels = np.full(n, _UNVISITED, dtype=np.int64)
    neighbours = region_query(pts, params.eps)
    core = np.array([len(nb) >= params.min_pts for nb in neighbours], dtype=bool)
    cid = 0
    for i in range(n):
        if labels[i] != _UNVISITED:
            continue
        if not core[i]:
            labels[i] = NOISE
            continue
        labels[i] = cid
        queue = deque(neighbours[i].tolist())
        while queue:
            j = queue.popleft()
            if labels[j] == NOISE:
                labels[j] = cid
                continue
            if labels[j] != _UNVISITED:
                continue
            labels[j] = cid
            if core[j]:
                queue.extend(neighbours[j].tolist())
        cid += 1
    return ClusterLabeling(labels)


def _centroids(pts: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    sums = np.zeros((k, 3))
    np.add.at(sums, labels[labels >= 0], pts[labels >= 0])
    counts = np.bincount(labels[labels >= 0], minlength=k)
    return sums / np.maximum(counts, 1)[:, None]


def merge_small_clusters(labeling: ClusterLabeling, centers, min_size: int = 3,
                         merge_dist: float = 9.0) -> ClusterLabeling:
    """Fold clusters smaller than ``min_size`` into the nearest large cluster.

    A small cluster joins the cluster of size >= ``min_size`` whose centroid
    is closest to its own, if that distance is at most ``merge_dist``;
    otherwise its points become noise.  Centroids are those of the input
    labeling.  Surviving ids are renumbered densely in their original order.
    """
    pts = _as_points(centers)
    labels = labeling.labels.copy()
    k = labeling.n_clusters
    if k == 0:
        return ClusterLabeling(labels)
    sizes = labeling.sizes()
    cents = _centroids(pts, labels, k)
    large = np.flatnonzero(sizes >= min_size)
    small = sorted(np.flatnonzero(sizes < min_size).tolist(), key=lambda c: (sizes[c], c))
    target = np.arange(k)
    for c in small:
        target[c] = NOISE
        if large.size:
            d = np.linalg.norm(cents[large] - cents[c], axis=1)
            best = int(np.argmin(d))
            if d[best] <= merge_dist:
                target[c] = large[best]
    mask = labels >= 0
    labels[mask] = target[labels[mask]]
    kept = np.unique(labels[labels >= 0])
    remap = np.full(k, NOISE, dtype=np.int64)
    remap[kept] = np.arange(len(kept))
    labels[labels >= 0] = remap[labels[labels >= 0]]
    return ClusterLabeling(labels)


def silhouette_samples(centers, labeling: ClusterLabeling) -> np.ndarray:
    """Per-point silhouette values for non-noise points (in index order)."""
    pts = _as_points(centers)
    labels = labeling.labels
    keep = np.flatnonzero(labels >= 0)
    x = pts[keep]
    lab = labels[keep]
    ids, lab = np.unique(lab, return_inverse=True)
    k = len(ids)
    if k < 2:
        raise UndefinedScoreError(f"silhouette needs at least 2 clusters, got {k}")
    counts = np.bincount(lab, minlength=k)
    # Sum of distances from each point to each cluster, in row blocks.
    sums = np.zeros((len(x), k))
    block = max(1, 2_000_000 // max(len(x), 1))
    for start in range(0, len(x), block):
        stop = min(start + block, len(x))
        d = np.sqrt(((x[start:stop, None, :] - x[None, :, :]) ** 2).sum(axis=2))
        for c in range(k):
            sums[start:stop, c] = d[:, lab == c].sum(axis=1)
    rows = np.arange(len(x))
    own = counts[lab]
    a = np.where(own > 1, sums[rows, lab] / np.maximum(own - 1, 1), 0.0)
    mean_other = sums / counts[None, :]
    mean_other[rows, lab] = np.inf
    b = mean_other.min(axis=1)
    denom = np.maximum(a, b)
    s = np.where(denom > 0, (b - a) / np.where(denom > 0, denom, 1.0), 0.0)
    s[own == 1] = 0.0
    return s


def silhouette_score(centers, labeling: ClusterLabeling) -> float:
    """Mean silhouette over non-noise points; singleton clusters score 0."""
    return float(silhouette_samples(centers, labeling).mean())
