"""Two-team split of helmet colors and removal of stray detections."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import as_points, pairwise_distances


class DegenerateClusteringError(ValueError):
    pass


@dataclass
class ClusterModel:
    centroids: np.ndarray  # (2, d)
    labels: np.ndarray  # (n,) in {0, 1}
    inertia: float
    inertia_history: list[float] = field(default_factory=list)

    def predict(self, features) -> np.ndarray:
        f = np.atleast_2d(np.asarray(features, dtype=float))
        d = ((f[:, None, :] - self.centroids[None, :, :]) ** 2).sum(axis=2)
        return np.argmin(d, axis=1)

    def __eq__(self, other):
        return (
            isinstance(other, ClusterModel)
            and np.array_equal(self.centroids, other.centroids)
            and np.array_equal(self.labels, other.labels)
            and self.inertia == other.inertia
        )


def _inertia(x, centroids, labels) -> float:
    return float(((x - centroids[labels]) ** 2).sum())


def kmeans2(features, seed: int = 0, max_iters: int = 100) -> ClusterModel:
    """Lloyd's algorithm with k-means++ seeding for exactly two clusters.

    Clusters are reordered so that cluster 0 has the lexicographically
    smaller centroid.
    """
    x = np.asarray(features, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if len(x) < 2:
        raise ValueError("kmeans2 needs at least 2 features")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    if np.all(x == x[0]):
        raise DegenerateClusteringError("degenerate clustering: all features are identical")

    rng = np.random.default_rng(seed)
    first = x[rng.integers(len(x))]
    d2 = ((x - first) ** 2).sum(axis=1)
    second = x[rng.choice(len(x), p=d2 / d2.sum())]
    centroids = np.vstack([first, second])

    labels = np.argmin(((x[:, None, :] - centroids[None]) ** 2).sum(axis=2), axis=1)
    history = [_inertia(x, centroids, labels)]
    for _ in range(max_iters):
        new_c = centroids.copy()
        for k in range(2):
            members = x[labels == k]
            if len(members):
                new_c[k] = members.mean(axis=0)
            else:
                # refill an empty cluster with the point worst served by the other
                far = int(np.argmax(((x - centroids[1 - k]) ** 2).sum(axis=1)))
                new_c[k] = x[far]
        new_labels = np.argmin(((x[:, None, :] - new_c[None]) ** 2).sum(axis=2), axis=1)
        history.append(_inertia(x, new_c, new_labels))
        converged = np.array_equal(new_labels, labels) and np.allclose(new_c, centroids)
        centroids, labels = new_c, new_labels
        if converged:
            break

    if tuple(centroids[1]) < tuple(centroids[0]):
        centroids = centroids[::-1].copy()
        labels = 1 - labels
    return ClusterModel(centroids, labels.astype(int), history[-1], history)


def _bbox_diagonal(p: np.ndarray) -> float:
    span = p.max(axis=0) - p.min(axis=0)
    return float(np.hypot(span[0], span[1]))


def disable_outliers(points, outlier_ratio: float = 1.5, main_radius: float = 1.5) -> list[bool]:
    """Keep flags for a detection cloud, dropping points that are not part of it.

    First a single outlier is tried: if dropping one point shrinks the
    bounding-box diagonal by ``outlier_ratio`` or more, only that point goes.
    Otherwise the main cluster is grown around the left/right/top/bottom
    border points: points farther than ``main_radius`` times the median
    pairwise distance from the border points' centroid are dropped, and the
    border points are re-picked among the survivors until nothing changes.
    At least two points are always kept.
    """
    p = as_points(points)
    n = len(p)
    if n < 3:
        raise ValueError("disable_outliers needs at least 3 points")
    keep = np.ones(n, dtype=bool)

    full = _bbox_diagonal(p)
    if full > 0:
        shrunk = np.array([_bbox_diagonal(np.delete(p, i, axis=0)) for i in range(n)])
        ratio = full / np.maximum(shrunk, 1e-12)
        best = int(np.argmax(ratio))
        if ratio[best] >= outlier_ratio:
            keep[best] = False
            return keep.tolist()

    d = pairwise_distances(p, p)[np.triu_indices(n, 1)]
    radius = main_radius * float(np.median(d))
    center = np.median(p, axis=0)
    main = np.linalg.norm(p - center, axis=1) <= radius
    for _ in range(20):
        if main.sum() < 2:
            return np.ones(n, dtype=bool).tolist()
        sub = p[main]
        border = np.unique(
            np.array([sub[np.argmin(sub[:, 0])], sub[np.argmax(sub[:, 0])],
                      sub[np.argmin(sub[:, 1])], sub[np.argmax(sub[:, 1])]]),
            axis=0,
        )
        center = border.mean(axis=0)
        nxt = np.linalg.norm(p - center, axis=1) <= radius
        if np.array_equal(nxt, main):
            break
        main = nxt
    if main.sum() < 2:
        return np.ones(n, dtype=bool).tolist()
    return main.tolist()


def team_of_tracks(track_colors: dict, seed: int = 0) -> tuple[dict, ClusterModel]:
    """Cluster per-track mean colors; returns ``{track_id: cluster}`` and the model."""
    ids = sorted(track_colors)
    model = kmeans2([track_colors[i] for i in ids], seed=seed)
    return {tid: int(lbl) for tid, lbl in zip(ids, model.labels)}, model
