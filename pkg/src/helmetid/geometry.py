"""Point-set registration, shape contexts, homographies and box overlap.

Point clouds are ``(N, 2)`` float arrays throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .core import BoundingBox


class DegenerateGeometryError(ValueError):
    """Raised when a fit is rank deficient (too few or coincident points)."""


class PointAtInfinityError(ValueError):
    pass


def as_points(pts) -> np.ndarray:
    arr = np.asarray(pts, dtype=float)
    if arr.size == 0:
        return arr.reshape(0, 2)
    arr = arr.reshape(-1, 2)
    if not np.all(np.isfinite(arr)):
        raise ValueError("points must be finite")
    return arr


@dataclass(frozen=True)
class SimilarityTransform:
    """``p -> scale * R(rotation) @ p + translation``."""

    scale: float = 1.0
    rotation: float = 0.0
    tx: float = 0.0
    ty: float = 0.0

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")

    @classmethod
    def identity(cls) -> "SimilarityTransform":
        return cls()

    @property
    def translation(self) -> tuple[float, float]:
        return (self.tx, self.ty)

    def matrix(self) -> np.ndarray:
        c = self.scale * math.cos(self.rotation)
        s = self.scale * math.sin(self.rotation)
        return np.array([[c, -s, self.tx], [s, c, self.ty], [0.0, 0.0, 1.0]])

    def apply(self, pts) -> np.ndarray:
        p = as_points(pts)
        m = self.matrix()
        return p @ m[:2, :2].T + m[:2, 2]

    def inverse(self) -> "SimilarityTransform":
        inv_scale = 1.0 / self.scale
        c, s = math.cos(-self.rotation), math.sin(-self.rotation)
        tx = -inv_scale * (c * self.tx - s * self.ty)
        ty = -inv_scale * (s * self.tx + c * self.ty)
        return SimilarityTransform(inv_scale, -self.rotation, tx, ty)

    def compose(self, first: "SimilarityTransform") -> "SimilarityTransform":
        """The transform applying ``first`` and then ``self``."""
        m = self.matrix() @ first.matrix()
        scale = math.hypot(m[0, 0], m[1, 0])
        return SimilarityTransform(scale, math.atan2(m[1, 0], m[0, 0]), m[0, 2], m[1, 2])


def fit_similarity(src, dst) -> tuple[SimilarityTransform, float]:
    """Closed-form least-squares similarity mapping ``src`` onto ``dst``.

    Returns the transform and the mean distance between the mapped source
    points and their destinations.
    """
    a, b = as_points(src), as_points(dst)
    if len(a) != len(b):
        raise ValueError(f"point counts differ: {len(a)} vs {len(b)}")
    if len(a) < 2:
        raise DegenerateGeometryError("need at least 2 correspondences")
    za = a[:, 0] + 1j * a[:, 1]
    zb = b[:, 0] + 1j * b[:, 1]
    ma, mb = za.mean(), zb.mean()
    ca, cb = za - ma, zb - mb
    denom = float(np.sum(np.abs(ca) ** 2))
    spread = max(float(np.abs(za).max()), 1.0)
    if denom <= (1e-12 * spread) ** 2:
        raise DegenerateGeometryError("source points are coincident")
    k = complex(np.sum(np.conj(ca) * cb)) / denom
    if abs(k) == 0.0:
        raise DegenerateGeometryError("destination points are coincident")
    t = mb - k * ma
    transform = SimilarityTransform(abs(k), math.atan2(k.imag, k.real), t.real, t.imag)
    residual = float(np.mean(np.linalg.norm(transform.apply(a) - b, axis=1)))
    return transform, residual


def pairwise_distances(a, b) -> np.ndarray:
    a, b = as_points(a), as_points(b)
    return np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2))


class ICPResult(NamedTuple):
    transform: SimilarityTransform
    residual: float
    correspondences: np.ndarray  # correspondences[i] = target index for source i
    iterations: int
    degenerate: bool
    residuals: list


def icp_register(
    source,
    target,
    init: Optional[SimilarityTransform] = None,
    max_iters: int = 50,
    tol: float = 1e-6,
) -> ICPResult:
    """Register ``source`` onto ``target`` with a similarity transform.

    Each source point is paired with its nearest target point under the
    current transform, then the transform is refit on those pairs. A refit is
    only accepted when it lowers the mean pair distance, so the residual
    sequence never increases; iteration stops once the gain drops below
    ``tol``.
    """
    src, tgt = as_points(source), as_points(target)
    if len(src) < 2 or len(tgt) < 2:
        raise DegenerateGeometryError("icp needs at least 2 points in each cloud")
    if max_iters < 1 or not tol > 0:
        raise ValueError("max_iters must be >= 1 and tol > 0")
    current = init or SimilarityTransform.identity()

    def nearest(t: SimilarityTransform):
        d = pairwise_distances(t.apply(src), tgt)
        idx = np.argmin(d, axis=1)
        return idx, float(d[np.arange(len(src)), idx].mean())

    corr, residual = nearest(current)
    history = [residual]
    degenerate = False
    it = 0
    while it < max_iters:
        it += 1
        try:
            cand, _ = fit_similarity(src, tgt[corr])
        except (DegenerateGeometryError, ValueError):
            degenerate = True
            break
        cand_corr, cand_res = nearest(cand)
        if cand_res > residual:
            break
        gain = residual - cand_res
        current, corr, residual = cand, cand_corr, cand_res
        history.append(residual)
        if gain < tol:
            break
    return ICPResult(current, residual, corr, it, degenerate, history)


def normalize_axes(pts) -> tuple[np.ndarray, tuple[np.ndarray, np.ndarray]]:
    """Zero-mean, unit-std per axis. Returns the normalized cloud and (mean, std)."""
    p = as_points(pts)
    mean = p.mean(axis=0)
    std = p.std(axis=0)
    std = np.where(std > 1e-12, std, 1.0)
    return (p - mean) / std, (mean, std)


@dataclass(frozen=True)
class ShapeContext:
    histogram: np.ndarray
    n_radial: int
    n_angular: int

    @property
    def total(self) -> float:
        return float(self.histogram.sum())


def shape_context(
    points,
    index: int,
    n_radial: int = 5,
    n_angular: int = 12,
    r_min: Optional[float] = None,
    r_max: Optional[float] = None,
) -> ShapeContext:
    """Log-polar histogram of every other point around ``points[index]``.

    Radial edges are geometric between ``r_min`` and ``r_max``; points closer
    than ``r_min`` fall into the innermost ring and points beyond ``r_max``
    into the outermost one. When the radii are omitted they default to
    0.125x and 2x the median pairwise distance.
    """
    p = as_points(points)
    if len(p) < 2:
        raise DegenerateGeometryError("shape context needs at least 2 points")
    if not 0 <= index < len(p):
        raise IndexError(f"index {index} out of range for {len(p)} points")
    if r_min is None or r_max is None:
        r_min, r_max = default_radii(p)
    if not 0 < r_min < r_max:
        raise ValueError(f"need 0 < r_min < r_max, got {r_min}, {r_max}")
    hist = np.zeros((n_radial, n_angular))
    rel = np.delete(p, index, axis=0) - p[index]
    r = np.hypot(rel[:, 0], rel[:, 1])
    theta = np.mod(np.arctan2(rel[:, 1], rel[:, 0]), 2 * np.pi)
    rb = _radial_bins(r, r_min, r_max, n_radial)
    ab = np.minimum((theta / (2 * np.pi / n_angular)).astype(int), n_angular - 1)
    np.add.at(hist, (rb, ab), 1.0)
    return ShapeContext(hist, n_radial, n_angular)


def _radial_bins(r, r_min, r_max, n_radial):
    with np.errstate(divide="ignore"):
        frac = np.log(np.maximum(r, 1e-300) / r_min) / math.log(r_max / r_min)
    return np.clip(np.floor(frac * n_radial).astype(int), 0, n_radial - 1)


def default_radii(pts, inner: float = 0.125, outer: float = 2.0) -> tuple[float, float]:
    p = as_points(pts)
    d = pairwise_distances(p, p)[np.triu_indices(len(p), 1)]
    med = float(np.median(d)) if d.size else 1.0
    if med <= 0:
        med = 1.0
    return inner * med, outer * med


def shape_contexts(points, n_radial: int = 5, n_angular: int = 12, inner: float = 0.125, outer: float = 2.0):
    """Shape contexts for every point, sharing radii derived from the cloud."""
    p = as_points(points)
    r_min, r_max = default_radii(p, inner, outer)
    return [shape_context(p, i, n_radial, n_angular, r_min, r_max) for i in range(len(p))]


def cosine_cost_matrix(a: Sequence[ShapeContext], b: Sequence[ShapeContext]) -> np.ndarray:
    """``1 - cosine similarity`` between every pair of descriptors."""
    if not a or not b:
        return np.zeros((len(a), len(b)))
    shape = (a[0].n_radial, a[0].n_angular)
    for group in (a, b):
        for sc in group:
            if (sc.n_radial, sc.n_angular) != shape:
                raise ValueError("shape contexts must share bin layout")
    fa = np.array([sc.histogram.ravel() for sc in a])
    fb = np.array([sc.histogram.ravel() for sc in b])
    na = np.linalg.norm(fa, axis=1)
    nb = np.linalg.norm(fb, axis=1)
    for name, norms in (("a", na), ("b", nb)):
        bad = np.flatnonzero(norms == 0)
        if bad.size:
            raise ValueError(f"descriptor {name}[{int(bad[0])}] has zero norm")
    sim = (fa @ fb.T) / np.outer(na, nb)
    return np.clip(1.0 - sim, 0.0, 2.0)


class Homography:
    """3x3 projective map, stored with unit Frobenius norm.

    The sign is fixed so the bottom-right entry is positive when nonzero.
    """

    __slots__ = ("h",)

    def __init__(self, h):
        m = np.array(h, dtype=float).reshape(3, 3)
        if not np.all(np.isfinite(m)):
            raise ValueError("homography entries must be finite")
        s = np.linalg.svd(m, compute_uv=False)
        if s[0] == 0 or s[-1] / s[0] < 1e-14:
            raise DegenerateGeometryError("homography is singular")
        m = m / np.linalg.norm(m)
        if m[2, 2] < 0 or (m[2, 2] == 0 and m.ravel()[np.flatnonzero(m)[0]] < 0):
            m = -m
        self.h = m

    @classmethod
    def identity(cls) -> "Homography":
        return cls(np.eye(3))

    @classmethod
    def from_similarity(cls, t: SimilarityTransform) -> "Homography":
        return cls(t.matrix())

    def inverse(self) -> "Homography":
        return Homography(np.linalg.inv(self.h))

    def compose(self, first) -> "Homography":
        """Apply ``first`` (Homography or 3x3 array) and then ``self``."""
        other = first.h if isinstance(first, Homography) else np.asarray(first, dtype=float)
        return Homography(self.h @ other)

    def project(self, pts) -> np.ndarray:
        p = as_points(pts)
        hom = np.hstack([p, np.ones((len(p), 1))]) @ self.h.T
        w = hom[:, 2]
        if np.any(np.abs(w) < 1e-12):
            raise PointAtInfinityError("a point maps to infinity")
        return hom[:, :2] / w[:, None]

    def __eq__(self, other):
        return isinstance(other, Homography) and np.array_equal(self.h, other.h)

    def __repr__(self):
        return f"Homography({self.h.tolist()!r})"


def apply_homography(h, p) -> np.ndarray:
    """Map one point through ``h`` (a Homography or raw 3x3 array)."""
    m = h.h if isinstance(h, Homography) else np.asarray(h, dtype=float)
    x, y = np.asarray(p, dtype=float).reshape(2)
    w = m[2, 0] * x + m[2, 1] * y + m[2, 2]
    if abs(w) < 1e-12:
        raise PointAtInfinityError(f"point ({x}, {y}) maps to infinity")
    return np.array([(m[0, 0] * x + m[0, 1] * y + m[0, 2]) / w, (m[1, 0] * x + m[1, 1] * y + m[1, 2]) / w])


def _hartley(p: np.ndarray) -> np.ndarray:
    c = p.mean(axis=0)
    d = np.mean(np.linalg.norm(p - c, axis=1))
    if d <= 0:
        raise DegenerateGeometryError("points are coincident")
    s = math.sqrt(2.0) / d
    return np.array([[s, 0.0, -s * c[0]], [0.0, s, -s * c[1]], [0.0, 0.0, 1.0]])


def estimate_homography(src, dst) -> Homography:
    """Normalized DLT: least-squares homography mapping ``src`` onto ``dst``."""
    a, b = as_points(src), as_points(dst)
    if len(a) != len(b):
        raise ValueError(f"point counts differ: {len(a)} vs {len(b)}")
    if len(a) < 4:
        raise DegenerateGeometryError(f"need at least 4 correspondences, got {len(a)}")
    ta, tb = _hartley(a), _hartley(b)
    na = np.hstack([a, np.ones((len(a), 1))]) @ ta.T
    nb = np.hstack([b, np.ones((len(b), 1))]) @ tb.T
    rows = []
    for (x, y, _), (u, v, _) in zip(na, nb):
        rows.append([-x, -y, -1.0, 0.0, 0.0, 0.0, u * x, u * y, u])
        rows.append([0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v])
    A = np.array(rows)
    _, s, vt = np.linalg.svd(A)
    # a unique solution needs a one-dimensional null space
    if len(s) >= 8 and s[7] <= 1e-10 * s[0]:
        raise DegenerateGeometryError("degenerate point configuration")
    hn = vt[-1].reshape(3, 3)
    h = np.linalg.inv(tb) @ hn @ ta
    return Homography(h)


def reprojection_error(h: Homography, src, dst) -> np.ndarray:
    return np.linalg.norm(h.project(src) - as_points(dst), axis=1)


def box_iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two axis-aligned boxes."""
    ix = min(a.left + a.width, b.left + b.width) - max(a.left, b.left)
    iy = min(a.top + a.height, b.top + b.height) - max(a.top, b.top)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    union = a.width * a.height + b.width * b.height - inter
    return float(min(1.0, inter / union))


def iou_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Vectorized IOU between ``(N, 4)`` and ``(M, 4)`` arrays of ltwh boxes."""
    a = np.asarray(a, dtype=float).reshape(-1, 4)
    b = np.asarray(b, dtype=float).reshape(-1, 4)
    l = np.maximum(a[:, None, 0], b[None, :, 0])
    t = np.maximum(a[:, None, 1], b[None, :, 1])
    r = np.minimum(a[:, None, 0] + a[:, None, 2], b[None, :, 0] + b[None, :, 2])
    btm = np.minimum(a[:, None, 1] + a[:, None, 3], b[None, :, 1] + b[None, :, 3])
    inter = np.clip(r - l, 0, None) * np.clip(btm - t, 0, None)
    area_a = (a[:, 2] * a[:, 3])[:, None]
    area_b = (b[:, 2] * b[:, 3])[None, :]
    union = area_a + area_b - inter
    return np.where(union > 0, inter / np.where(union > 0, union, 1.0), 0.0)
