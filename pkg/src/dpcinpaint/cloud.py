"""Core geometric types: points, clouds, frame sequences, nearest-neighbor index.

Coordinates are float64 throughout. A PointCloud is an ordered (n, 3) array,
optionally paired with unit normals of the same length; order is significant
and preserved by all I/O.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree


def as_points(arr) -> np.ndarray:
    """Coerce to a C-contiguous (n, 3) float64 array and validate finiteness."""
    pts = np.ascontiguousarray(arr, dtype=np.float64)
    if pts.ndim == 1 and pts.size == 0:
        pts = pts.reshape(0, 3)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"expected an (n, 3) point array, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        bad = int(np.flatnonzero(~np.isfinite(pts).all(axis=1))[0])
        raise ValueError(f"non-finite coordinate at point index {bad}")
    return pts


@dataclass(frozen=True)
class Point:
    """A single 3D point with finite coordinates."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        if not (np.isfinite(self.x) and np.isfinite(self.y) and np.isfinite(self.z)):
            raise ValueError("point coordinates must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=np.float64)


class PointCloud:
    """An ordered set of 3D points, optionally with unit normals.

    Invariants: if normals are present they match the point count and each
    has unit Euclidean length within 1e-6.
    """

    __slots__ = ("points", "normals")

    def __init__(self, points, normals=None):
        self.points = as_points(points)
        if normals is not None:
            normals = np.ascontiguousarray(normals, dtype=np.float64)
            if normals.shape != self.points.shape:
                raise ValueError(
                    f"normals shape {normals.shape} != points shape {self.points.shape}"
                )
            lengths = np.linalg.norm(normals, axis=1)
            if self.points.shape[0] and np.max(np.abs(lengths - 1.0)) > 1e-6:
                raise ValueError("normals must have unit length within 1e-6")
        self.normals = normals

    def __len__(self) -> int:
        return self.points.shape[0]

    def point(self, i: int) -> Point:
        x, y, z = self.points[i]
        return Point(float(x), float(y), float(z))

    def bounding_box(self):
        """(lo, hi) corners of the axis-aligned bounding box."""
        if len(self) == 0:
            raise ValueError("empty cloud has no bounding box")
        return self.points.min(axis=0), self.points.max(axis=0)

    def bbox_diagonal(self) -> float:
        lo, hi = self.bounding_box()
        return float(np.linalg.norm(hi - lo))

    def translated(self, offset) -> "PointCloud":
        return PointCloud(self.points + np.asarray(offset, dtype=np.float64), self.normals)


@dataclass
class FrameSequence:
    """An ordered sequence of point cloud frames, indexed f = 1..q."""

    frames: list = field(default_factory=list)

    def __post_init__(self):
        if len(self.frames) < 1:
            raise ValueError("a frame sequence needs at least one frame")

    def __len__(self) -> int:
        return len(self.frames)

    def frame(self, f: int) -> PointCloud:
        """1-based frame access."""
        if not 1 <= f <= len(self.frames):
            raise IndexError(f"frame index {f} outside 1..{len(self.frames)}")
        return self.frames[f - 1]


class SpatialIndex:
    """Immutable nearest-neighbor index over one point set.

    Queries are deterministic: results are sorted by nondecreasing distance
    and exact distance ties are broken by the lower point index. Safe for
    concurrent reads.
    """

    def __init__(self, points):
        self.points = as_points(points)
        if self.points.shape[0] == 0:
            raise ValueError("cannot index an empty point set")
        self._tree = cKDTree(self.points)

    def __len__(self) -> int:
        return self.points.shape[0]

    def nearest(self, query, k: int):
        """The min(k, n) nearest points to `query` as [(index, distance), ...]."""
        if k <= 0:
            raise ValueError("k must be a positive integer")
        q = np.asarray(query, dtype=np.float64).reshape(3)
        n = len(self)
        kk = min(k, n)
        d, _ = self._tree.query(q, k=kk)
        d = np.atleast_1d(d)
        # Re-collect every point within the k-th distance so that exact ties
        # at the boundary resolve by index, not by tree traversal order.
        r = d[-1] * (1.0 + 1e-12) + 1e-300
        cand = np.asarray(self._tree.query_ball_point(q, r), dtype=np.intp)
        dist = np.linalg.norm(self.points[cand] - q, axis=1)
        order = np.lexsort((cand, dist))[:kk]
        return [(int(cand[i]), float(dist[i])) for i in order]

    def query_one(self, queries):
        """Single nearest neighbor for a batch of queries: (distances, indices).

        Fast path used by bulk internal searches; ties resolve by tree order.
        """
        d, idx = self._tree.query(np.asarray(queries, dtype=np.float64), k=1, workers=-1)
        return d, idx

    def ball(self, center, radius: float):
        """Indices of all points within `radius` (inclusive) of `center`."""
        idx = self._tree.query_ball_point(np.asarray(center, dtype=np.float64), radius)
        return np.asarray(sorted(idx), dtype=np.intp)


def nearest_neighbors(index: SpatialIndex, query, k: int):
    """Operation form of SpatialIndex.nearest (same contract)."""
    return index.nearest(query, k)


def estimate_normals(cloud: PointCloud, k_normal: int = 12):
    """Estimate unit normals by PCA over each point's k_normal nearest neighbors.

    The normal is the eigenvector of the smallest covariance eigenvalue,
    sign-oriented so that its dot product with (global centroid - local
    neighborhood centroid) is <= 0, i.e. pointing away from the body of the
    cloud. Degenerate (rank <= 1) neighborhoods get the +z axis and are
    counted in the returned diagnostic.

    Returns (cloud_with_normals, degenerate_count).
    """
    pts = cloud.points
    n = pts.shape[0]
    if n < 3:
        raise ValueError("normal estimation needs at least 3 points")
    if k_normal < 3:
        raise ValueError("k_normal must be >= 3")
    k = min(k_normal, n)

    tree = cKDTree(pts)
    _, idx = tree.query(pts, k=k, workers=-1)
    hoods = pts[idx]                                  # (n, k, 3)
    centroids = hoods.mean(axis=1)                    # (n, 3)
    centered = hoods - centroids[:, None, :]
    cov = np.einsum("nki,nkj->nij", centered, centered) / k

    w, v = np.linalg.eigh(cov)                        # ascending eigenvalues
    normals = v[:, :, 0].copy()                       # smallest-eigenvalue vectors

    # rank <= 1: the two smallest eigenvalues both vanish and the normal
    # direction is not determined by the neighborhood.
    scale = np.maximum(w[:, 2], 0.0)
    degenerate = w[:, 1] <= 1e-12 * scale + 1e-30
    normals[degenerate] = (0.0, 0.0, 1.0)

    # Canonical eigenvector sign first (largest-magnitude component positive),
    # then the outward-orientation rule; both are needed for determinism.
    lead = np.take_along_axis(
        normals, np.argmax(np.abs(normals), axis=1)[:, None], axis=1
    )[:, 0]
    normals[lead < 0.0] *= -1.0

    to_global = pts.mean(axis=0)[None, :] - centroids
    flip = np.einsum("ni,ni->n", normals, to_global) > 0.0
    normals[flip & ~degenerate] *= -1.0

    normals /= np.linalg.norm(normals, axis=1)[:, None]
    return PointCloud(pts, normals), int(np.count_nonzero(degenerate))
