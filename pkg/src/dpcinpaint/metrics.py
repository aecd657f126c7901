"""Geometric quality metrics: GPSNR, NSHD, temporal consistency.

GPSNR is a symmetric point-to-plane PSNR: squared projections of
nearest-neighbor residuals onto the reference normals, the worse direction
taken, peak = reference bounding-box diagonal. NSHD is the average of the
two directional mean nearest-neighbor distances normalized by twice the
diagonal. Both are computed identically for every method, so orderings are
meaningful even though the absolute scales are convention-dependent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.spatial import cKDTree

from .cloud import FrameSequence, PointCloud, estimate_normals
from .holes import HoleMask

GPSNR_CAP_DB = 200.0


@dataclass
class MetricReport:
    gpsnr_db: List[float] = field(default_factory=list)
    nshd: List[float] = field(default_factory=list)
    temporal_consistency: Optional[float] = None

    @property
    def mean_gpsnr_db(self) -> float:
        return float(np.mean(self.gpsnr_db))

    @property
    def mean_nshd(self) -> float:
        return float(np.mean(self.nshd))


def _require_nonempty(reference: PointCloud, test: PointCloud):
    if len(reference) == 0 or len(test) == 0:
        raise ValueError("metric inputs must be non-empty clouds")


def _with_normals(cloud: PointCloud, k_normal: int = 12) -> PointCloud:
    if cloud.normals is not None:
        return cloud
    return estimate_normals(cloud, k_normal)[0]


def gpsnr(reference: PointCloud, test: PointCloud) -> float:
    """Symmetric point-to-plane PSNR in dB, capped at +200 dB.

    test->reference residuals project onto the normal of the matched
    reference point; reference->test residuals project onto the reference
    point's own normal. MSE is the max of the two directional means and
    peak is the reference bounding-box diagonal.
    """
    _require_nonempty(reference, test)
    ref = _with_normals(reference)
    ref_tree = cKDTree(ref.points)
    test_tree = cKDTree(test.points)

    _, idx = ref_tree.query(test.points, k=1, workers=-1)
    v = test.points - ref.points[idx]
    mse_t2r = float(np.mean(np.einsum("ij,ij->i", v, ref.normals[idx]) ** 2))

    _, idx = test_tree.query(ref.points, k=1, workers=-1)
    v = ref.points - test.points[idx]
    mse_r2t = float(np.mean(np.einsum("ij,ij->i", v, ref.normals) ** 2))

    mse = max(mse_t2r, mse_r2t)
    peak2 = reference.bbox_diagonal() ** 2
    if peak2 == 0.0 or mse < peak2 * 1e-20:
        return GPSNR_CAP_DB
    return float(10.0 * np.log10(peak2 / mse))


def nshd(reference: PointCloud, test: PointCloud) -> float:
    """Normalized symmetric mean nearest-neighbor distance.

    The average of the two directional mean NN distances divided by twice
    the reference bounding-box diagonal; 0 iff the clouds are identical
    point sets.
    """
    _require_nonempty(reference, test)
    d_t2r, _ = cKDTree(reference.points).query(test.points, k=1, workers=-1)
    d_r2t, _ = cKDTree(test.points).query(reference.points, k=1, workers=-1)
    diag = reference.bbox_diagonal()
    if diag == 0.0:
        # degenerate single-point reference: fall back to the only scale there is
        diag = max(float(np.max(d_t2r)), float(np.max(d_r2t)), 1e-300)
    return float(0.5 * (np.mean(d_t2r) + np.mean(d_r2t)) / (2.0 * diag))


def _region_points(frame: PointCloud, seeds: np.ndarray, radius: float) -> np.ndarray:
    if len(frame) == 0 or seeds.shape[0] == 0:
        return np.zeros((0, 3))
    d, _ = cKDTree(seeds).query(frame.points, k=1, workers=-1)
    return frame.points[d <= radius]


def temporal_consistency(seq: FrameSequence, mask: HoleMask,
                         region_radius: float) -> float:
    """Mean symmetric NN distance between consecutive frames' hole regions.

    The region of frame f is every point within region_radius of one of that
    frame's hole seeds (the inpainted points plus a shell of originals),
    normalized per pair by the two frames' joint bounding-box diagonal.
    Lower is more temporally consistent.
    """
    if len(seq) < 2:
        raise ValueError("temporal consistency needs at least 2 frames")
    if region_radius <= 0:
        raise ValueError("region_radius must be positive")
    values = []
    for f in range(1, len(seq)):
        a = _region_points(seq.frame(f), mask.for_frame(f).seeds, region_radius)
        b = _region_points(seq.frame(f + 1), mask.for_frame(f + 1).seeds, region_radius)
        if len(a) == 0 or len(b) == 0:
            continue
        d_ab, _ = cKDTree(b).query(a, k=1, workers=-1)
        d_ba, _ = cKDTree(a).query(b, k=1, workers=-1)
        both = np.vstack([seq.frame(f).points, seq.frame(f + 1).points])
        diag = float(np.linalg.norm(both.max(axis=0) - both.min(axis=0)))
        values.append(0.5 * (float(np.mean(d_ab)) + float(np.mean(d_ba))) / max(diag, 1e-300))
    return float(np.mean(values)) if values else 0.0
