"""Structure matching: simplified iterative-closest-point rigid alignment.

Each iteration re-centers the source on the target's known-slot centroid,
matches every target known slot to its nearest source point, and solves the
optimal rotation for the matched pairs by the cross-covariance SVD method
(Arun et al. 1987) with a reflection guard.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .cubes import Cube


@dataclass(frozen=True)
class RigidTransform:
    """x -> rotation @ x + translation; rotation is proper orthonormal."""

    rotation: np.ndarray
    translation: np.ndarray

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3))

    def apply(self, points) -> np.ndarray:
        return np.asarray(points, dtype=np.float64) @ self.rotation.T + self.translation

    def compose_after(self, other: "RigidTransform") -> "RigidTransform":
        """self ∘ other: apply `other` first, then `self`."""
        return RigidTransform(self.rotation @ other.rotation,
                              self.rotation @ other.translation + self.translation)

    def inverse(self) -> "RigidTransform":
        rt = self.rotation.T
        return RigidTransform(rt, -rt @ self.translation)


@dataclass
class StructureMatchResult:
    cube: Cube
    transform: RigidTransform
    iterations: int
    rms: float
    translation_only: bool


def _kabsch(src: np.ndarray, dst: np.ndarray):
    """Optimal rotation + translation mapping src onto dst (matched rows).

    Returns (R, t, translation_only); falls back to translation only when
    the matched pairs are collinear or coincident (rank < 2 cross-covariance).
    """
    src_c = src.mean(axis=0)
    dst_c = dst.mean(axis=0)
    h = (src - src_c).T @ (dst - dst_c)
    u, s, vt = np.linalg.svd(h)
    if s[0] <= 0 or s[1] <= 1e-12 * s[0]:
        return np.eye(3), dst_c - src_c, True
    d = np.sign(np.linalg.det(vt.T @ u.T))
    r = vt.T @ np.diag([1.0, 1.0, d]) @ u.T
    return r, dst_c - r @ src_c, False


def structure_match(source: Cube, target: Cube, max_iters: int = 10,
                    tol: float = None) -> StructureMatchResult:
    """Align `source` onto `target`'s known slots; returns the matched cube.

    Stops when the matched-pair RMS improves by less than tol (default
    1e-6 * edge_length) or after max_iters iterations. The returned cube is
    re-centered on the target so its relative positions are target-local.
    """
    tgt = target.positions[target.known_mask]
    src = source.positions.copy()
    if len(tgt) < 3 or len(src) < 3:
        raise ValueError("structure matching needs >= 3 points on both sides")
    if tol is None:
        tol = 1e-6 * target.edge_length

    total = RigidTransform.identity()
    prev_rms = np.inf
    rms = np.inf
    translation_only = False
    iterations = 0
    for iterations in range(1, max_iters + 1):
        shift = tgt.mean(axis=0) - src.mean(axis=0)
        src += shift
        total = RigidTransform(np.eye(3), shift).compose_after(total)

        _, nn = cKDTree(src).query(tgt, k=1, workers=-1)
        matched = src[nn]
        r, t, degenerate = _kabsch(matched, tgt)
        translation_only = translation_only or degenerate
        src = src @ r.T + t
        total = RigidTransform(r, t).compose_after(total)

        rms = float(np.sqrt(np.mean(np.sum((src[nn] - tgt) ** 2, axis=1))))
        if prev_rms - rms < tol:
            break
        prev_rms = rms

    aligned = Cube(target.center, source.edge_length, src,
                   source.statuses.copy(), source.source_index.copy(),
                   frame_id=source.frame_id, voxel_pitch=source.voxel_pitch,
                   cube_id=source.cube_id)
    return StructureMatchResult(aligned, total, iterations, rms, translation_only)
