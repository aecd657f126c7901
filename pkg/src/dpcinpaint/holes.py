"""Reproducible synthetic holes and hole-cube detection.

Synthesis removes Euclidean balls around seeded centers. Seeds for the
first frame are drawn uniformly from its points; each later frame reuses,
per hole, the surviving point of the previous frame closest to that frame's
seed, so holes recur near the same spot while drifting slightly — adjacent
frames keep usable data inside part of each hole.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .cloud import FrameSequence, PointCloud, SpatialIndex
from .cubes import Cube
from .errors import CorruptionBudgetError


@dataclass
class FrameHoles:
    """Removals for one frame: original indices, original coordinates, seeds."""

    frame: int                      # 1-based frame index
    removed_indices: np.ndarray     # (r,) int64, unique, sorted
    removed_points: np.ndarray      # (r, 3) original coordinates
    seeds: np.ndarray               # (k, 3) hole-center coordinates used


@dataclass
class HoleMask:
    """Ground-truth record of synthesized holes for a whole sequence."""

    frames: list = field(default_factory=list)   # list[FrameHoles]
    radius: float = 0.0
    n_holes: int = 0
    rng_seed: int = 0

    def for_frame(self, f: int) -> FrameHoles:
        return self.frames[f - 1]

    def to_json_dict(self) -> dict:
        return {
            "radius": self.radius,
            "n_holes": self.n_holes,
            "rng_seed": self.rng_seed,
            "frames": [
                {
                    "frame": fh.frame,
                    "removed": [
                        {"index": int(i), "x": float(p[0]), "y": float(p[1]), "z": float(p[2])}
                        for i, p in zip(fh.removed_indices, fh.removed_points)
                    ],
                    "seeds": [[float(c) for c in s] for s in fh.seeds],
                }
                for fh in self.frames
            ],
        }

    def save_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def from_json_dict(cls, data: dict) -> "HoleMask":
        frames = []
        for rec in data["frames"]:
            removed = rec["removed"]
            idx = np.array([r["index"] for r in removed], dtype=np.int64)
            pts = np.array([[r["x"], r["y"], r["z"]] for r in removed],
                           dtype=np.float64).reshape(-1, 3)
            seeds = np.array(rec["seeds"], dtype=np.float64).reshape(-1, 3)
            frames.append(FrameHoles(int(rec["frame"]), idx, pts, seeds))
        return cls(frames, float(data.get("radius", 0.0)),
                   int(data.get("n_holes", 0)), int(data.get("rng_seed", 0)))

    @classmethod
    def load_json(cls, path) -> "HoleMask":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


def synthesize_holes(seq: FrameSequence, n_holes: int, radius: float, rng_seed: int):
    """Remove n_holes Euclidean balls per frame; returns (corrupted, mask).

    Deterministic for fixed inputs. Refuses when any frame would lose more
    than half its points.
    """
    if n_holes <= 0:
        raise ValueError("n_holes must be positive")
    if radius <= 0:
        raise ValueError("radius must be positive")
    rng = np.random.default_rng(rng_seed)

    corrupted = []
    mask_frames = []
    seeds = None
    for f, frame in enumerate(seq.frames, start=1):
        n = len(frame)
        if n <= n_holes:
            raise ValueError(f"frame {f} has only {n} points for {n_holes} holes")
        if seeds is None:
            chosen = np.sort(rng.choice(n, size=n_holes, replace=False))
            seeds = frame.points[chosen].copy()

        index = SpatialIndex(frame.points)
        removed = np.zeros(n, dtype=bool)
        for s in seeds:
            removed[index.ball(s, radius)] = True
        removed_idx = np.flatnonzero(removed)
        if len(removed_idx) > 0.5 * n:
            raise CorruptionBudgetError(
                f"radius {radius} would remove {len(removed_idx)}/{n} points of frame {f}"
            )
        mask_frames.append(FrameHoles(
            f, removed_idx.astype(np.int64), frame.points[removed_idx].copy(),
            seeds.copy(),
        ))
        survivors = frame.points[~removed]
        normals = frame.normals[~removed] if frame.normals is not None else None
        corrupted.append(PointCloud(survivors, normals))

        # propagate: next frame's seed = nearest surviving point to this seed
        if f < len(seq.frames):
            surv_index = SpatialIndex(survivors) if len(survivors) else None
            next_seeds = []
            for s in seeds:
                if surv_index is None:
                    next_seeds.append(s)
                else:
                    j, _ = surv_index.nearest(s, 1)[0]
                    next_seeds.append(survivors[j])
            seeds = np.array(next_seeds, dtype=np.float64)

    return FrameSequence(corrupted), HoleMask(mask_frames, float(radius),
                                              int(n_holes), int(rng_seed))


def restore_holes(corrupted: FrameSequence, mask: HoleMask) -> FrameSequence:
    """Re-insert removed points at their original indices (exact inverse)."""
    restored = []
    for frame, fh in zip(corrupted.frames, mask.frames):
        n_orig = len(frame) + len(fh.removed_indices)
        out = np.empty((n_orig, 3), dtype=np.float64)
        keep = np.ones(n_orig, dtype=bool)
        keep[fh.removed_indices] = False
        out[keep] = frame.points
        out[fh.removed_indices] = fh.removed_points
        restored.append(PointCloud(out))
    return FrameSequence(restored)


def voxel_occupancy(cube: Cube) -> np.ndarray:
    """Boolean (r, r, r) occupancy grid of a cube's known slots."""
    r = cube.voxel_grid_shape()
    occ = np.zeros((r, r, r), dtype=bool)
    pts = cube.positions[cube.known_mask]
    if len(pts):
        idx = cube.voxel_indices(pts)
        ok = np.all((idx >= 0) & (idx < r), axis=1)
        idx = idx[ok]
        occ[idx[:, 0], idx[:, 1], idx[:, 2]] = True
    return occ


def interior_empty_voxels(cube: Cube):
    """Empty voxels with >= 4 of 6 face-neighbors occupied (hole candidates)."""
    occ = voxel_occupancy(cube)
    r = occ.shape[0]
    neighbor_count = np.zeros(occ.shape, dtype=np.int8)
    for axis in range(3):
        for shift in (1, -1):
            rolled = np.zeros_like(occ)
            src = [slice(None)] * 3
            dst = [slice(None)] * 3
            if shift == 1:
                src[axis], dst[axis] = slice(0, r - 1), slice(1, r)
            else:
                src[axis], dst[axis] = slice(1, r), slice(0, r - 1)
            rolled[tuple(dst)] = occ[tuple(src)]
            neighbor_count += rolled
    interior = (~occ) & (neighbor_count >= 4)
    return {tuple(int(c) for c in t) for t in np.argwhere(interior)}


def hole_voxels_from_mask(cube: Cube, removed_points: np.ndarray):
    """Cube-local voxels containing at least one removed (ground-truth) point."""
    if removed_points.shape[0] == 0:
        return set()
    inside = cube.contains(removed_points)
    if not inside.any():
        return set()
    idx = cube.voxel_indices(removed_points[inside])
    r = cube.voxel_grid_shape()
    ok = np.all((idx >= 0) & (idx < r), axis=1)
    return {tuple(int(c) for c in t) for t in idx[ok]}


def detect_hole_cubes(frame: PointCloud, cubes, density_ratio: float = 0.05,
                      mask_removed: np.ndarray = None):
    """Cube ids flagged as inpainting targets.

    With mask_removed (the frame's removed ground-truth points, evaluation
    mode) a cube is flagged iff it contains at least one removed location —
    zero false negatives by construction. Otherwise a cube is flagged iff
    interior-empty voxels exceed density_ratio as a fraction of its occupied
    voxels.
    """
    if not 0.0 < density_ratio < 1.0:
        raise ValueError("density_ratio must lie in (0, 1)")
    flagged = []
    for cube in cubes:
        if mask_removed is not None:
            if mask_removed.shape[0] and cube.contains(mask_removed).any():
                flagged.append(cube.cube_id)
        else:
            occ = voxel_occupancy(cube)
            n_occ = int(occ.sum())
            if n_occ == 0:
                continue
            ratio = len(interior_empty_voxels(cube)) / n_occ
            if ratio > density_ratio:
                flagged.append(cube.cube_id)
    return flagged


def hole_voxels_for_cube(cube: Cube, mask_removed: np.ndarray = None):
    """Hole voxel set for a target cube (mask mode when removals are given)."""
    if mask_removed is not None:
        return hole_voxels_from_mask(cube, mask_removed)
    return interior_empty_voxels(cube)
