"""Cube segmentation: split a frame into overlapping fixed-size boxes.

A cube is the per-region processing unit. Its slots are the rows of every
matrix built over the cube; known slots reference frame points, missing
slots are placeholders appended by instantiate_missing_slots. Slot order is
stable and significant.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .cloud import PointCloud, SpatialIndex
from .errors import NoDonorError

STATUS_KNOWN = 0
STATUS_MISSING = 1


@dataclass(frozen=True)
class Slot:
    """One cube row: a frame point (known) or an instantiated placeholder."""

    position: np.ndarray
    status: str                      # "known" | "missing"
    source_point_index: Optional[int]
    relative_position: np.ndarray


@dataclass
class SegmentationConfig:
    edge_length: float
    stride: float
    voxel_pitch: float

    def __post_init__(self):
        if self.edge_length <= 0 or self.stride <= 0 or self.voxel_pitch <= 0:
            raise ValueError("edge_length, stride and voxel_pitch must be positive")
        if self.stride > self.edge_length * (1 + 1e-12):
            raise ValueError("stride must not exceed edge_length")
        if self.voxel_pitch > self.edge_length / 4 * (1 + 1e-12):
            raise ValueError("voxel_pitch must be <= edge_length / 4")


class Cube:
    """Axis-aligned box of side edge_length centered at `center`.

    positions: (n, 3) slot positions, statuses: (n,) 0=known/1=missing,
    source_index: (n,) frame point index or -1 for missing slots.
    """

    __slots__ = ("center", "edge_length", "frame_id", "voxel_pitch",
                 "positions", "statuses", "source_index", "cube_id")

    def __init__(self, center, edge_length, positions, statuses, source_index,
                 frame_id=0, voxel_pitch=None, cube_id=-1):
        self.center = np.asarray(center, dtype=np.float64).reshape(3)
        self.edge_length = float(edge_length)
        self.positions = np.ascontiguousarray(positions, dtype=np.float64).reshape(-1, 3)
        self.statuses = np.asarray(statuses, dtype=np.int8).reshape(-1)
        self.source_index = np.asarray(source_index, dtype=np.int64).reshape(-1)
        if not (len(self.positions) == len(self.statuses) == len(self.source_index)):
            raise ValueError("slot arrays must have equal length")
        if np.any((self.statuses == STATUS_KNOWN) != (self.source_index >= 0)):
            raise ValueError("a slot is known iff it has a source point index")
        self.frame_id = int(frame_id)
        self.voxel_pitch = float(voxel_pitch) if voxel_pitch else self.edge_length / 8.0
        self.cube_id = int(cube_id)

    def __len__(self) -> int:
        return len(self.positions)

    @property
    def n_known(self) -> int:
        return int(np.count_nonzero(self.statuses == STATUS_KNOWN))

    @property
    def n_missing(self) -> int:
        return int(np.count_nonzero(self.statuses == STATUS_MISSING))

    @property
    def known_mask(self) -> np.ndarray:
        return self.statuses == STATUS_KNOWN

    @property
    def missing_mask(self) -> np.ndarray:
        return self.statuses == STATUS_MISSING

    @property
    def relative_positions(self) -> np.ndarray:
        return self.positions - self.center

    def slot(self, i: int) -> Slot:
        status = "known" if self.statuses[i] == STATUS_KNOWN else "missing"
        src = int(self.source_index[i]) if self.source_index[i] >= 0 else None
        return Slot(self.positions[i].copy(), status, src,
                    self.positions[i] - self.center)

    def contains(self, points) -> np.ndarray:
        """Closed-box membership test for an (n, 3) array."""
        rel = np.atleast_2d(np.asarray(points, dtype=np.float64)) - self.center
        half = self.edge_length / 2.0 * (1 + 1e-12)
        return np.all(np.abs(rel) <= half, axis=1)

    def intersects_box(self, other: "Cube") -> bool:
        """Whether the two closed boxes overlap."""
        gap = np.abs(self.center - other.center)
        return bool(np.all(gap <= (self.edge_length + other.edge_length) / 2.0))

    def voxel_grid_shape(self) -> int:
        return int(round(self.edge_length / self.voxel_pitch))

    def voxel_indices(self, points) -> np.ndarray:
        """Cube-local voxel index triples for points (may fall outside [0, R))."""
        rel = np.atleast_2d(np.asarray(points, dtype=np.float64)) - (
            self.center - self.edge_length / 2.0
        )
        idx = np.floor(rel / self.voxel_pitch + 1e-12).astype(np.int64)
        # points exactly on the top face belong to the last voxel layer
        r = self.voxel_grid_shape()
        return np.minimum(idx, r - 1)

    def validate(self) -> None:
        half = self.edge_length / 2.0 * (1 + 1e-9) + 1e-300
        if len(self) and np.max(np.abs(self.relative_positions)) > half:
            raise ValueError("slot position outside the cube box")


def split_cubes(frame: PointCloud, cfg: SegmentationConfig, frame_id: int = 0):
    """Split a frame into overlapping cubes on a stride-pitch center lattice.

    Centers span the bounding box (lattice origin at the bbox minimum), so
    the union of boxes covers the bbox expanded by edge_length/2 per side.
    Empty cubes are dropped. A point lands in every cube whose closed box
    contains it.
    """
    pts = frame.points
    if pts.shape[0] == 0:
        raise ValueError("cannot split an empty frame")
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    stride, half = cfg.stride, cfg.edge_length / 2.0
    counts = np.maximum(np.ceil((hi - lo) / stride - 1e-12).astype(np.int64), 0) + 1

    # per-axis lattice index ranges whose cubes contain each point
    jmin = np.ceil((pts - lo - half) / stride - 1e-12).astype(np.int64)
    jmax = np.floor((pts - lo + half) / stride + 1e-12).astype(np.int64)
    np.clip(jmin, 0, counts - 1, out=jmin)
    np.clip(jmax, 0, counts - 1, out=jmax)
    width = jmax - jmin

    keys, point_ids = [], []
    max_w = width.max(axis=0)
    for dx in range(int(max_w[0]) + 1):
        for dy in range(int(max_w[1]) + 1):
            for dz in range(int(max_w[2]) + 1):
                mask = (width[:, 0] >= dx) & (width[:, 1] >= dy) & (width[:, 2] >= dz)
                if not mask.any():
                    continue
                k = jmin[mask] + (dx, dy, dz)
                keys.append(k)
                point_ids.append(np.flatnonzero(mask))
    keys = np.concatenate(keys)
    point_ids = np.concatenate(point_ids)

    order = np.lexsort((point_ids, keys[:, 2], keys[:, 1], keys[:, 0]))
    keys, point_ids = keys[order], point_ids[order]
    boundaries = np.flatnonzero(np.any(np.diff(keys, axis=0) != 0, axis=1)) + 1
    groups = np.split(point_ids, boundaries)
    group_keys = keys[np.concatenate([[0], boundaries])] if len(keys) else keys

    cubes = []
    for cid, (key, members) in enumerate(zip(group_keys, groups)):
        center = lo + key * stride
        cubes.append(Cube(
            center, cfg.edge_length,
            pts[members], np.zeros(len(members), dtype=np.int8), members,
            frame_id=frame_id, voxel_pitch=cfg.voxel_pitch, cube_id=cid,
        ))
    return cubes


def auto_segmentation_config(frame: PointCloud, target_points: int = 200,
                             stride_ratio: float = 0.5,
                             voxel_ratio: float = 0.125) -> SegmentationConfig:
    """Pick an edge length so the average cube holds ~target_points points.

    Uses the median nearest-neighbor spacing with a surface-density model
    (points per cube grow quadratically with the edge for scanned surfaces).
    """
    pts = frame.points
    if pts.shape[0] < 2:
        raise ValueError("need at least 2 points to size cubes")
    sample = pts if pts.shape[0] <= 5000 else pts[:: pts.shape[0] // 5000]
    d, _ = cKDTree(sample).query(sample, k=2, workers=-1)
    spacing = float(np.median(d[:, 1]))
    if spacing <= 0:
        spacing = max(float(np.ptp(pts, axis=0).max()) * 1e-3, 1e-9)
    edge = spacing * float(np.sqrt(target_points))
    return SegmentationConfig(edge_length=edge, stride=edge * stride_ratio,
                              voxel_pitch=edge * voxel_ratio)


def instantiate_missing_slots(target: Cube, registered_intra: Cube, hole_voxels) -> Cube:
    """Append missing slots at intra-source positions that fall in hole voxels.

    hole_voxels is a set of cube-local (i, j, k) voxel triples of `target`.
    The new slots' placeholder positions are exactly the donor positions, so
    their intra correspondents are themselves.
    """
    if not hole_voxels:
        return target
    donors = registered_intra.positions
    if donors.shape[0] == 0:
        raise NoDonorError(
            f"intra-source cube has no points at all for cube {target.cube_id}"
        )
    vox = target.voxel_indices(donors)
    r = target.voxel_grid_shape()
    in_grid = np.all((vox >= 0) & (vox < r), axis=1)
    hole_arr = np.array(sorted(hole_voxels), dtype=np.int64).reshape(-1, 3)
    # membership of each donor voxel in the hole set
    flat = (vox[:, 0] * r + vox[:, 1]) * r + vox[:, 2]
    hole_flat = (hole_arr[:, 0] * r + hole_arr[:, 1]) * r + hole_arr[:, 2]
    selected = in_grid & np.isin(flat, hole_flat)
    if not selected.any():
        raise NoDonorError(
            f"intra-source cube has no points in the hole region of cube {target.cube_id}"
        )
    new_pos = donors[selected]
    positions = np.vstack([target.positions, new_pos])
    statuses = np.concatenate([
        target.statuses, np.full(len(new_pos), STATUS_MISSING, dtype=np.int8)
    ])
    source = np.concatenate([
        target.source_index, np.full(len(new_pos), -1, dtype=np.int64)
    ])
    return Cube(target.center, target.edge_length, positions, statuses, source,
                frame_id=target.frame_id, voxel_pitch=target.voxel_pitch,
                cube_id=target.cube_id)


def match_correspondents(cube: Cube, support: Cube):
    """Per-slot intra-source correspondents (conformability map).

    Known slots match their nearest support point by relative position;
    missing slots hit their own donor exactly (distance 0 by construction).
    Returns (indices into support, (n, 3) correspondent relative positions).
    """
    support_rel = support.positions - cube.center
    idx = SpatialIndex(support_rel).query_one(cube.relative_positions)[1]
    return idx, support_rel[idx]
