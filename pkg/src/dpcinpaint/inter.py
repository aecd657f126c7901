"""Inter-frame source search: sliding-window vote over a bounding box.

For a target cube, a search box is centered at the co-located position in
an adjacent frame. Candidate windows (cubes of the target's edge length)
slide through the box on a lattice; each window scores one vote per known
target slot whose nearest box point — queried at the slot's relative
position offset to the window's frame — falls inside the window. The
highest-voted window is the inter-source cube.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .cloud import PointCloud
from .cubes import STATUS_KNOWN, Cube
from .errors import NoInterSourceError
from .registration import StructureMatchResult, structure_match


@dataclass(frozen=True)
class SearchBox:
    center: np.ndarray
    edge_length_box: float
    frame_id: int

    def __post_init__(self):
        object.__setattr__(self, "center",
                           np.asarray(self.center, dtype=np.float64).reshape(3))
        if self.edge_length_box <= 0:
            raise ValueError("box edge length must be positive")


@dataclass(frozen=True)
class VoteResult:
    best_center: np.ndarray
    votes: int
    total_queries: int

    def __post_init__(self):
        if not 0 <= self.votes <= self.total_queries:
            raise ValueError("votes must lie in [0, total_queries]")


def _points_in_box(points: np.ndarray, center: np.ndarray, edge: float) -> np.ndarray:
    half = edge / 2.0 * (1 + 1e-12)
    return np.flatnonzero(np.all(np.abs(points - center) <= half, axis=1))


def co_located_cube(target: Cube, adjacent: PointCloud, adjacent_frame_id: int = -1) -> Cube:
    """Adjacent-frame points inside the box centered at the target's center."""
    if len(adjacent) == 0:
        raise ValueError("adjacent frame is empty")
    members = _points_in_box(adjacent.points, target.center, target.edge_length)
    return Cube(target.center, target.edge_length, adjacent.points[members],
                np.full(len(members), STATUS_KNOWN, dtype=np.int8), members,
                frame_id=adjacent_frame_id, voxel_pitch=target.voxel_pitch)


def make_search_box(target: Cube, box_scale: float, adjacent_frame_id: int) -> SearchBox:
    if box_scale < 1.0:
        raise ValueError("box must be at least as large as the cube")
    return SearchBox(target.center.copy(), target.edge_length * box_scale,
                     adjacent_frame_id)


def window_centers(box: SearchBox, edge_length: float, window_stride: float):
    """Lattice of candidate window centers; windows must fit inside the box.

    Returns (centers (w, 3), lattice offsets (w, 3) int). The lattice is
    symmetric around the box center and always contains it. Centers come in
    serpentine order (consecutive entries one lattice step apart), which the
    warm-started native vote kernel exploits; the winner selection uses
    explicit sort keys, so the order never affects results.
    """
    if window_stride <= 0:
        raise ValueError("window_stride must be positive")
    reach = (box.edge_length_box - edge_length) / 2.0
    j = int(np.floor(reach / window_stride + 1e-12)) if reach > 0 else 0
    axis = np.arange(-j, j + 1, dtype=np.int64)
    gx, gy, gz = np.meshgrid(axis, axis, axis, indexing="ij")
    offsets = np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=1)
    n = len(axis)
    grid = offsets.reshape(n, n, n, 3)
    grid = np.flip(grid, axis=1)[::1]                       # no-op, keep shape
    grid[1::2] = grid[1::2, ::-1]                           # snake in y per x
    grid = grid.reshape(n * n, n, 3)
    grid[1::2] = grid[1::2, ::-1]                           # snake in z per (x, y)
    offsets = np.ascontiguousarray(grid.reshape(-1, 3))
    centers = np.ascontiguousarray(box.center[None, :] + offsets * window_stride)
    return centers, offsets


def search_inter_source(target: Cube, adjacent: PointCloud, box: SearchBox,
                        window_stride: float):
    """Best-voted window in the box (Cube, VoteResult).

    Ties break toward the window center closest to the box center, then by
    lexicographic lattice order.
    """
    members = _points_in_box(adjacent.points, box.center, box.edge_length_box)
    if len(members) == 0:
        raise NoInterSourceError(
            f"search box in frame {box.frame_id} contains no points"
        )
    box_pts = np.ascontiguousarray(adjacent.points[members])
    rel_known = np.ascontiguousarray(target.relative_positions[target.known_mask])
    centers, offsets = window_centers(box, target.edge_length, window_stride)

    votes = kernels.window_vote_counts(box_pts, rel_known, centers,
                                       target.edge_length / 2.0)

    d2 = np.einsum("ij,ij->i", centers - box.center, centers - box.center)
    pick = np.lexsort((offsets[:, 2], offsets[:, 1], offsets[:, 0], d2, -votes))[0]
    best_center = centers[pick]

    inside = _points_in_box(box_pts, best_center, target.edge_length)
    raw = Cube(best_center, target.edge_length, box_pts[inside],
               np.full(len(inside), STATUS_KNOWN, dtype=np.int8),
               members[inside], frame_id=box.frame_id,
               voxel_pitch=target.voxel_pitch)
    return raw, VoteResult(best_center.copy(), int(votes[pick]), int(len(rel_known)))


def match_inter_cube(raw: Cube, target: Cube, max_iters: int = 10,
                     tol: float = None) -> StructureMatchResult:
    """Structure-match a raw inter-source cube into the target's coordinates."""
    if len(raw) < 3:
        raise NoInterSourceError(
            f"inter-source cube from frame {raw.frame_id} has {len(raw)} < 3 points"
        )
    return structure_match(raw, target, max_iters=max_iters, tol=tol)
