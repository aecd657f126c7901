"""Frame and sequence orchestration: detect, search, solve, write back.

Per target cube: intra search -> structure match -> missing-slot
instantiation -> inter search on each temporal side -> structure match ->
spatio-temporal graph -> assemble -> solve. Per-cube failures are recorded
and skipped; a frame only fails on I/O. Adjacent frames are always the
original inputs, so frames are independent and the sequence output is
deterministic.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .cloud import FrameSequence, PointCloud, estimate_normals
from .cubes import (Cube, SegmentationConfig, auto_segmentation_config,
                    instantiate_missing_slots, match_correspondents, split_cubes)
from .errors import (DescriptorError, DpcInpaintError, GraphError,
                     NoCandidateError, NoDonorError, NoInterSourceError,
                     SingularSystemError, SolverError)
from .graphs import build_knn_graph, build_temporal_weights, dump_graph_edges
from .holes import HoleMask, detect_hole_cubes, hole_voxels_for_cube
from .inter import make_search_box, match_inter_cube, search_inter_source
from .intra import cube_descriptor, find_intra_source
from .registration import structure_match
from .solver import (InpaintConfig, assemble_system, objective_value,
                     solve_cube, solve_residual)

_SKIPPABLE = (DescriptorError, NoCandidateError, NoDonorError, GraphError,
              SingularSystemError, SolverError)


@dataclass
class CubeRecord:
    cube_id: int
    n_known: int = 0
    n_missing: int = 0
    intra_distance: Optional[float] = None
    votes_prev: Optional[int] = None
    votes_next: Optional[int] = None
    coverage_prev: Optional[float] = None
    coverage_next: Optional[float] = None
    objective_before: Optional[float] = None
    objective_after: Optional[float] = None
    residual: Optional[float] = None
    dropped: List[str] = field(default_factory=list)
    skipped_reason: Optional[str] = None
    extra_sides: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        out = {
            "id": self.cube_id,
            "n_known": self.n_known,
            "n_missing": self.n_missing,
            "intra_distance": self.intra_distance,
            "votes_prev": self.votes_prev,
            "votes_next": self.votes_next,
            "coverage_prev": self.coverage_prev,
            "coverage_next": self.coverage_next,
            "objective_before": self.objective_before,
            "objective_after": self.objective_after,
            "residual": self.residual,
            "dropped": self.dropped,
        }
        if self.skipped_reason is not None:
            out["skipped_reason"] = self.skipped_reason
        if self.extra_sides:
            out["extra_sides"] = self.extra_sides
        return out


@dataclass
class FrameReport:
    f: int
    cubes: List[CubeRecord] = field(default_factory=list)
    ms: float = 0.0

    def to_json_dict(self, include_timing: bool = False) -> dict:
        out = {"f": self.f, "cubes": [c.to_json_dict() for c in self.cubes]}
        if include_timing:
            out["ms"] = self.ms
        return out


def reports_to_json_dict(reports: List[FrameReport], include_timing: bool = False) -> dict:
    return {"frames": [r.to_json_dict(include_timing) for r in reports]}


def resolve_segmentation(seq: FrameSequence, cfg: InpaintConfig) -> SegmentationConfig:
    """The run-wide segmentation config (auto-sized on frame 1 when unset)."""
    if cfg.segmentation is not None:
        return cfg.segmentation
    return auto_segmentation_config(seq.frame(1), cfg.target_points_per_cube)


def _temporal_sides(f: int, q: int, radius: int):
    """(label, frame index) pairs, nearest side first: prev, next, prev2, ..."""
    out = []
    for d in range(1, radius + 1):
        suffix = "" if d == 1 else str(d)
        out.append((f"prev{suffix}", f - d))
        out.append((f"next{suffix}", f + d))
    return out


def _inpaint_one_frame(seq: FrameSequence, f: int, cfg: InpaintConfig,
                       seg: SegmentationConfig, mask: Optional[HoleMask],
                       graph_dump_dir=None):
    frame = seq.frame(f)
    report = FrameReport(f=f)
    t0 = time.perf_counter()

    cubes = split_cubes(frame, seg, frame_id=f)
    mask_removed = mask.for_frame(f).removed_points if mask is not None else None
    target_ids = detect_hole_cubes(frame, cubes, cfg.density_ratio, mask_removed)
    if not target_ids:
        report.ms = (time.perf_counter() - t0) * 1e3
        return frame, report

    normals = estimate_normals(frame, cfg.k_normal)[0].normals
    window_stride = cfg.window_stride or seg.voxel_pitch
    max_dist = cfg.temporal_max_dist or seg.voxel_pitch
    icp_tol = cfg.icp_tol_factor * seg.edge_length
    target_set = set(target_ids)
    q = len(seq)

    desc_cache: dict = {}

    def descriptor(cube: Cube):
        if cube.cube_id not in desc_cache:
            try:
                desc_cache[cube.cube_id] = cube_descriptor(
                    cube, normals, cfg.k_graph, cfg.graph.sigma)
            except DescriptorError:
                desc_cache[cube.cube_id] = None
        return desc_cache[cube.cube_id]

    solved = []   # (target cube, solved absolute positions, full cube)
    for cid in target_ids:
        target = cubes[cid]
        rec = CubeRecord(cube_id=cid, n_known=target.n_known)
        report.cubes.append(rec)
        try:
            hole_vox = hole_voxels_for_cube(target, mask_removed)
            if not hole_vox:
                rec.skipped_reason = "no hole voxels"
                continue
            tdesc = descriptor(target)
            if tdesc is None:
                raise DescriptorError(f"target cube {cid} has < 2 known slots")

            candidates = [c for c in cubes
                          if c.cube_id not in target_set
                          and not c.intersects_box(target)
                          and c.n_known >= 3]
            best, dist = find_intra_source(
                target, candidates, tdesc, [descriptor(c) for c in candidates],
                cfg.lambda_dc, cfg.lambda_agtv)
            rec.intra_distance = dist

            intra = structure_match(best, target, cfg.icp_iters, icp_tol).cube
            full = instantiate_missing_slots(target, intra, hole_vox)
            rec.n_missing = full.n_missing
            _, intra_rel = match_correspondents(full, intra)

            sides = []
            for label, af in _temporal_sides(f, q, cfg.temporal_radius):
                if cfg.beta == 0.0:
                    rec.dropped.append(f"{label}: beta is zero")
                    continue
                if not 1 <= af <= q:
                    rec.dropped.append(f"{label}: outside sequence")
                    continue
                try:
                    box = make_search_box(full, cfg.box_scale, af)
                    raw, vote = search_inter_source(full, seq.frame(af), box,
                                                    window_stride)
                    if vote.votes < cfg.vote_threshold * max(vote.total_queries, 1):
                        _record_side(rec, label, vote.votes, None)
                        rec.dropped.append(f"{label}: low confidence "
                                           f"({vote.votes}/{vote.total_queries})")
                        continue
                    matched = match_inter_cube(raw, full, cfg.icp_iters, icp_tol)
                    tw = build_temporal_weights(full, intra_rel, matched.cube,
                                                max_dist, side=label)
                    _record_side(rec, label, vote.votes, tw.coverage)
                    sides.append((tw, matched.cube.positions - full.center))
                except NoInterSourceError as exc:
                    rec.dropped.append(f"{label}: {exc}")

            graph = build_knn_graph(intra_rel, cfg.graph) if cfg.gamma != 0.0 else None
            if graph is not None and graph_dump_dir is not None:
                dump_graph_edges(graph, f"{graph_dump_dir}/frame{f:04d}_cube{cid:05d}.txt")
            system = assemble_system(full, intra_rel, sides, graph, cfg)
            rec.objective_before = objective_value(system, full.relative_positions)
            x = solve_cube(system)
            rec.objective_after = objective_value(system, x)
            rec.residual = solve_residual(system, x)
            solved.append((target, x + full.center, full))
        except _SKIPPABLE as exc:
            rec.skipped_reason = str(exc)

    out = _write_back(frame, solved)
    report.ms = (time.perf_counter() - t0) * 1e3
    return out, report


def _record_side(rec: CubeRecord, label: str, votes, coverage):
    if label == "prev":
        rec.votes_prev, rec.coverage_prev = votes, coverage
    elif label == "next":
        rec.votes_next, rec.coverage_next = votes, coverage
    else:
        rec.extra_sides[label] = {"votes": votes, "coverage": coverage}


def _write_back(frame: PointCloud, solved) -> PointCloud:
    """Merge per-cube solutions into one frame.

    Known points solved by several cubes average their solved positions.
    Newly created points are kept only by the owner cube of their
    placeholder location: the solved cube with the nearest center whose box
    contains it (ties to the lower cube id), which keeps fills single-layer.
    """
    if not solved:
        return frame

    pts = frame.points.copy()
    sums = np.zeros_like(pts)
    counts = np.zeros(len(pts), dtype=np.int64)
    for target, solved_abs, full in solved:
        known = full.known_mask
        src = full.source_index[known]
        np.add.at(sums, src, solved_abs[known])
        np.add.at(counts, src, 1)
    touched = counts > 0
    pts[touched] = sums[touched] / counts[touched, None]

    new_chunks = []
    placeholders = []
    owners_of = []
    for target, solved_abs, full in solved:
        miss = full.missing_mask
        placeholders.append(full.positions[miss])
        new_chunks.append(solved_abs[miss])
        owners_of.append(np.full(int(miss.sum()), target.cube_id, dtype=np.int64))
    placeholders = np.vstack(placeholders) if placeholders else np.zeros((0, 3))
    if placeholders.shape[0]:
        new_pts = np.vstack(new_chunks)
        produced_by = np.concatenate(owners_of)
        best_dist = np.full(len(placeholders), np.inf)
        owner = np.full(len(placeholders), -1, dtype=np.int64)
        for target, _, _ in solved:
            inside = target.contains(placeholders)
            dist = np.linalg.norm(placeholders - target.center, axis=1)
            better = inside & (dist < best_dist)
            best_dist[better] = dist[better]
            owner[better] = target.cube_id
        keep = owner == produced_by
        pts = np.vstack([pts, new_pts[keep]])
    return PointCloud(pts)


def inpaint_frame(seq: FrameSequence, f: int, cfg: InpaintConfig,
                  mask: Optional[HoleMask] = None, graph_dump_dir=None):
    """Inpaint frame f against its original adjacent frames."""
    seg = resolve_segmentation(seq, cfg)
    return _inpaint_one_frame(seq, f, cfg, seg, mask, graph_dump_dir)


def inpaint_sequence(seq: FrameSequence, cfg: InpaintConfig,
                     mask: Optional[HoleMask] = None, graph_dump_dir=None):
    """Inpaint every frame in order; adjacents are always the originals."""
    seg = resolve_segmentation(seq, cfg)
    frames, reports = [], []
    for f in range(1, len(seq) + 1):
        out, rep = _inpaint_one_frame(seq, f, cfg, seg, mask, graph_dump_dir)
        frames.append(out)
        reports.append(rep)
    return FrameSequence(frames), reports
