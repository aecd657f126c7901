"""Benchmark harness: corrupt once, run each method, report metric table.

In-repo baselines stand in for external tools: `none-fill` leaves the
corrupted input untouched, `plane-fill` fits a plane to each hole's
boundary ring and resamples it at voxel pitch, and `intra-only` is the
beta = 0 ablation of the proposed method (no temporal terms).
"""

from __future__ import annotations

import dataclasses
import json
import time
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .cloud import FrameSequence, PointCloud
from .holes import HoleMask, synthesize_holes
from .metrics import gpsnr, nshd, temporal_consistency
from .pipeline import inpaint_sequence, resolve_segmentation
from .solver import InpaintConfig

METHOD_NAMES = ("proposed", "intra-only", "none-fill", "plane-fill")


@dataclass
class MethodResult:
    name: str
    gpsnr_db: float = float("nan")
    nshd: float = float("nan")
    temporal_consistency: float = float("nan")
    seconds: float = 0.0
    per_frame_gpsnr: List[float] = field(default_factory=list)
    per_frame_nshd: List[float] = field(default_factory=list)
    error: Optional[str] = None


@dataclass
class BenchmarkReport:
    methods: List[MethodResult] = field(default_factory=list)

    def to_json_dict(self, include_timing: bool = False) -> dict:
        rows = []
        for m in self.methods:
            row = {
                "name": m.name,
                "gpsnr_db": m.gpsnr_db,
                "nshd": m.nshd,
                "temporal_consistency": m.temporal_consistency,
            }
            if include_timing:
                row["seconds"] = m.seconds
            if m.error is not None:
                row["error"] = m.error
            rows.append(row)
        return {"methods": rows}

    def to_text_table(self) -> str:
        header = f"{'method':<12} {'GPSNR(dB)':>10} {'NSHD(x1e-7)':>12} {'temporal':>10} {'seconds':>8}"
        lines = [header, "-" * len(header)]
        for m in self.methods:
            if m.error is not None:
                lines.append(f"{m.name:<12} failed: {m.error}")
                continue
            lines.append(
                f"{m.name:<12} {m.gpsnr_db:>10.4f} {m.nshd / 1e-7:>12.4f} "
                f"{m.temporal_consistency:>10.3e} {m.seconds:>8.2f}"
            )
        return "\n".join(lines)

    def save_json(self, path, include_timing: bool = False) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(include_timing), fh, indent=1)
            fh.write("\n")


def none_fill(corrupted: FrameSequence, mask: HoleMask, cfg: InpaintConfig) -> FrameSequence:
    return corrupted


def plane_fill(corrupted: FrameSequence, mask: HoleMask, cfg: InpaintConfig) -> FrameSequence:
    """Fit a plane to each hole's boundary ring; resample it at voxel pitch."""
    seg = resolve_segmentation(corrupted, cfg)
    pitch = seg.voxel_pitch
    radius = mask.radius
    out = []
    for f, frame in enumerate(corrupted.frames, start=1):
        pts = frame.points
        added = []
        for seed in mask.for_frame(f).seeds:
            d = np.linalg.norm(pts - seed, axis=1)
            ring = pts[(d > radius) & (d <= radius + 2.0 * pitch)]
            if len(ring) < 3:
                continue
            centroid = ring.mean(axis=0)
            centered = ring - centroid
            _, _, vt = np.linalg.svd(centered, full_matrices=False)
            e1, e2 = vt[0], vt[1]
            ticks = np.arange(-radius, radius + pitch / 2, pitch)
            uu, ww = np.meshgrid(ticks, ticks, indexing="ij")
            keep = uu ** 2 + ww ** 2 <= radius ** 2
            grid = centroid + np.outer(uu[keep], e1) + np.outer(ww[keep], e2)
            added.append(grid)
        if added:
            out.append(PointCloud(np.vstack([pts] + added)))
        else:
            out.append(frame)
    return FrameSequence(out)


def proposed(corrupted: FrameSequence, mask: HoleMask, cfg: InpaintConfig) -> FrameSequence:
    return inpaint_sequence(corrupted, cfg, mask)[0]


def intra_only(corrupted: FrameSequence, mask: HoleMask, cfg: InpaintConfig) -> FrameSequence:
    ablated = dataclasses.replace(cfg, beta=0.0)
    return inpaint_sequence(corrupted, ablated, mask)[0]


_METHODS = {
    "proposed": proposed,
    "intra-only": intra_only,
    "none-fill": none_fill,
    "plane-fill": plane_fill,
}


def run_benchmark(seq: FrameSequence, cfg: InpaintConfig, methods,
                  n_holes: int, radius: float, rng_seed: int) -> BenchmarkReport:
    """Corrupt `seq` once, run every method on the same corruption, report.

    Rows follow the `methods` argument order; per-method failures are
    recorded without aborting the rest.
    """
    corrupted, mask = synthesize_holes(seq, n_holes, radius, rng_seed)
    seg = resolve_segmentation(corrupted, cfg)
    region_radius = radius + 2.0 * seg.voxel_pitch

    report = BenchmarkReport()
    for name in methods:
        if name not in _METHODS:
            raise ValueError(f"unknown method {name!r}; choose from {sorted(_METHODS)}")
        result = MethodResult(name=name)
        report.methods.append(result)
        t0 = time.perf_counter()
        try:
            restored = _METHODS[name](corrupted, mask, cfg)
            result.seconds = time.perf_counter() - t0
            for f in range(1, len(seq) + 1):
                result.per_frame_gpsnr.append(gpsnr(seq.frame(f), restored.frame(f)))
                result.per_frame_nshd.append(nshd(seq.frame(f), restored.frame(f)))
            result.gpsnr_db = float(np.mean(result.per_frame_gpsnr))
            result.nshd = float(np.mean(result.per_frame_nshd))
            if len(seq) >= 2:
                result.temporal_consistency = temporal_consistency(
                    restored, mask, region_radius)
        except Exception as exc:
            result.seconds = time.perf_counter() - t0
            result.error = f"{type(exc).__name__}: {exc}"
    return report
