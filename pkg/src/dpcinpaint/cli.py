"""Command line interface: `dpc-inpaint run` and `dpc-inpaint bench`.

Outputs are deterministic for fixed inputs, config and seeds; wall-clock
timing goes to the console and is only written into JSON reports when
--timing is passed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .cubes import SegmentationConfig
from .graphs import GraphConfig
from .holes import HoleMask
from .pipeline import inpaint_sequence, reports_to_json_dict
from .ply import load_sequence, save_sequence
from .solver import InpaintConfig
from . import bench as bench_mod
from . import kernels


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("inpainting parameters")
    g.add_argument("--alpha", type=float, default=1.0, help="intra-source fidelity weight")
    g.add_argument("--beta", type=float, default=0.5, help="temporal consistency weight")
    g.add_argument("--gamma", type=float, default=0.5, help="graph smoothness weight")
    g.add_argument("--sigma", type=float, default=1.0, help="Gaussian edge-weight scale")
    g.add_argument("--knn-k", type=int, default=8, help="K of the spatial K-NN graph")
    g.add_argument("--k-graph", type=int, default=8, help="K of the descriptor graph")
    g.add_argument("--edge-length", type=float, default=None,
                   help="cube edge length (default: auto from density)")
    g.add_argument("--stride", type=float, default=None,
                   help="cube lattice stride (default: edge/2)")
    g.add_argument("--voxel-pitch", type=float, default=None,
                   help="voxel pitch (default: edge/8)")
    g.add_argument("--box-scale", type=float, default=2.0,
                   help="search box edge / cube edge ratio")
    g.add_argument("--window-stride", type=float, default=None,
                   help="sliding window stride (default: voxel pitch)")
    g.add_argument("--temporal-radius", type=int, default=1,
                   help="number of adjacent frames per side")
    g.add_argument("--vote-threshold", type=float, default=0.2,
                   help="drop a side when votes < threshold * slots")
    g.add_argument("--temporal-max-dist", type=float, default=None,
                   help="temporal link distance gate (default: voxel pitch)")
    g.add_argument("--icp-iters", type=int, default=10, help="structure-match iterations")
    g.add_argument("--icp-tol", type=float, default=1e-6,
                   help="structure-match RMS tolerance as a fraction of edge length")
    g.add_argument("--density-ratio", type=float, default=0.05,
                   help="interior-empty voxel ratio for automatic hole detection")
    g.add_argument("--target-points", type=int, default=200,
                   help="average points per cube for auto edge sizing")


def _config_from_args(args) -> InpaintConfig:
    seg = None
    if args.edge_length is not None:
        edge = args.edge_length
        seg = SegmentationConfig(
            edge_length=edge,
            stride=args.stride if args.stride is not None else edge / 2.0,
            voxel_pitch=args.voxel_pitch if args.voxel_pitch is not None else edge / 8.0,
        )
    elif args.stride is not None or args.voxel_pitch is not None:
        raise SystemExit("--stride/--voxel-pitch require --edge-length")
    return InpaintConfig(
        alpha=args.alpha, beta=args.beta, gamma=args.gamma,
        segmentation=seg,
        graph=GraphConfig(k=args.knn_k, sigma=args.sigma),
        k_graph=args.k_graph,
        icp_iters=args.icp_iters, icp_tol_factor=args.icp_tol,
        box_scale=args.box_scale, window_stride=args.window_stride,
        temporal_radius=args.temporal_radius, vote_threshold=args.vote_threshold,
        temporal_max_dist=args.temporal_max_dist,
        density_ratio=args.density_ratio,
        target_points_per_cube=args.target_points,
    )


def _cmd_run(args) -> int:
    seq = load_sequence(args.input, args.pattern)
    cfg = _config_from_args(args)
    mask = HoleMask.load_json(args.mask) if args.mask else None
    if args.dump_graphs:
        os.makedirs(args.dump_graphs, exist_ok=True)
    result, reports = inpaint_sequence(seq, cfg, mask, graph_dump_dir=args.dump_graphs)
    save_sequence(result, args.output, args.pattern)
    total_ms = sum(r.ms for r in reports)
    n_cubes = sum(len(r.cubes) for r in reports)
    n_skipped = sum(1 for r in reports for c in r.cubes if c.skipped_reason)
    print(f"inpainted {len(seq)} frame(s), {n_cubes} target cube(s), "
          f"{n_skipped} skipped, {total_ms:.0f} ms total", file=sys.stderr)
    if args.report:
        with open(args.report, "w") as fh:
            json.dump(reports_to_json_dict(reports, include_timing=args.timing),
                      fh, indent=1)
            fh.write("\n")
    return 0


def _cmd_bench(args) -> int:
    seq = load_sequence(args.input, args.pattern)
    cfg = _config_from_args(args)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    report = bench_mod.run_benchmark(seq, cfg, methods,
                                     n_holes=args.holes, radius=args.radius,
                                     rng_seed=args.seed)
    print(report.to_text_table())
    if args.out:
        report.save_json(args.out, include_timing=args.timing)
    if args.save_mask:
        from .holes import synthesize_holes
        _, mask = synthesize_holes(seq, args.holes, args.radius, args.seed)
        mask.save_json(args.save_mask)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dpc-inpaint",
        description="Dynamic 3D point cloud inpainting "
                    f"(kernel backend: {kernels.BACKEND})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="inpaint a PLY sequence")
    run.add_argument("--input", required=True, help="directory with input frames")
    run.add_argument("--pattern", default="frame_%04d.ply",
                     help="frame filename pattern, e.g. name_%%04d.ply")
    run.add_argument("--output", required=True, help="directory for inpainted frames")
    run.add_argument("--mask", default=None,
                     help="hole mask JSON (evaluation mode target detection)")
    run.add_argument("--report", default=None, help="write a JSON run report here")
    run.add_argument("--dump-graphs", default=None,
                     help="directory for per-cube graph edge-list dumps")
    run.add_argument("--timing", action="store_true",
                     help="include wall-clock timing in the JSON report "
                          "(breaks byte-level report determinism)")
    _add_config_flags(run)
    run.set_defaults(func=_cmd_run)

    bench = sub.add_parser("bench", help="synthetic-hole benchmark on a PLY sequence")
    bench.add_argument("--input", required=True, help="directory with input frames")
    bench.add_argument("--pattern", default="frame_%04d.ply")
    bench.add_argument("--holes", type=int, default=5, help="holes per frame")
    bench.add_argument("--radius", type=float, required=True, help="hole ball radius")
    bench.add_argument("--seed", type=int, default=0, help="hole synthesis RNG seed")
    bench.add_argument("--methods", default="proposed,intra-only,none-fill,plane-fill")
    bench.add_argument("--out", default=None, help="write the benchmark JSON here")
    bench.add_argument("--save-mask", default=None, help="write the hole mask JSON here")
    bench.add_argument("--timing", action="store_true",
                       help="include per-method seconds in the JSON report")
    _add_config_flags(bench)
    bench.set_defaults(func=_cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
