"""Dynamic 3D point cloud inpainting.

Repairs holes in multi-frame point cloud sequences by combining intra-frame
self-similarity, inter-frame correspondence and a graph smoothness prior;
each hole-containing cube is solved in closed form as a small symmetric
positive-definite system.
"""

from .bench import BenchmarkReport, run_benchmark
from .cloud import (FrameSequence, Point, PointCloud, SpatialIndex,
                    estimate_normals, nearest_neighbors)
from .cubes import (Cube, SegmentationConfig, Slot, auto_segmentation_config,
                    instantiate_missing_slots, match_correspondents, split_cubes)
from .graphs import (GraphConfig, SpatialGraph, TemporalWeights,
                     build_knn_graph, build_temporal_weights, smoothness)
from .holes import (HoleMask, detect_hole_cubes, restore_holes, synthesize_holes)
from .inter import (SearchBox, VoteResult, co_located_cube, match_inter_cube,
                    search_inter_source)
from .intra import CubeDescriptor, cube_descriptor, find_intra_source
from .metrics import MetricReport, gpsnr, nshd, temporal_consistency
from .pipeline import FrameReport, inpaint_frame, inpaint_sequence
from .ply import load_ply, load_sequence, save_ply, save_sequence
from .registration import RigidTransform, structure_match
from .solver import (CubeSystem, InpaintConfig, assemble_system,
                     objective_value, solve_cube)

__version__ = "0.1.0"

__all__ = [
    "BenchmarkReport", "Cube", "CubeDescriptor", "CubeSystem", "FrameReport",
    "FrameSequence", "GraphConfig", "HoleMask", "InpaintConfig", "MetricReport",
    "Point", "PointCloud", "RigidTransform", "SearchBox", "SegmentationConfig",
    "Slot", "SpatialGraph", "SpatialIndex", "TemporalWeights", "VoteResult",
    "assemble_system", "auto_segmentation_config", "build_knn_graph",
    "build_temporal_weights", "co_located_cube", "cube_descriptor",
    "detect_hole_cubes", "estimate_normals", "find_intra_source", "gpsnr",
    "inpaint_frame", "inpaint_sequence", "instantiate_missing_slots",
    "load_ply", "load_sequence", "match_correspondents", "match_inter_cube",
    "nearest_neighbors", "nshd", "objective_value", "restore_holes",
    "run_benchmark", "save_ply", "save_sequence", "search_inter_source",
    "smoothness", "solve_cube", "split_cubes", "structure_match",
    "synthesize_holes", "temporal_consistency",
]
