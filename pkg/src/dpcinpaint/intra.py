"""Intra-frame source search: normal-based cube descriptors and matching.

A cube is summarized by the direct component (renormalized mean of its
known-slot normals) and the anisotropic graph total variation (weighted L1
sum of normal differences over the cube's K-NN graph edges). The intra
source is the non-overlapping, non-hole cube minimizing a combined
descriptor distance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cubes import Cube
from .errors import DescriptorError, NoCandidateError
from .graphs import knn_edges

EPS_DIV = 1e-12


@dataclass(frozen=True)
class CubeDescriptor:
    dc: np.ndarray        # unit 3-vector
    agtv: float           # >= 0
    n_points: int


def cube_descriptor(cube: Cube, frame_normals: np.ndarray, k_graph: int = 8,
                    sigma: float = 1.0) -> CubeDescriptor:
    """DC + AGTV descriptor over a cube's known slots.

    agtv = sum over undirected K-NN graph edges of w_ij * ||n_i - n_j||_1
    with Gaussian edge weights; each edge counted once.
    """
    known = cube.known_mask
    n_known = int(np.count_nonzero(known))
    if n_known < 2:
        raise DescriptorError(
            f"cube {cube.cube_id} has {n_known} known slots; descriptor needs >= 2"
        )
    normals = frame_normals[cube.source_index[known]]
    mean = normals.mean(axis=0)
    norm = np.linalg.norm(mean)
    dc = mean / norm if norm > 1e-12 else normals[0].copy()

    edges, weights = knn_edges(cube.relative_positions[known], k_graph, sigma)
    l1 = np.abs(normals[edges[:, 0]] - normals[edges[:, 1]]).sum(axis=1)
    agtv = float(np.sum(weights * l1))
    return CubeDescriptor(dc, agtv, n_known)


def descriptor_distance(a: CubeDescriptor, b: CubeDescriptor,
                        lambda_dc: float = 1.0, lambda_agtv: float = 1.0) -> float:
    """Combined DC/AGTV dissimilarity; both terms normalized to ~[0, 1]."""
    dc_term = 1.0 - float(np.dot(a.dc, b.dc))
    agtv_term = abs(a.agtv - b.agtv) / (a.agtv + b.agtv + EPS_DIV)
    return lambda_dc * dc_term + lambda_agtv * agtv_term


def find_intra_source(target: Cube, candidates, target_descriptor: CubeDescriptor,
                      candidate_descriptors, lambda_dc: float = 1.0,
                      lambda_agtv: float = 1.0):
    """argmin of the descriptor distance over admissible candidates.

    `candidates` must already exclude hole cubes and cubes whose box
    intersects the target's; descriptors align with the candidate list
    (None entries mark descriptor-invalid cubes, which are skipped). Ties
    break by smaller center distance to the target, then lower cube id.
    Returns (best cube, its distance).
    """
    best = None
    best_key = None
    for cand, desc in zip(candidates, candidate_descriptors):
        if desc is None:
            continue
        dist = descriptor_distance(target_descriptor, desc, lambda_dc, lambda_agtv)
        center_dist = float(np.linalg.norm(cand.center - target.center))
        key = (dist, center_dist, cand.cube_id)
        if best_key is None or key < best_key:
            best, best_key = cand, key
    if best is None:
        raise NoCandidateError(f"no admissible intra-source candidate for cube {target.cube_id}")
    return best, best_key[0]
