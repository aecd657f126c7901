"""Per-cube quadratic program: assembly and closed-form solve.

The objective over a target cube's slot coordinates c is

    || O_bar (c - c_t) ||^2 + alpha || O (c - c_s) ||^2 + gamma tr(c^T L c)
      + beta sum_sides || D_side (c - W_side c_side) ||^2

where O selects missing slots, O_bar known slots, L is the spatial-graph
Laplacian and W_side maps slots to inter-source points. Setting the gradient
to zero gives one symmetric positive-definite system shared by the three
coordinate columns. D_side is the 0/1 diagonal of rows that actually have a
temporal correspondent; with full coverage D_prev + D_next = 2I and the
system is exactly the classic closed form.

Zero contributions (beta == 0, an absent side, zero coverage, gamma == 0)
are skipped before assembly, so dropped-term configurations execute the
identical floating-point path as their structurally reduced counterparts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .cubes import Cube, SegmentationConfig
from .errors import SingularSystemError, SolverError
from .graphs import GraphConfig, SpatialGraph, TemporalWeights

RESIDUAL_RTOL = 1e-9


@dataclass
class InpaintConfig:
    """Every tunable of the pipeline; defaults follow the reference setup."""

    alpha: float = 1.0
    beta: float = 0.5
    gamma: float = 0.5
    segmentation: Optional[SegmentationConfig] = None   # None -> auto-sized
    graph: GraphConfig = field(default_factory=GraphConfig)
    k_graph: int = 8                 # descriptor K-NN graph
    lambda_dc: float = 1.0
    lambda_agtv: float = 1.0
    k_normal: int = 12
    icp_iters: int = 10
    icp_tol_factor: float = 1e-6     # tol = factor * edge_length
    box_scale: float = 2.0           # search box edge / cube edge
    window_stride: Optional[float] = None     # None -> voxel_pitch
    temporal_radius: int = 1
    vote_threshold: float = 0.2      # drop a side when votes < threshold * slots
    temporal_max_dist: Optional[float] = None  # None -> voxel_pitch
    density_ratio: float = 0.05
    target_points_per_cube: int = 200

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0 or self.gamma < 0:
            raise ValueError("alpha, beta and gamma must be nonnegative")
        if self.temporal_radius < 1:
            raise ValueError("temporal_radius must be >= 1")


@dataclass
class CubeSystem:
    """Assembled normal equations A c = B for one target cube."""

    a: sparse.csr_matrix            # (n, n) symmetric positive definite
    b: np.ndarray                   # (n, 3)
    omega: np.ndarray               # (n,) bool, True = missing
    c_target_rel: np.ndarray        # (n, 3) cube slot positions (relative)
    intra_rel: np.ndarray           # (n, 3) intra correspondent positions
    graph: Optional[SpatialGraph]
    sides: List[Tuple[TemporalWeights, np.ndarray]]   # (weights, inter rel points)
    alpha: float
    beta: float
    gamma: float

    @property
    def n(self) -> int:
        return self.b.shape[0]


def assemble_system(target: Cube, intra_rel: np.ndarray,
                    sides: List[Tuple[TemporalWeights, np.ndarray]],
                    graph: Optional[SpatialGraph], cfg: InpaintConfig) -> CubeSystem:
    """Build A and B; raises SingularSystemError if any diagonal entry is 0."""
    n = len(target)
    omega = target.missing_mask
    omega_d = omega.astype(np.float64)
    omega_bar = 1.0 - omega_d

    diag = omega_bar * omega_bar + cfg.alpha * (omega_d * omega_d)
    active_sides = []
    for tw, inter_rel in sides:
        if tw is None or cfg.beta == 0.0 or tw.mapping.shape[1] == 0 or tw.coverage == 0.0:
            continue
        active_sides.append((tw, inter_rel))
        diag = diag + cfg.beta * tw.row_has_link.astype(np.float64)

    a = sparse.diags(diag, format="csr")
    if cfg.gamma != 0.0 and graph is not None:
        a = (a + cfg.gamma * graph.laplacian).tocsr()
        diag = diag + cfg.gamma * graph.degree

    dead = np.flatnonzero(diag <= 0.0)
    if len(dead):
        raise SingularSystemError(
            f"slot {int(dead[0])} of cube {target.cube_id} has zero diagonal mass"
        )

    c_t = target.relative_positions
    b = omega_bar[:, None] ** 2 * c_t + cfg.alpha * omega_d[:, None] ** 2 * intra_rel
    for tw, inter_rel in active_sides:
        b = b + cfg.beta * (tw.mapping @ inter_rel)

    return CubeSystem(a, b, omega, c_t, intra_rel, graph, active_sides,
                      cfg.alpha, cfg.beta, cfg.gamma)


def solve_cube(system: CubeSystem) -> np.ndarray:
    """Solve the three shared-matrix systems; checks the residual bound."""
    try:
        lu = splu(system.a.tocsc())
        x = lu.solve(system.b)
    except Exception as exc:  # singular factorization
        raise SolverError(f"factorization failed: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise SolverError("solution contains non-finite values")
    resid = system.a @ x - system.b
    for col in range(3):
        bound = RESIDUAL_RTOL * max(float(np.linalg.norm(system.b[:, col])), 1e-300)
        if float(np.linalg.norm(resid[:, col])) > bound:
            raise SolverError(f"residual bound exceeded on coordinate {col}")
    return x


def solve_residual(system: CubeSystem, x: np.ndarray) -> float:
    """Max per-column relative residual of a solution (for reporting)."""
    resid = system.a @ x - system.b
    rel = 0.0
    for col in range(3):
        denom = max(float(np.linalg.norm(system.b[:, col])), 1e-300)
        rel = max(rel, float(np.linalg.norm(resid[:, col])) / denom)
    return rel


def objective_value(system: CubeSystem, c: np.ndarray) -> float:
    """The inpainting objective, evaluated literally term by term."""
    c = np.asarray(c, dtype=np.float64)
    omega = system.omega
    known = ~omega
    val = float(np.sum((c[known] - system.c_target_rel[known]) ** 2))
    val += system.alpha * float(np.sum((c[omega] - system.intra_rel[omega]) ** 2))
    if system.gamma != 0.0 and system.graph is not None:
        lc = system.graph.laplacian @ c
        val += system.gamma * float(np.einsum("ij,ij->", c, lc))
    for tw, inter_rel in system.sides:
        linked = tw.row_has_link
        pulled = tw.mapping @ inter_rel
        val += system.beta * float(np.sum((c[linked] - pulled[linked]) ** 2))
    return val
