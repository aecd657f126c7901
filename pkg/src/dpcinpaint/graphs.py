"""Spatial K-NN graphs, combinatorial Laplacians, temporal weight matrices.

The spatial graph is a union-symmetrized K-NN graph with Gaussian edge
weights w = exp(-d^2 / (2 sigma^2)); its combinatorial Laplacian L = D - W
has zero row sums and is positive semidefinite, so z^T L z equals the
weighted edge-difference sum used as the smoothness prior.

Temporal weights are 0/1 row-substochastic matrices linking each target
slot to its nearest inter-source point in relative location, gated by a
maximum matching distance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.spatial import cKDTree

from .cubes import Cube
from .errors import GraphError


@dataclass
class GraphConfig:
    k: int = 8
    sigma: float = 1.0
    epsilon_smooth: float = 0.0   # test-only bound; not a runtime parameter

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")


@dataclass
class SpatialGraph:
    n: int
    edges: np.ndarray          # (e, 2) int64 with i < j, each edge once
    weights: np.ndarray        # (e,) in (0, 1]
    degree: np.ndarray         # (n,)
    laplacian: sparse.csr_matrix

    def laplacian_dense(self) -> np.ndarray:
        return self.laplacian.toarray()


@dataclass
class TemporalWeights:
    mapping: sparse.csr_matrix   # (n, m) 0/1, at most one nonzero per row
    side: str                    # "previous" | "next"
    coverage: float              # fraction of rows with a correspondent

    @property
    def row_has_link(self) -> np.ndarray:
        return np.asarray(self.mapping.sum(axis=1)).ravel() > 0


def knn_edges(points: np.ndarray, k: int, sigma: float):
    """Union-symmetrized K-NN edge list with Gaussian weights.

    Returns (edges (e, 2) int64 i < j, weights (e,) float64).
    """
    pts = np.ascontiguousarray(points, dtype=np.float64)
    n = pts.shape[0]
    if n < 2:
        raise GraphError(f"need >= 2 points for a K-NN graph, got {n}")
    kk = min(k, n - 1)
    _, idx = cKDTree(pts).query(pts, k=kk + 1, workers=-1)
    idx = np.atleast_2d(idx)

    rows = np.repeat(np.arange(n, dtype=np.int64), kk + 1)
    cols = idx.ravel().astype(np.int64)
    keep = rows != cols           # drop self matches (robust to duplicates)
    pairs = np.stack([np.minimum(rows[keep], cols[keep]),
                      np.maximum(rows[keep], cols[keep])], axis=1)
    # a duplicate point's neighbor list may still contain itself-as-other;
    # cap each source at kk true neighbors
    counts = np.cumsum(keep.reshape(n, kk + 1), axis=1)
    keep2 = (counts <= kk).ravel()[keep]
    pairs = pairs[keep2]
    edges = np.unique(pairs, axis=0)

    diff = pts[edges[:, 0]] - pts[edges[:, 1]]
    d2 = np.einsum("ij,ij->i", diff, diff)
    weights = np.exp(-d2 / (2.0 * sigma * sigma))
    return edges, weights


def build_knn_graph(support, cfg: GraphConfig) -> SpatialGraph:
    """Spatial graph over the intra-source correspondent positions.

    `support` is an (n, 3) array of support positions or a Cube.
    """
    pts = support.positions if isinstance(support, Cube) else np.asarray(support, dtype=np.float64)
    n = pts.shape[0]
    edges, weights = knn_edges(pts, cfg.k, cfg.sigma)

    i, j = edges[:, 0], edges[:, 1]
    w = sparse.coo_matrix(
        (np.concatenate([weights, weights]),
         (np.concatenate([i, j]), np.concatenate([j, i]))),
        shape=(n, n),
    ).tocsr()
    degree = np.asarray(w.sum(axis=1)).ravel()
    laplacian = (sparse.diags(degree) - w).tocsr()
    return SpatialGraph(n, edges, weights, degree, laplacian)


def smoothness(graph: SpatialGraph, signal) -> float:
    """Quadratic-form smoothness: sum over edges of w_ij * ||z_i - z_j||^2."""
    z = np.asarray(signal, dtype=np.float64)
    if z.ndim == 1:
        z = z[:, None]
    if z.shape[0] != graph.n:
        raise ValueError(f"signal length {z.shape[0]} != graph size {graph.n}")
    diff = z[graph.edges[:, 0]] - z[graph.edges[:, 1]]
    return float(np.sum(graph.weights * np.sum(diff * diff, axis=1)))


def build_temporal_weights(target: Cube, intra_correspondent_rel: np.ndarray,
                           inter: Optional[Cube], max_dist: float,
                           side: str) -> TemporalWeights:
    """0/1 correspondence rows from target slots to inter-source points.

    Known slots query at their own relative position; missing slots query at
    their intra-source correspondent's relative position. A row links to its
    nearest inter point iff that distance is <= max_dist, else stays zero.
    """
    if max_dist <= 0:
        raise ValueError("max_dist must be positive")
    n = len(target)
    if inter is None or len(inter) == 0:
        return TemporalWeights(sparse.csr_matrix((n, 0)), side, 0.0)

    queries = np.where(target.missing_mask[:, None],
                       intra_correspondent_rel, target.relative_positions)
    inter_rel = inter.positions - target.center
    d, idx = cKDTree(inter_rel).query(queries, k=1, workers=-1)
    linked = d <= max_dist
    rows = np.flatnonzero(linked)
    mapping = sparse.csr_matrix(
        (np.ones(len(rows)), (rows, idx[linked])), shape=(n, len(inter))
    )
    return TemporalWeights(mapping, side, float(np.count_nonzero(linked)) / n)


def dump_graph_edges(graph: SpatialGraph, path) -> None:
    """Debug dump: one `i j w` line per edge."""
    with open(path, "w") as fh:
        for (i, j), w in zip(graph.edges, graph.weights):
            fh.write(f"{i} {j} {w!r}\n")
