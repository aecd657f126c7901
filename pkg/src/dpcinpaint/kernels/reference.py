"""Pure numpy/scipy implementations of the hot kernels.

Used when the compiled extension is unavailable (or disabled via
DPC_INPAINT_DISABLE_NATIVE=1). Results match the native kernels except on
exact nearest-neighbor distance ties, which are measure-zero for the float
geometry these paths see.
"""

import numpy as np
from scipy.spatial import cKDTree


def window_vote_counts(box_points, rel_known, centers, half_window):
    """Vote counts for candidate windows in the inter-frame cube search.

    For every window center u and every target slot offset r, the nearest
    box point to (r + u) is found; the window scores one vote per slot whose
    nearest neighbor falls inside the axis-aligned cube of half-side
    `half_window` centered at u.

    box_points : (m, 3) points of the adjacent frame inside the search box
    rel_known  : (s, 3) relative positions of the target cube's known slots
    centers    : (w, 3) candidate window centers
    returns    : (w,) int64 vote counts
    """
    box_points = np.ascontiguousarray(box_points, dtype=np.float64)
    rel_known = np.ascontiguousarray(rel_known, dtype=np.float64)
    centers = np.ascontiguousarray(centers, dtype=np.float64)
    w, s = centers.shape[0], rel_known.shape[0]
    if w == 0 or s == 0 or box_points.shape[0] == 0:
        return np.zeros(w, dtype=np.int64)
    tree = cKDTree(box_points)
    queries = (rel_known[None, :, :] + centers[:, None, :]).reshape(-1, 3)
    _, idx = tree.query(queries, k=1, workers=-1)
    nn = box_points[idx].reshape(w, s, 3)
    inside = np.all(np.abs(nn - centers[:, None, :]) <= half_window, axis=2)
    return inside.sum(axis=1).astype(np.int64)
