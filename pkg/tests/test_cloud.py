import numpy as np
import pytest

from dpcinpaint.cloud import (FrameSequence, Point, PointCloud, SpatialIndex,
                              estimate_normals, nearest_neighbors)

from conftest import random_cloud


def brute_force_nn(points, query, k):
    """Oracle: exhaustive scan with the (distance, index) tie rule."""
    d = np.linalg.norm(points - query, axis=1)
    order = np.lexsort((np.arange(len(points)), d))[:k]
    return [(int(i), float(d[i])) for i in order]


class TestTypes:
    def test_point_rejects_nan(self):
        with pytest.raises(ValueError):
            Point(0.0, float("nan"), 0.0)

    def test_cloud_rejects_non_finite(self):
        with pytest.raises(ValueError):
            PointCloud([[0, 0, 0], [np.inf, 0, 0]])

    def test_normals_length_checked(self):
        with pytest.raises(ValueError):
            PointCloud([[0, 0, 0]], normals=[[1, 0, 0], [0, 1, 0]])

    def test_normals_unit_checked(self):
        with pytest.raises(ValueError):
            PointCloud([[0, 0, 0]], normals=[[2, 0, 0]])

    def test_sequence_needs_a_frame(self):
        with pytest.raises(ValueError):
            FrameSequence([])

    def test_sequence_one_based_access(self):
        seq = FrameSequence([PointCloud([[0, 0, 0]]), PointCloud([[1, 1, 1]])])
        assert seq.frame(1).points[0, 0] == 0
        assert seq.frame(2).points[0, 0] == 1
        with pytest.raises(IndexError):
            seq.frame(0)


class TestNearestNeighbors:
    def test_query_on_indexed_point(self):
        idx = SpatialIndex([[0, 0, 0], [1, 0, 0], [3, 0, 0]])
        assert idx.nearest([1, 0, 0], 1) == [(1, 0.0)]

    def test_forced_by_geometry(self):
        idx = SpatialIndex([[0, 0, 0], [1, 0, 0], [3, 0, 0]])
        got = [i for i, _ in idx.nearest([1.1, 0, 0], 2)]
        assert got == [1, 0]

    def test_k_zero_rejected(self):
        idx = SpatialIndex([[0, 0, 0]])
        with pytest.raises(ValueError):
            nearest_neighbors(idx, [0, 0, 0], 0)

    def test_k_larger_than_n(self):
        idx = SpatialIndex([[0, 0, 0], [1, 0, 0]])
        assert len(idx.nearest([0, 0, 0], 10)) == 2

    def test_tie_breaks_by_lower_index(self):
        # four corners of a square, query dead center: all equidistant
        idx = SpatialIndex([[1, 1, 0], [-1, 1, 0], [1, -1, 0], [-1, -1, 0]])
        got = [i for i, _ in idx.nearest([0, 0, 0], 3)]
        assert got == [0, 1, 2]

    def test_matches_exhaustive_scan(self):
        cloud = random_cloud(500, seed=3)
        idx = SpatialIndex(cloud.points)
        rng = np.random.default_rng(4)
        queries = rng.uniform(-12, 12, (100, 3))
        for q in queries:
            k = int(rng.integers(1, 8))
            assert idx.nearest(q, k) == pytest.approx(brute_force_nn(cloud.points, q, k))

    def test_matches_exhaustive_scan_large_random_property(self):
        # randomized clouds up to 2000 points
        for seed in range(5):
            rng = np.random.default_rng(seed)
            n = int(rng.integers(10, 2000))
            pts = rng.uniform(-5, 5, (n, 3))
            idx = SpatialIndex(pts)
            for q in rng.uniform(-6, 6, (20, 3)):
                got = idx.nearest(q, 5)
                want = brute_force_nn(pts, q, 5)
                assert [i for i, _ in got] == [i for i, _ in want]


class TestEstimateNormals:
    def test_plane_normals(self):
        rng = np.random.default_rng(0)
        pts = np.column_stack([rng.uniform(-5, 5, (200, 2)), np.zeros(200)])
        cloud, n_degenerate = estimate_normals(PointCloud(pts), 12)
        assert n_degenerate == 0
        assert np.allclose(np.abs(cloud.normals[:, 2]), 1.0, atol=1e-6)
        assert np.allclose(cloud.normals[:, :2], 0.0, atol=1e-6)

    def test_sphere_normals_within_5_degrees(self):
        rng = np.random.default_rng(1)
        v = rng.normal(size=(2000, 3))
        pts = v / np.linalg.norm(v, axis=1)[:, None]
        cloud, _ = estimate_normals(PointCloud(pts), 10)
        # analytic oracle: the sphere normal at p is +-p
        cos = np.abs(np.einsum("ij,ij->i", cloud.normals, pts))
        assert np.all(cos >= np.cos(np.radians(5.0)))

    def test_sphere_normals_point_outward(self):
        rng = np.random.default_rng(2)
        v = rng.normal(size=(1500, 3))
        pts = v / np.linalg.norm(v, axis=1)[:, None]
        cloud, _ = estimate_normals(PointCloud(pts), 10)
        outward = np.einsum("ij,ij->i", cloud.normals, pts)
        assert np.mean(outward > 0) > 0.99

    def test_collinear_flags_degenerate(self):
        pts = np.column_stack([np.linspace(0, 9, 10), np.zeros(10), np.zeros(10)])
        cloud, n_degenerate = estimate_normals(PointCloud(pts), 5)
        assert n_degenerate > 0
        assert np.allclose(cloud.normals[0], [0, 0, 1])

    def test_too_few_points(self):
        with pytest.raises(ValueError):
            estimate_normals(PointCloud([[0, 0, 0], [1, 0, 0]]), 3)

    def test_unit_length_invariant(self):
        cloud, _ = estimate_normals(random_cloud(300, seed=5), 12)
        lengths = np.linalg.norm(cloud.normals, axis=1)
        assert np.max(np.abs(lengths - 1.0)) <= 1e-6

    def test_deterministic(self):
        cloud = random_cloud(200, seed=6)
        a, _ = estimate_normals(cloud, 12)
        b, _ = estimate_normals(cloud, 12)
        assert np.array_equal(a.normals, b.normals)
