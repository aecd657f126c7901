import numpy as np
import pytest

from dpcinpaint.cloud import FrameSequence, PointCloud
from dpcinpaint.errors import PlyDataError, PlyParseError
from dpcinpaint.ply import (load_ply, load_sequence, save_ply, save_sequence,
                            sequence_paths)

from conftest import random_cloud


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_bytes(text.encode() if isinstance(text, str) else text)
    return p


class TestLoad:
    def test_single_ascii_vertex(self, tmp_path):
        p = write(tmp_path, "one.ply",
                  "ply\nformat ascii 1.0\nelement vertex 1\n"
                  "property float x\nproperty float y\nproperty float z\n"
                  "end_header\n0 0 0\n")
        cloud = load_ply(p)
        assert len(cloud) == 1
        assert np.array_equal(cloud.points, [[0.0, 0.0, 0.0]])
        assert cloud.normals is None

    def test_normals_detected(self, tmp_path):
        p = write(tmp_path, "n.ply",
                  "ply\nformat ascii 1.0\nelement vertex 2\n"
                  "property float x\nproperty float y\nproperty float z\n"
                  "property float nx\nproperty float ny\nproperty float nz\n"
                  "end_header\n0 0 0 0 0 1\n1 0 0 1 0 0\n")
        cloud = load_ply(p)
        assert cloud.normals is not None
        assert cloud.normals.shape == (2, 3)

    def test_extra_properties_ignored(self, tmp_path):
        p = write(tmp_path, "c.ply",
                  "ply\nformat ascii 1.0\ncomment made by nobody\n"
                  "element vertex 1\n"
                  "property float x\nproperty float y\nproperty float z\n"
                  "property uchar red\nproperty uchar green\nproperty uchar blue\n"
                  "end_header\n1 2 3 255 0 0\n")
        cloud = load_ply(p)
        assert np.array_equal(cloud.points, [[1.0, 2.0, 3.0]])

    def test_binary_float32(self, tmp_path):
        header = ("ply\nformat binary_little_endian 1.0\nelement vertex 2\n"
                  "property float x\nproperty float y\nproperty float z\n"
                  "end_header\n").encode()
        payload = np.array([[1, 2, 3], [4, 5, 6]], dtype="<f4").tobytes()
        p = write(tmp_path, "b.ply", header + payload)
        cloud = load_ply(p)
        assert np.array_equal(cloud.points, [[1, 2, 3], [4, 5, 6]])

    def test_malformed_header_names_line(self, tmp_path):
        p = write(tmp_path, "bad.ply",
                  "ply\nformat ascii 1.0\nelement vertex\nend_header\n")
        with pytest.raises(PlyParseError, match="element vertex"):
            load_ply(p)

    def test_not_a_ply(self, tmp_path):
        p = write(tmp_path, "no.ply", "obj\n")
        with pytest.raises(PlyParseError):
            load_ply(p)

    def test_big_endian_rejected(self, tmp_path):
        p = write(tmp_path, "be.ply",
                  "ply\nformat binary_big_endian 1.0\nelement vertex 0\n"
                  "property float x\nproperty float y\nproperty float z\n"
                  "end_header\n")
        with pytest.raises(PlyParseError, match="format"):
            load_ply(p)

    def test_non_finite_coordinate_names_index(self, tmp_path):
        p = write(tmp_path, "nan.ply",
                  "ply\nformat ascii 1.0\nelement vertex 2\n"
                  "property float x\nproperty float y\nproperty float z\n"
                  "end_header\n0 0 0\nnan 0 0\n")
        with pytest.raises(PlyDataError, match="1"):
            load_ply(p)

    def test_missing_xyz_property(self, tmp_path):
        p = write(tmp_path, "noz.ply",
                  "ply\nformat ascii 1.0\nelement vertex 1\n"
                  "property float x\nproperty float y\nend_header\n0 0\n")
        with pytest.raises(PlyParseError, match="z"):
            load_ply(p)


class TestRoundTrip:
    def test_save_load_save_byte_identical(self, tmp_path):
        # the round-trip oracle: write, reload, rewrite, compare bytes
        cloud = random_cloud(100, seed=11)
        f1 = tmp_path / "a.ply"
        f2 = tmp_path / "b.ply"
        save_ply(cloud, f1, format="binary-le")
        save_ply(load_ply(f1), f2, format="binary-le")
        assert f1.read_bytes() == f2.read_bytes()

    def test_binary_bit_exact(self, tmp_path):
        cloud = random_cloud(1000, seed=12)
        f = tmp_path / "c.ply"
        save_ply(cloud, f, format="binary-le")
        assert np.array_equal(load_ply(f).points, cloud.points)

    def test_ascii_error_below_bound(self, tmp_path):
        cloud = random_cloud(500, seed=13)
        f = tmp_path / "d.ply"
        save_ply(cloud, f, format="ascii")
        err = np.abs(load_ply(f).points - cloud.points).max()
        assert err <= 1e-7 * cloud.bbox_diagonal()

    def test_empty_cloud(self, tmp_path):
        f = tmp_path / "e.ply"
        save_ply(PointCloud(np.zeros((0, 3))), f, format="ascii")
        assert len(load_ply(f)) == 0

    def test_normals_round_trip(self, tmp_path):
        rng = np.random.default_rng(14)
        v = rng.normal(size=(50, 3))
        normals = v / np.linalg.norm(v, axis=1)[:, None]
        cloud = PointCloud(rng.uniform(-1, 1, (50, 3)), normals)
        f = tmp_path / "f.ply"
        save_ply(cloud, f, format="binary-le")
        back = load_ply(f)
        assert np.array_equal(back.points, cloud.points)
        assert np.array_equal(back.normals, cloud.normals)

    def test_bad_format_arg(self, tmp_path):
        with pytest.raises(ValueError):
            save_ply(random_cloud(3), tmp_path / "x.ply", format="binary-be")


class TestSequences:
    def test_pattern_discovery_sorted(self, tmp_path):
        seq = FrameSequence([random_cloud(10, seed=s) for s in range(3)])
        save_sequence(seq, tmp_path, "frame_%04d.ply")
        found = sequence_paths(tmp_path, "frame_%04d.ply")
        assert [i for i, _ in found] == [1, 2, 3]
        back = load_sequence(tmp_path, "frame_%04d.ply")
        assert len(back) == 3
        for a, b in zip(back.frames, seq.frames):
            assert np.array_equal(a.points, b.points)

    def test_no_match_raises(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_sequence(tmp_path, "missing_%04d.ply")

    def test_pattern_without_placeholder(self, tmp_path):
        with pytest.raises(ValueError):
            sequence_paths(tmp_path, "fixed.ply")
