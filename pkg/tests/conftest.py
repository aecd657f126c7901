"""Shared synthetic geometry builders.

Surfaces are built with nearest-neighbor spacing around one length unit so
the default Gaussian edge-weight scale (sigma = 1) operates in its intended
regime. The bumpy surface is deliberately non-self-similar (random-phase
multi-frequency relief), so intra-frame matching is imperfect while
temporal correspondence across slowly moving frames stays strong.
"""

import numpy as np
import pytest

from dpcinpaint.cloud import PointCloud, FrameSequence


def bumpy_heights(xy, seed=7, amp=2.5, phase_shift=0.0):
    rng = np.random.default_rng(seed)
    z = np.zeros(len(xy))
    for freq in (0.11, 0.23, 0.37):
        ax, ay = rng.uniform(0.5, 1.0, 2) * amp / 2
        px, py = rng.uniform(0, 2 * np.pi, 2)
        z += ax * np.sin(freq * xy[:, 0] + px + phase_shift)
        z += ay * np.cos(freq * xy[:, 1] + py - 0.6 * phase_shift)
    return z


def bumpy_surface(n=4000, extent=60.0, seed=7, jitter=0.25, phase_shift=0.0):
    """Structured height-field cloud, spacing ~ extent/sqrt(n)."""
    rng = np.random.default_rng(seed + 1)
    side = int(np.sqrt(n))
    ticks = np.linspace(-extent / 2, extent / 2, side)
    gx, gy = np.meshgrid(ticks, ticks, indexing="ij")
    xy = np.column_stack([gx.ravel(), gy.ravel()])
    xy = xy + rng.uniform(-jitter, jitter, xy.shape)
    z = bumpy_heights(xy, seed=seed, phase_shift=phase_shift)
    return PointCloud(np.column_stack([xy, z]))


def plane_grid(nx=20, ny=20, spacing=1.0, z=0.0):
    gx, gy = np.meshgrid(np.arange(nx) * spacing, np.arange(ny) * spacing,
                         indexing="ij")
    pts = np.column_stack([gx.ravel(), gy.ravel(), np.full(gx.size, z)])
    return PointCloud(pts)


def grid_cloud_3d(n_side=7, spacing=1.0):
    t = np.arange(n_side) * spacing
    gx, gy, gz = np.meshgrid(t, t, t, indexing="ij")
    return PointCloud(np.column_stack([gx.ravel(), gy.ravel(), gz.ravel()]))


def random_cloud(n=500, seed=0, scale=10.0):
    rng = np.random.default_rng(seed)
    return PointCloud(rng.uniform(-scale, scale, (n, 3)))


def moving_surface_sequence(q=3, n=4000, extent=60.0, seed=7,
                            step=(2.0, 1.0, 0.0), deform=0.15):
    """Rigidly translating, slowly deforming surface: one frame per time step.

    Each frame is an independently jittered sampling of the same relief, so
    consecutive frames are distinct point sets (like real scans).
    """
    frames = []
    step = np.asarray(step, dtype=np.float64)
    for f in range(q):
        cloud = bumpy_surface(n=n, extent=extent, seed=seed + 13 * f,
                              phase_shift=deform * f)
        frames.append(PointCloud(cloud.points + step * f))
    return FrameSequence(frames)


def rotation_matrix(axis, angle):
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    k = np.array([[0, -axis[2], axis[1]],
                  [axis[2], 0, -axis[0]],
                  [-axis[1], axis[0], 0]])
    return np.eye(3) + np.sin(angle) * k + (1 - np.cos(angle)) * (k @ k)


@pytest.fixture
def rng():
    return np.random.default_rng(42)
