"""Shared fixtures: synthetic clips, exact-lattice k-space patches, small
run configurations."""

import math

import numpy as np
import pytest

from bisar.config import RunConfig
from bisar.imaging import ClipMeta, ImageClip, KSpacePatch
from bisar.scene import CollectionGeometry, SensorPose


def make_clip(pixels, label="toy", channel="HH", beta=0.0, elevation=10.0,
              azimuth=0.0, spacing=0.3) -> ImageClip:
    meta = ClipMeta(class_label=label, channel=channel, mean_bistatic_angle=beta,
                    rx_elevation=elevation, rx_azimuth_center=azimuth)
    return ImageClip(pixels=np.asarray(pixels, dtype=complex),
                     pixel_spacing=spacing, meta=meta)


def lattice_patch(points, n=32, dk=1.0, channel="HH", label="toy", beta=0.0):
    """Patch whose samples sit exactly one per k-grid bin.

    ``points`` are (row_offset, col_offset, complex coefficient); the formed
    clip is then an exact sum of single-pixel deltas at (n/2 + row_offset,
    n/2 + col_offset) with the given coefficients.
    """
    ms = (np.arange(n) - n / 2 + 0.5) * dk
    ky, kx = np.meshgrid(ms, ms, indexing="ij")
    kvecs = np.stack([kx.ravel(), ky.ravel()], axis=1)
    dx = 2.0 * math.pi / (n * dk)
    values = np.zeros(n * n, dtype=complex)
    for row_off, col_off, coeff in points:
        x, y = col_off * dx, row_off * dx
        values += coeff * np.exp(1j * (kvecs[:, 0] * x + kvecs[:, 1] * y))
    geom = CollectionGeometry(SensorPose(45.0, 0.0), SensorPose(45.0, 0.0))
    return KSpacePatch(kvecs=kvecs, values=values,
                       frequencies=np.full(n * n, 3e9),
                       pose_index=np.zeros(n * n, dtype=int),
                       geometries=(geom,), pose_betas=np.array([beta]),
                       channel=channel, class_label=label,
                       rx_elevation=45.0, rx_azimuth_center=0.0)


def small_config(**overrides) -> RunConfig:
    base = dict(seed=11, clips_per_class=8, poses_per_clip=24,
                frequency_count=24, clip_size=32,
                rx_offsets_deg=(0.0, 50.0, -86.0))
    base.update(overrides)
    return RunConfig(**base)


@pytest.fixture(scope="session")
def default_config() -> RunConfig:
    return RunConfig(seed=20260810)
