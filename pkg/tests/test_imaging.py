import math

import numpy as np
import pytest

from conftest import lattice_patch
from bisar.errors import DegenerateGeometry, EmptySupport, ValidationError
from bisar.imaging import (SPEED_OF_LIGHT, FrequencySweep, add_noise, collect_patch,
                           equalize_support, form_clip, mainlobe_width,
                           phase_history_sample, theoretical_resolution)
from bisar.scene import CollectionGeometry, Scatterer, SensorPose, TargetModel


def point_target(position=(0.0, 0.0, 0.0), amplitude=1.0, name="pt"):
    s = Scatterer(position=np.asarray(position, dtype=float), amplitude=amplitude,
                  sinclair=np.eye(2, dtype=complex))
    return TargetModel(name=name, scatterers=(s,))


def ring_poses(count, center_az, arc_deg, elevation=0.0, rng_m=1e6):
    azs = np.linspace(center_az - arc_deg / 2, center_az + arc_deg / 2, count)
    return [SensorPose(elevation, float(a), rng_m) for a in azs]


def paired_sweep(beta_deg, count=64, arc_deg=None, fc=1e9, bw=450e6):
    """Transmitter and receiver rotate together at fixed bistatic angle; the
    arc is sized so the cross-range k-extent stays below the radial extent."""
    if arc_deg is None:
        arc_deg = math.degrees(0.93 * bw / (fc + bw / 2))
    psis = np.linspace(-arc_deg / 2, arc_deg / 2, count)
    tx = [SensorPose(0.0, float(p - beta_deg / 2), 1e6) for p in psis]
    rx = [SensorPose(0.0, float(p + beta_deg / 2), 1e6) for p in psis]
    return tx, rx, FrequencySweep(fc, bw, count)


def test_sweep_validation():
    with pytest.raises(ValidationError):
        FrequencySweep(1e9, 2.5e9, 16)   # negative frequencies
    with pytest.raises(ValidationError):
        FrequencySweep(1e9, 1e8, 1)
    f = FrequencySweep(1e9, 4.5e8, 5).frequencies()
    assert f[0] == pytest.approx(0.775e9) and f[-1] == pytest.approx(1.225e9)


def test_origin_scatterer_is_pure_amplitude():
    t = point_target(amplitude=2.5)
    g = CollectionGeometry(SensorPose(17.0, 33.0), SensorPose(9.0, 250.0))
    for f in (0.8e9, 1.0e9, 1.3e9):
        assert phase_history_sample(t, g, f, "HH") == pytest.approx(2.5 + 0j, abs=1e-12)


def test_cross_channel_of_identity_sinclair_is_zero():
    t = point_target(position=(1.0, 2.0, 0.0))
    g = CollectionGeometry(SensorPose(10.0, 0.0), SensorPose(10.0, 40.0))
    assert phase_history_sample(t, g, 1e9, "HV") == 0.0
    assert phase_history_sample(t, g, 1e9, "VH") == 0.0


def test_symmetric_pair_gives_real_cosine():
    # two equal scatterers at +/- d along the bisector ground direction: the
    # sample is 2 a cos(|k| d); the range is pushed far enough out that the
    # wavefront-curvature phase falls below the 1e-9 symmetry budget
    beta = 40.0
    g = CollectionGeometry(SensorPose(0.0, -beta / 2, 1e11), SensorPose(0.0, beta / 2, 1e11))
    d = 1.75
    a = 0.7
    scatterers = tuple(
        Scatterer(position=np.array([sx * d, 0.0, 0.0]), amplitude=a,
                  sinclair=np.eye(2, dtype=complex)) for sx in (+1, -1))
    t = TargetModel(name="pair", scatterers=scatterers)
    f = 1e9
    v = phase_history_sample(t, g, f, "HH")
    kappa = 2.0 * (2.0 * math.pi * f / SPEED_OF_LIGHT) * math.cos(math.radians(beta / 2))
    assert v.real == pytest.approx(2 * a * math.cos(kappa * d), rel=1e-9)
    assert abs(v.imag) < 1e-9 * a


def test_phase_history_linearity():
    rng = np.random.default_rng(7)
    g = CollectionGeometry(SensorPose(12.0, 10.0), SensorPose(14.0, 75.0))
    scat = [Scatterer(position=rng.normal(size=3), amplitude=rng.uniform(0.1, 2),
                      sinclair=rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
            for _ in range(6)]
    ta = TargetModel(name="a", scatterers=tuple(scat[:3]))
    tb = TargetModel(name="b", scatterers=tuple(scat[3:]))
    tu = TargetModel(name="u", scatterers=tuple(scat))
    for ch in ("HH", "HV", "VV"):
        va = phase_history_sample(ta, g, 1.1e9, ch)
        vb = phase_history_sample(tb, g, 1.1e9, ch)
        vu = phase_history_sample(tu, g, 1.1e9, ch)
        assert vu == pytest.approx(va + vb, rel=1e-12)


def test_collect_patch_cardinality():
    t = point_target()
    sweep = FrequencySweep(1e9, 1e8, 2)
    patch = collect_patch(t, SensorPose(10.0, 0.0), [SensorPose(10.0, 5.0)], sweep, "HH")
    assert len(patch) == 2
    assert len(patch.samples) == 2
    assert patch.samples[0].channel == "HH"


def test_monostatic_kvec_magnitudes():
    t = point_target()
    sweep = FrequencySweep(1e9, 4.5e8, 8)
    poses = ring_poses(4, 0.0, 10.0, elevation=0.0)
    patch = collect_patch(t, poses, poses, sweep, "HH")
    mags = np.linalg.norm(patch.kvecs, axis=1)
    expect = 2.0 * (2.0 * math.pi * patch.frequencies / SPEED_OF_LIGHT)
    assert np.allclose(mags, expect, rtol=1e-12)


def test_bistatic_kvec_magnitudes_at_60_degrees():
    t = point_target()
    sweep = FrequencySweep(1e9, 4.5e8, 8)
    tx, rx, _ = paired_sweep(60.0, count=16, arc_deg=8.0)
    patch = collect_patch(t, tx, rx, sweep, "HH")
    mags = np.linalg.norm(patch.kvecs, axis=1)
    expect = 2.0 * (2.0 * math.pi * patch.frequencies / SPEED_OF_LIGHT) * math.cos(math.radians(30.0))
    assert np.allclose(mags, expect, rtol=1e-9)
    assert patch.mean_bistatic_angle == pytest.approx(60.0, abs=1e-9)


def test_collect_patch_degenerate_geometry():
    t = point_target()
    sweep = FrequencySweep(1e9, 1e8, 2)
    with pytest.raises(DegenerateGeometry):
        collect_patch(t, SensorPose(0.0, 0.0), [SensorPose(0.0, 180.0)], sweep, "HH")


def test_form_clip_point_response_centered():
    patch = lattice_patch([(0, 0, 1.0)], n=32)
    clip = form_clip(patch, 32)
    mag = np.abs(clip.pixels)
    assert np.unravel_index(mag.argmax(), mag.shape) == (16, 16)
    assert mag.max() == pytest.approx(1.0, rel=1e-9)


def test_form_clip_shift_theorem():
    for row, col in ((0, 5), (3, 0), (-7, 2)):
        patch = lattice_patch([(row, col, 1.0)], n=32)
        clip = form_clip(patch, 32)
        mag = np.abs(clip.pixels)
        assert np.unravel_index(mag.argmax(), mag.shape) == (16 + row, 16 + col)


def test_form_clip_parseval():
    rng = np.random.default_rng(8)
    pts = [(int(r), int(c), complex(a, b)) for r, c, a, b in
           rng.uniform(-8, 8, size=(5, 4))]
    patch = lattice_patch(pts, n=32)
    clip = form_clip(patch, 32)
    grid_energy = np.sum(np.abs(patch.values) ** 2)   # one sample per bin
    assert clip.energy() == pytest.approx(grid_energy / 32 ** 2, rel=1e-9)


def test_form_clip_collision_averaging_keeps_amplitude():
    # duplicating every sample must not change the clip (collisions average)
    patch = lattice_patch([(0, 0, 1.0)], n=16)
    dup = type(patch)(kvecs=np.vstack([patch.kvecs, patch.kvecs]),
                      values=np.concatenate([patch.values, patch.values]),
                      frequencies=np.concatenate([patch.frequencies, patch.frequencies]),
                      pose_index=np.concatenate([patch.pose_index, patch.pose_index]),
                      geometries=patch.geometries, pose_betas=patch.pose_betas,
                      channel=patch.channel, class_label=patch.class_label,
                      rx_elevation=patch.rx_elevation,
                      rx_azimuth_center=patch.rx_azimuth_center)
    a = form_clip(patch, 16).pixels
    b = form_clip(dup, 16).pixels
    assert np.allclose(a, b, atol=1e-12)


def test_form_clip_validation():
    patch = lattice_patch([(0, 0, 1.0)], n=16)
    with pytest.raises(ValidationError):
        form_clip(patch, 20)
    with pytest.raises(ValidationError):
        form_clip(patch, 4)


def test_form_clip_zero_extent():
    patch = lattice_patch([(0, 0, 1.0)], n=16)
    collapsed = patch._replaced(np.arange(len(patch)) == 0)
    with pytest.raises(EmptySupport):
        form_clip(collapsed, 16)


def test_coincident_scatterers_add_at_peak():
    # all scatterers at the same spot: peak magnitude is the amplitude sum
    patch = lattice_patch([(2, 3, 1.0), (2, 3, 0.5), (2, 3, 0.25)], n=32)
    clip = form_clip(patch, 32)
    assert np.abs(clip.pixels).max() == pytest.approx(1.75, rel=1e-9)


def test_theoretical_resolution_values():
    assert theoretical_resolution(450e6, 0.0) == pytest.approx(0.3331, abs=5e-4)
    assert theoretical_resolution(450e6, 60.0) == pytest.approx(
        0.3331 / math.cos(math.radians(30.0)), abs=1e-3)
    with pytest.raises(DegenerateGeometry):
        theoretical_resolution(450e6, 179.9999)
    with pytest.raises(ValidationError):
        theoretical_resolution(450e6, -1.0)
    with pytest.raises(ValidationError):
        theoretical_resolution(450e6, 180.0)


def measured_width(beta, window="none", n=64):
    t = point_target()
    tx, rx, sweep = paired_sweep(beta, count=n)
    patch = collect_patch(t, tx, rx, sweep, "HH")
    clip = form_clip(patch, n, window)
    return mainlobe_width(clip, 1), clip


def test_point_response_width_tracks_resolution():
    for beta in (0.0, 30.0, 60.0, 90.0):
        width, _ = measured_width(beta)
        expect = theoretical_resolution(450e6, beta)
        assert abs(width - expect) / expect < 0.10


def test_equalize_support_noop_when_reference_large():
    patch = lattice_patch([(1, 2, 1.0)], n=16)
    out = equalize_support(patch, patch.principal_extent() * 2)
    assert np.array_equal(out.kvecs, patch.kvecs)
    assert np.array_equal(out.values, patch.values)


def test_equalize_support_filters_and_never_grows():
    patch = lattice_patch([(1, 2, 1.0)], n=16)
    ref = patch.principal_extent() / 2
    out = equalize_support(patch, ref)
    assert len(out) < len(patch)
    assert out.principal_extent() <= ref * (1 + 1e-6)
    kc = patch.kvecs.mean(axis=0)
    assert np.all(np.abs(out.kvecs - kc) <= ref / 2 + 1e-9 * ref)


def test_equalize_support_empty():
    patch = lattice_patch([(0, 0, 1.0)], n=16)
    with pytest.raises(ValidationError):
        equalize_support(patch, -1.0)
    # a tiny square around the centroid of a lattice misses every sample
    with pytest.raises(EmptySupport):
        equalize_support(patch, 1e-6)


def test_equalized_widths_agree_across_angles():
    # trim everything to the 100-degree support and compare widths
    patches = {}
    for beta in (0.0, 30.0, 60.0, 90.0, 100.0):
        t = point_target()
        tx, rx, sweep = paired_sweep(beta, count=64)
        patches[beta] = collect_patch(t, tx, rx, sweep, "HH")
    ref = patches[100.0].principal_extent()
    widths = []
    for beta, patch in patches.items():
        clip = form_clip(equalize_support(patch, ref), 64)
        widths.append(mainlobe_width(clip, 1))
    assert max(widths) / min(widths) < 1.10
    # the trimmed monostatic clip matches the untrimmed 100-degree clip
    full = mainlobe_width(form_clip(patches[100.0], 64), 1)
    trimmed_mono = mainlobe_width(form_clip(equalize_support(patches[0.0], ref), 64), 1)
    assert abs(trimmed_mono - full) / full < 0.10


def test_add_noise_level_and_determinism():
    patch = lattice_patch([(0, 0, 1.0)], n=32)
    n1 = add_noise(patch, 20.0, np.random.default_rng(5))
    n2 = add_noise(patch, 20.0, np.random.default_rng(5))
    assert np.array_equal(n1.values, n2.values)
    noise = n1.values - patch.values
    measured = 10 * math.log10(np.mean(np.abs(patch.values) ** 2) / np.mean(np.abs(noise) ** 2))
    assert measured == pytest.approx(20.0, abs=1.0)
