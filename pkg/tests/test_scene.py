import math

import numpy as np
import pytest

from bisar.errors import DegenerateGeometry, ParseError, ValidationError
from bisar.scene import (CollectionGeometry, Scatterer, SensorPose, TargetModel,
                         bisector_direction, bistatic_angle, builtin_targets,
                         load_target, save_target, target_from_dict, target_to_dict)


def geom(tx_el, tx_az, rx_el, rx_az):
    return CollectionGeometry(SensorPose(tx_el, tx_az), SensorPose(rx_el, rx_az))


def test_bistatic_angle_coincident_poses():
    g = geom(25.0, 140.0, 25.0, 140.0)
    assert bistatic_angle(g) == 0.0


def test_bistatic_angle_planar():
    assert bistatic_angle(geom(0.0, 0.0, 0.0, 60.0)) == pytest.approx(60.0, abs=1e-9)


def test_bistatic_angle_hand_oracle():
    # el 10 both, azimuths 0 and 180: dot = -cos^2(10) + sin^2(10) = -cos(20)
    g = geom(10.0, 0.0, 10.0, 180.0)
    assert bistatic_angle(g) == pytest.approx(160.0, abs=0.1)
    assert bistatic_angle(g) == pytest.approx(math.degrees(math.acos(-math.cos(math.radians(20.0)))), abs=1e-9)


def test_bistatic_angle_symmetric_in_exchange():
    rng = np.random.default_rng(3)
    for _ in range(50):
        a = SensorPose(rng.uniform(0, 89), rng.uniform(0, 360))
        b = SensorPose(rng.uniform(0, 89), rng.uniform(0, 360))
        assert bistatic_angle(CollectionGeometry(a, b)) == pytest.approx(
            bistatic_angle(CollectionGeometry(b, a)), abs=1e-12)


def test_bistatic_angle_zero_iff_same_los():
    rng = np.random.default_rng(4)
    for _ in range(50):
        a = SensorPose(rng.uniform(0, 89), rng.uniform(0, 360))
        b = SensorPose(rng.uniform(0, 89), rng.uniform(0, 360))
        beta = bistatic_angle(CollectionGeometry(a, b))
        same = np.allclose(a.unit_vector, b.unit_vector, atol=1e-9)
        assert (beta < 1e-5) == same


def test_unit_vector_norm():
    rng = np.random.default_rng(5)
    for _ in range(100):
        p = SensorPose(rng.uniform(0, 89.9), rng.uniform(0, 360))
        assert abs(np.linalg.norm(p.unit_vector) - 1.0) < 1e-12


def test_bisector_identity_for_monostatic():
    g = geom(30.0, 75.0, 30.0, 75.0)
    assert np.allclose(bisector_direction(g), g.tx.unit_vector, atol=1e-12)


def test_bisector_symmetry_case():
    g = geom(0.0, 0.0, 0.0, 60.0)
    expect = np.array([math.cos(math.radians(30.0)), math.sin(math.radians(30.0)), 0.0])
    assert np.allclose(bisector_direction(g), expect, atol=1e-12)


def test_bisector_unit_norm_property():
    rng = np.random.default_rng(6)
    for _ in range(100):
        g = geom(rng.uniform(0, 89), rng.uniform(0, 360), rng.uniform(0, 89), rng.uniform(0, 360))
        if bistatic_angle(g) < 179.0:
            assert abs(np.linalg.norm(bisector_direction(g)) - 1.0) < 1e-12


def test_bisector_antipodal_degenerate():
    with pytest.raises(DegenerateGeometry):
        bisector_direction(geom(0.0, 0.0, 0.0, 180.0))


def test_pose_validation():
    with pytest.raises(ValidationError):
        SensorPose(90.0, 0.0)
    with pytest.raises(ValidationError):
        SensorPose(-1.0, 0.0)
    with pytest.raises(ValidationError):
        SensorPose(10.0, 0.0, range=0.0)
    assert SensorPose(10.0, -30.0).azimuth == pytest.approx(330.0)


def test_scatterer_validation():
    with pytest.raises(ValidationError):
        Scatterer(position=np.zeros(3), amplitude=-1.0, sinclair=np.eye(2))
    with pytest.raises(ValidationError):
        Scatterer(position=np.zeros(3), amplitude=1.0, sinclair=np.full((2, 2), np.nan))
    with pytest.raises(ValidationError):
        Scatterer(position=np.zeros(2), amplitude=1.0, sinclair=np.eye(2))


def test_target_needs_scatterers():
    with pytest.raises(ValidationError):
        TargetModel(name="empty", scatterers=())


def test_builtin_targets_distinct_and_deterministic():
    models = builtin_targets()
    assert len(models) == 4
    assert len({t.name for t in models}) == 4
    assert models == builtin_targets()
    extents = [t.extent for t in models]
    assert len(set(extents)) == 4
    for t in models:
        assert 8 <= len(t.scatterers) <= 20
        assert all(np.linalg.norm(s.position) <= t.extent + 1e-12 for s in t.scatterers)


def test_target_roundtrip_via_file(tmp_path):
    for t in builtin_targets():
        path = tmp_path / f"{t.name}.json"
        save_target(t, path)
        assert load_target(path) == t


def test_single_scatterer_file(tmp_path):
    obj = {"name": "pt", "scatterers": [
        {"pos": [0.0, 0.0, 0.0], "amp": 1.0,
         "sinclair": [[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]}]}
    t = target_from_dict(obj)
    assert len(t.scatterers) == 1
    assert np.allclose(t.scatterers[0].sinclair, np.eye(2))


def test_negative_amplitude_rejected():
    obj = {"name": "bad", "scatterers": [
        {"pos": [0.0, 0.0, 0.0], "amp": -1.0,
         "sinclair": [[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]}]}
    with pytest.raises(ValidationError):
        target_from_dict(obj)


def test_unknown_keys_rejected():
    obj = target_to_dict(builtin_targets()[0])
    obj["comment"] = "nope"
    with pytest.raises(ParseError):
        target_from_dict(obj)
    obj = target_to_dict(builtin_targets()[0])
    obj["scatterers"][0]["rcs"] = 5.0
    with pytest.raises(ParseError):
        target_from_dict(obj)


def test_malformed_json_file(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(ParseError):
        load_target(path)
