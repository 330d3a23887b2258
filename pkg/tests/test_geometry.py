import math

import numpy as np
import pytest

from fisheyeaug.errors import ConfigError, IncidenceOutOfRange
from fisheyeaug.geometry import (
    FisheyeIntrinsics,
    PinholeIntrinsics,
    RigPose,
    WarpParams,
    fisheye_ray,
    fisheye_to_source,
    fisheye_to_source_batch,
    incidence_angle,
    max_incidence,
    pinhole_project,
    rig_transform,
    rotate_about_output_center,
    rotation_from_euler,
    source_to_fisheye,
)

CS_PINHOLE = PinholeIntrinsics(500.0, 2048, 1024)


def params(f=300.0, out=640, pinhole=CS_PINHOLE, **pose_kw):
    return WarpParams(FisheyeIntrinsics(f, out, out), pinhole, RigPose(**pose_kw))


def test_incidence_angle_examples():
    assert incidence_angle(0.0, 0.0, 250.0) == 0.0
    assert incidence_angle(250.0, 0.0, 250.0) == pytest.approx(1.0, abs=1e-15)
    # sqrt(300^2 + 400^2) = 500
    assert incidence_angle(300.0, 400.0, 250.0) == pytest.approx(2.0, abs=1e-15)


def test_incidence_angle_rejects_bad_focal():
    with pytest.raises(ConfigError):
        incidence_angle(1.0, 1.0, 0.0)


def test_fisheye_ray_on_axis():
    assert fisheye_ray(0.0, 0.0, 250.0, 500.0) == (0.0, 0.0, 500.0)


def test_fisheye_ray_45_degrees():
    # theta = pi/4, tan = 1: the ray lands at x = z1.
    x, y, z = fisheye_ray(250.0 * math.pi / 4.0, 0.0, 250.0, 500.0)
    assert x == pytest.approx(500.0, abs=1e-9)
    assert y == 0.0
    assert z == 500.0


def test_fisheye_ray_one_radian():
    x, y, z = fisheye_ray(250.0, 0.0, 250.0, 500.0)
    assert x == pytest.approx(500.0 * math.tan(1.0), abs=1e-9)
    assert (y, z) == (0.0, 500.0)


def test_fisheye_ray_rejects_grazing_incidence():
    with pytest.raises(IncidenceOutOfRange):
        fisheye_ray(250.0 * math.pi / 2.0, 0.0, 250.0, 500.0)


def test_rotation_identity():
    assert np.array_equal(rotation_from_euler(0.0, 0.0, 0.0), np.eye(3))


def test_rotation_z_90_permutes_axes():
    r = rotation_from_euler(0.0, 0.0, 90.0)
    assert np.allclose(r @ np.array([1.0, 0.0, 0.0]), [0.0, 1.0, 0.0], atol=1e-12)


def test_rotation_orthonormal_single():
    r = rotation_from_euler(10.0, 20.0, 30.0)
    assert np.abs(r.T @ r - np.eye(3)).max() < 1e-12
    assert abs(np.linalg.det(r) - 1.0) < 1e-12


def test_rotation_orthonormal_random_angles():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        ax, ay, az = rng.uniform(-180.0, 180.0, size=3)
        r = rotation_from_euler(ax, ay, az)
        assert np.abs(r.T @ r - np.eye(3)).max() < 1e-12
        assert abs(np.linalg.det(r) - 1.0) < 1e-12


def test_rig_transform_identity():
    m = rig_transform(RigPose(), FisheyeIntrinsics(300.0), CS_PINHOLE)
    assert np.array_equal(m, np.eye(4))


def test_rig_transform_translation_normalization():
    fish = FisheyeIntrinsics(300.0, 640, 640)
    m = rig_transform(RigPose(t_x=0.5), fish, CS_PINHOLE)
    assert m[:3, 3].tolist() == [320.0, 0.0, 0.0]
    m = rig_transform(RigPose(t_z=0.4), fish, CS_PINHOLE)
    assert m[:3, 3].tolist() == [0.0, 0.0, 200.0]
    assert m[3].tolist() == [0.0, 0.0, 0.0, 1.0]


def test_pinhole_project_center():
    assert pinhole_project((0.0, 0.0, 500.0), CS_PINHOLE) == (1024.0, 512.0)


def test_pinhole_project_off_axis():
    x = 500.0 * math.tan(1.0)
    u, v = pinhole_project((x, 0.0, 500.0), CS_PINHOLE)
    assert u == pytest.approx(500.0 * x / 500.0 + 1024.0, abs=1e-9)
    assert v == 512.0


def test_pinhole_project_behind_camera_is_invalid():
    assert pinhole_project((1.0, 1.0, 0.0), CS_PINHOLE) is None
    assert pinhole_project((1.0, 1.0, -5.0), CS_PINHOLE) is None


def test_chain_center_fixed_point():
    for f in (200.0, 250.0, 300.0, 400.0, 1000.0):
        assert fisheye_to_source((320.0, 320.0), params(f=f)) == (1024.0, 512.0)


def test_chain_composed_example():
    u, v = fisheye_to_source((570.0, 320.0), params(f=250.0))
    assert u == pytest.approx(1024.0 + 500.0 * math.tan(1.0), abs=1e-9)
    assert v == pytest.approx(512.0, abs=1e-12)


def test_chain_corner_invalid_at_f200():
    # Corner radius 320*sqrt(2) = 452.5 px -> theta = 2.26 rad > pi/2.
    for corner in ((0.0, 0.0), (639.0, 0.0), (0.0, 639.0), (639.0, 639.0)):
        assert fisheye_to_source(corner, params(f=200.0)) is None


def test_batch_matches_scalar_chain():
    p = params(f=260.0, rot_x=4.0, rot_y=-7.0, rot_z=11.0, t_x=0.2, t_y=-0.05, t_z=0.1)
    rng = np.random.default_rng(3)
    px = rng.uniform(0, 639, size=200)
    py = rng.uniform(0, 639, size=200)
    u, v, valid = fisheye_to_source_batch(px, py, p)
    for i in range(len(px)):
        scalar = fisheye_to_source((px[i], py[i]), p)
        if scalar is None:
            assert not valid[i]
        else:
            assert valid[i]
            assert scalar[0] == pytest.approx(u[i], abs=1e-12)
            assert scalar[1] == pytest.approx(v[i], abs=1e-12)


def test_radius_linear_in_focal_length():
    # Equidistant model: r = f * theta, so doubling f doubles the radius
    # of a fixed world ray exactly.
    fish1 = FisheyeIntrinsics(231.0)
    fish2 = FisheyeIntrinsics(462.0)
    rng = np.random.default_rng(11)
    u = rng.uniform(0, 2047, size=500)
    v = rng.uniform(0, 1023, size=500)
    cx, cy = fish1.center
    x1, y1 = source_to_fisheye(u, v, fish1, CS_PINHOLE)
    x2, y2 = source_to_fisheye(u, v, fish2, CS_PINHOLE)
    r1 = np.hypot(x1 - cx, y1 - cy)
    r2 = np.hypot(x2 - cx, y2 - cy)
    keep = r1 > 1e-9
    assert np.abs(r2[keep] / r1[keep] - 2.0).max() < 1e-12


def test_round_trip_identity_pose():
    p = params(f=300.0)
    rng = np.random.default_rng(42)
    px = rng.uniform(0, 639, size=4000)
    py = rng.uniform(0, 639, size=4000)
    u, v, valid = fisheye_to_source_batch(px, py, p)
    assert valid.sum() >= 1000
    px, py, u, v = px[valid][:1000], py[valid][:1000], u[valid][:1000], v[valid][:1000]
    bx, by = source_to_fisheye(u, v, p.fisheye, p.pinhole)
    err = np.hypot(bx - px, by - py)
    assert err.max() < 1e-9


@pytest.mark.parametrize("phi", [-25.0, -15.0, -5.0, 5.0, 15.0, 25.0])
def test_z_rotation_equals_rotated_lookup(phi):
    p_rot = params(f=280.0, rot_z=phi)
    p_id = params(f=280.0)
    rng = np.random.default_rng(5)
    px = rng.uniform(0, 639, size=2000)
    py = rng.uniform(0, 639, size=2000)
    u1, v1, valid1 = fisheye_to_source_batch(px, py, p_rot)
    qx, qy = rotate_about_output_center(px, py, phi, p_id.fisheye)
    u2, v2, valid2 = fisheye_to_source_batch(qx, qy, p_id)
    both = valid1 & valid2
    assert both.sum() > 100
    assert np.hypot(u1[both] - u2[both], v1[both] - v2[both]).max() < 1e-9


def test_forward_translation_magnifies():
    # Moving the rig forward shrinks the source-plane spacing of adjacent
    # central output pixels: the same output area samples less source.
    p_id = params(f=300.0)
    p_fwd = params(f=300.0, t_z=0.3)
    pts = np.array([[320.0, 320.0], [321.0, 320.0], [320.0, 321.0]])

    def spacing(p):
        u, v, valid = fisheye_to_source_batch(pts[:, 0], pts[:, 1], p)
        assert valid.all()
        return math.hypot(u[1] - u[0], v[1] - v[0]), math.hypot(u[2] - u[0], v[2] - v[0])

    dx_id, dy_id = spacing(p_id)
    dx_fwd, dy_fwd = spacing(p_fwd)
    assert dx_fwd < dx_id
    assert dy_fwd < dy_id


def test_max_incidence_values():
    assert max_incidence(params(f=200.0)) == pytest.approx(320.0 * math.sqrt(2) / 200.0, abs=1e-12)
    assert max_incidence(params(f=400.0)) == pytest.approx(320.0 * math.sqrt(2) / 400.0, abs=1e-12)


def test_intrinsics_validation():
    with pytest.raises(ConfigError):
        FisheyeIntrinsics(0.0)
    with pytest.raises(ConfigError):
        FisheyeIntrinsics(300.0, 0, 640)
    with pytest.raises(ConfigError):
        PinholeIntrinsics(-1.0)
    with pytest.raises(ConfigError):
        RigPose(rot_x=float("nan"))
