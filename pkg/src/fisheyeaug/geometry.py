"""Fisheye-to-rectilinear projection geometry.

The virtual fisheye camera follows the equidistant model: a ray at
incidence angle theta to the optical axis lands at image radius
``r = f_fish * theta``.  Synthesizing a fisheye image from a rectilinear
source works backwards, pixel by pixel:

1. Offset the output pixel from the fisheye principal point and recover
   the incidence angle ``theta = |offset| / f_fish``.
2. Cast the ray onto the plane ``z = z1`` in front of the fisheye camera,
   giving a world point ``(x1, y1, z1)`` with
   ``(x1, y1) = z1 * tan(theta) * offset / |offset|``.
3. Move the world point into the source (pinhole) camera frame with a
   rigid transform ``p_cam = R @ p_world + t``.
4. Project with the source intrinsics:
   ``u = focal * x2 / z2 + cols / 2`` and likewise for v.

Coordinate conventions
----------------------
Both cameras use x right, y down, z forward (image-aligned, right
handed).  The fisheye principal point is ``(out_width / 2,
out_height / 2)``; the source principal point is ``(cols / 2, rows / 2)``.
The plane distance z1 doubles as the source focal length, so with the
identity pose the chain degenerates to a pure zoom ("z-aug").

Rotations compose as ``R = Rz(rot_z) @ Ry(rot_y) @ Rx(rot_x)``, angles in
degrees at the API surface.  The translation column is
``(t_x * out_width, t_y * out_width, t_z * focal)`` pixels; because
``p_cam = R @ p_world + t``, the vector t is the position of the virtual
fisheye camera in the source camera frame: positive t_x moves the
fisheye rig right, positive t_y down, positive t_z forward (objects grow
in the output).

Pixels whose ray misses the source plane (theta >= pi/2), lands behind
the source camera, or falls outside the source raster are Invalid;
invalidity is a value (None / mask entry), never an exception, except
for the scalar ``fisheye_ray`` which raises ``IncidenceOutOfRange`` so
the precondition is checkable in isolation.

All math is double precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, IncidenceOutOfRange

# Guards below the pi/2 incidence singularity and the z2 = 0 projection
# singularity.  Rays failing either are Invalid.
THETA_GUARD = 1e-6
Z_GUARD = 1e-6


@dataclass(frozen=True)
class FisheyeIntrinsics:
    """Virtual fisheye camera: focal length and output raster size, in pixels."""

    f_fish: float
    out_width: int = 640
    out_height: int = 640

    def __post_init__(self):
        if not (math.isfinite(self.f_fish) and self.f_fish > 0):
            raise ConfigError(f"fisheye focal length must be > 0, got {self.f_fish}")
        if self.out_width <= 0 or self.out_height <= 0:
            raise ConfigError(
                f"output size must be positive, got {self.out_width}x{self.out_height}"
            )

    @property
    def center(self) -> tuple[float, float]:
        return (self.out_width / 2.0, self.out_height / 2.0)


@dataclass(frozen=True)
class PinholeIntrinsics:
    """Source rectilinear camera.

    ``focal`` is both the pinhole focal length and the distance of the
    source plane from the fisheye camera (z1).
    """

    focal: float = 500.0
    cols: int = 2048
    rows: int = 1024

    def __post_init__(self):
        if not (math.isfinite(self.focal) and self.focal > 0):
            raise ConfigError(f"pinhole focal length must be > 0, got {self.focal}")
        if self.cols <= 0 or self.rows <= 0:
            raise ConfigError(
                f"source size must be positive, got {self.cols}x{self.rows}"
            )


@dataclass(frozen=True)
class RigPose:
    """Relative pose of the virtual fisheye rig.

    Angles in degrees; converted to radians exactly once when the
    rotation matrix is built.  t_x and t_y are in units of the output
    fisheye width, t_z in units of the pinhole focal length.
    """

    rot_x: float = 0.0
    rot_y: float = 0.0
    rot_z: float = 0.0
    t_x: float = 0.0
    t_y: float = 0.0
    t_z: float = 0.0

    def __post_init__(self):
        for name in ("rot_x", "rot_y", "rot_z", "t_x", "t_y", "t_z"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"pose field {name} must be finite")

    @property
    def is_identity(self) -> bool:
        return all(
            getattr(self, name) == 0.0
            for name in ("rot_x", "rot_y", "rot_z", "t_x", "t_y", "t_z")
        )


@dataclass(frozen=True)
class WarpParams:
    """One sampled seven-DoF configuration: fisheye focal + 6 pose DoF."""

    fisheye: FisheyeIntrinsics
    pinhole: PinholeIntrinsics = field(default_factory=PinholeIntrinsics)
    pose: RigPose = field(default_factory=RigPose)


def incidence_angle(x0, y0, f_fish):
    """Incidence angle theta (rad) of the ray through fisheye offset (x0, y0).

    Accepts scalars or arrays; theta = sqrt(x0^2 + y0^2) / f_fish.
    """
    if f_fish <= 0:
        raise ConfigError(f"fisheye focal length must be > 0, got {f_fish}")
    return np.hypot(x0, y0) / f_fish


def fisheye_ray(x0: float, y0: float, f_fish: float, z1: float) -> tuple[float, float, float]:
    """Cast the fisheye offset (x0, y0) onto the plane z = z1.

    Returns the world point (x1, y1, z1).  The on-axis offset (0, 0)
    maps to (0, 0, z1).  Raises IncidenceOutOfRange when the incidence
    angle reaches pi/2 and the ray can no longer hit the plane.
    """
    r = math.hypot(x0, y0)
    theta = r / f_fish
    if theta >= math.pi / 2.0 - THETA_GUARD:
        raise IncidenceOutOfRange(
            f"incidence angle {theta:.6f} rad >= pi/2 for offset ({x0}, {y0})"
        )
    if r == 0.0:
        return (0.0, 0.0, z1)
    scale = z1 * math.tan(theta) / r
    return (x0 * scale, y0 * scale, z1)


def rotation_from_euler(rot_x: float, rot_y: float, rot_z: float) -> np.ndarray:
    """3x3 rotation matrix R = Rz(rot_z) @ Ry(rot_y) @ Rx(rot_x), degrees in."""
    ax, ay, az = (math.radians(a) for a in (rot_x, rot_y, rot_z))
    cx, sx = math.cos(ax), math.sin(ax)
    cy, sy = math.cos(ay), math.sin(ay)
    cz, sz = math.cos(az), math.sin(az)
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cx, -sx], [0.0, sx, cx]])
    ry = np.array([[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]])
    rz = np.array([[cz, -sz, 0.0], [sz, cz, 0.0], [0.0, 0.0, 1.0]])
    return rz @ ry @ rx


def rig_transform(
    pose: RigPose, fisheye: FisheyeIntrinsics, pinhole: PinholeIntrinsics
) -> np.ndarray:
    """4x4 homogeneous world-to-source-camera transform [R | t; 0 1].

    Translation normalization: t_x and t_y scale by the output fisheye
    width, t_z by the pinhole focal length.
    """
    m = np.eye(4)
    m[:3, :3] = rotation_from_euler(pose.rot_x, pose.rot_y, pose.rot_z)
    m[0, 3] = pose.t_x * fisheye.out_width
    m[1, 3] = pose.t_y * fisheye.out_width
    m[2, 3] = pose.t_z * pinhole.focal
    return m


def pinhole_project(p_cam, pinhole: PinholeIntrinsics):
    """Project a camera-frame point to source pixel coordinates.

    Returns (u, v), or None when the point is at or behind the camera
    (z2 <= Z_GUARD).
    """
    x2, y2, z2 = p_cam
    if z2 <= Z_GUARD:
        return None
    u = pinhole.focal * x2 / z2 + pinhole.cols / 2.0
    v = pinhole.focal * y2 / z2 + pinhole.rows / 2.0
    return (u, v)


def fisheye_to_source(p_out, params: WarpParams):
    """Map one output fisheye pixel to source coordinates, or None.

    Composes the full chain (center offset, incidence angle, plane
    intersection, rig transform, pinhole projection) and additionally
    reports None when (u, v) falls outside [0, cols-1] x [0, rows-1].
    """
    cx, cy = params.fisheye.center
    x0 = p_out[0] - cx
    y0 = p_out[1] - cy
    z1 = params.pinhole.focal
    try:
        ray = fisheye_ray(x0, y0, params.fisheye.f_fish, z1)
    except IncidenceOutOfRange:
        return None
    m = rig_transform(params.pose, params.fisheye, params.pinhole)
    p_cam = m[:3, :3] @ np.asarray(ray) + m[:3, 3]
    uv = pinhole_project(p_cam, params.pinhole)
    if uv is None:
        return None
    u, v = uv
    if not (0.0 <= u <= params.pinhole.cols - 1 and 0.0 <= v <= params.pinhole.rows - 1):
        return None
    return (u, v)


def fisheye_to_source_batch(px, py, params: WarpParams):
    """Vectorized chain over arrays of output coordinates (not just pixels).

    Returns (u, v, valid) double-precision arrays of the input shape;
    u and v are meaningful only where valid is True.
    """
    px = np.asarray(px, dtype=np.float64)
    py = np.asarray(py, dtype=np.float64)
    cx, cy = params.fisheye.center
    x0 = px - cx
    y0 = py - cy
    z1 = params.pinhole.focal

    r = np.hypot(x0, y0)
    theta = r / params.fisheye.f_fish
    valid = theta < (math.pi / 2.0 - THETA_GUARD)

    # tan blows up past the guard; zero those entries before evaluating.
    safe_theta = np.where(valid, theta, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(r > 0.0, z1 * np.tan(safe_theta) / np.where(r > 0.0, r, 1.0), 0.0)
    x1 = x0 * scale
    y1 = y0 * scale

    m = rig_transform(params.pose, params.fisheye, params.pinhole)
    x2 = m[0, 0] * x1 + m[0, 1] * y1 + m[0, 2] * z1 + m[0, 3]
    y2 = m[1, 0] * x1 + m[1, 1] * y1 + m[1, 2] * z1 + m[1, 3]
    z2 = m[2, 0] * x1 + m[2, 1] * y1 + m[2, 2] * z1 + m[2, 3]

    valid &= z2 > Z_GUARD
    safe_z2 = np.where(valid, z2, 1.0)
    u = params.pinhole.focal * x2 / safe_z2 + params.pinhole.cols / 2.0
    v = params.pinhole.focal * y2 / safe_z2 + params.pinhole.rows / 2.0

    valid &= (u >= 0.0) & (u <= params.pinhole.cols - 1)
    valid &= (v >= 0.0) & (v <= params.pinhole.rows - 1)
    return u, v, valid


def source_to_fisheye(u, v, fisheye: FisheyeIntrinsics, pinhole: PinholeIntrinsics):
    """Forward map source pixel -> fisheye pixel, identity pose only.

    Analytic inverse of the chain: unproject at the plane z = z1, then
    theta = atan(rho / z1) and r = f_fish * theta.  Accepts scalars or
    arrays.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    z1 = pinhole.focal
    x1 = (u - pinhole.cols / 2.0) * z1 / pinhole.focal
    y1 = (v - pinhole.rows / 2.0) * z1 / pinhole.focal
    rho = np.hypot(x1, y1)
    theta = np.arctan2(rho, z1)
    radius = fisheye.f_fish * theta
    with np.errstate(invalid="ignore", divide="ignore"):
        ux = np.where(rho > 0.0, x1 / np.where(rho > 0.0, rho, 1.0), 0.0)
        uy = np.where(rho > 0.0, y1 / np.where(rho > 0.0, rho, 1.0), 0.0)
    cx, cy = fisheye.center
    return radius * ux + cx, radius * uy + cy


def max_incidence(params: WarpParams) -> float:
    """Largest incidence angle over the output raster (at a corner pixel)."""
    cx, cy = params.fisheye.center
    corners = [
        (0.0, 0.0),
        (params.fisheye.out_width - 1.0, 0.0),
        (0.0, params.fisheye.out_height - 1.0),
        (params.fisheye.out_width - 1.0, params.fisheye.out_height - 1.0),
    ]
    radius = max(math.hypot(px - cx, py - cy) for px, py in corners)
    return radius / params.fisheye.f_fish


def rotate_about_output_center(px, py, phi_deg: float, fisheye: FisheyeIntrinsics):
    """Rotate output coordinates about the fisheye principal point by phi.

    Uses the same in-plane rotation convention as RigPose.rot_z, so
    fisheye_to_source(p, rot_z=phi) == fisheye_to_source(rotated p,
    identity) wherever both are valid.
    """
    phi = math.radians(phi_deg)
    c, s = math.cos(phi), math.sin(phi)
    cx, cy = fisheye.center
    x = np.asarray(px, dtype=np.float64) - cx
    y = np.asarray(py, dtype=np.float64) - cy
    return c * x - s * y + cx, s * x + c * y + cy
