"""Pixel/ray geometry for a forward-looking UAV camera.

Conventions (used consistently across the package):

  Image frame:   origin at the top-left pixel, u grows right, v grows down,
                 coordinates are real-valued and inclusive of the borders.
  Normalized:    u_norm = 2u/W - 1 in [-1, 1] (positive right),
                 v_norm = 1 - 2v/H in [-1, 1] (positive up).
  Body frame:    x right, y forward, z up, in meters.  A waypoint at
                 normalized (u_norm, v_norm) lifted with travel distance d
                 lands at (u_norm * d * tan(alpha), d, v_norm * d * tan(beta)),
                 where alpha/beta are the horizontal/vertical half
                 field-of-view angles.

All functions are pure and all value types are immutable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

_NORM_SLACK = 1e-9


@dataclass(frozen=True)
class CameraModel:
    """Image dimensions plus half field-of-view angles (radians)."""

    width: int = 960
    height: int = 720
    alpha: float = math.radians(41.3)
    beta: float = math.radians(31.0)

    def __post_init__(self):
        if self.width < 2 or self.height < 2:
            raise ValueError(f"image dimensions must be >= 2, got {self.width}x{self.height}")
        for name, angle in (("alpha", self.alpha), ("beta", self.beta)):
            if not 0.0 < angle < math.pi / 2:
                raise ValueError(f"{name} must be in (0, pi/2) radians, got {angle}")

    @classmethod
    def from_degrees(cls, width: int, height: int, alpha_deg: float, beta_deg: float) -> "CameraModel":
        return cls(width, height, math.radians(alpha_deg), math.radians(beta_deg))

    @property
    def tan_alpha(self) -> float:
        return math.tan(self.alpha)

    @property
    def tan_beta(self) -> float:
        return math.tan(self.beta)


@dataclass(frozen=True)
class PixelWaypoint:
    """Real-valued pixel coordinates, top-left origin."""

    u: float
    v: float


@dataclass(frozen=True)
class NormalizedWaypoint:
    """Dimensionless image coordinates in [-1, 1], center (0, 0), up positive."""

    u_norm: float
    v_norm: float

    def __post_init__(self):
        for name, c in (("u_norm", self.u_norm), ("v_norm", self.v_norm)):
            if not -1.0 - _NORM_SLACK <= c <= 1.0 + _NORM_SLACK:
                raise ValueError(f"{name}={c} outside [-1, 1]")
        # Clamp float dust from pixel normalization onto the exact interval.
        object.__setattr__(self, "u_norm", min(1.0, max(-1.0, self.u_norm)))
        object.__setattr__(self, "v_norm", min(1.0, max(-1.0, self.v_norm)))


@dataclass(frozen=True)
class Projection:
    """Result of projecting a body-frame point back onto the image.

    Unlike NormalizedWaypoint the components are unbounded; ``in_fov`` reports
    whether both lie within [-1, 1].
    """

    u_norm: float
    v_norm: float
    in_fov: bool

    def as_waypoint(self) -> NormalizedWaypoint:
        return NormalizedWaypoint(self.u_norm, self.v_norm)


@dataclass(frozen=True)
class Displacement3:
    """Body-frame displacement in meters: x right, y forward, z up."""

    sx: float
    sy: float
    sz: float

    def norm(self) -> float:
        return math.sqrt(self.sx * self.sx + self.sy * self.sy + self.sz * self.sz)


def normalize_pixel(cam: CameraModel, wp: PixelWaypoint) -> NormalizedWaypoint:
    """Map pixel coordinates onto [-1, 1]^2 with the image center at (0, 0).

    Raises ValueError naming the offending coordinate if the pixel lies
    outside the image rectangle (borders inclusive).
    """
    if not 0.0 <= wp.u <= cam.width:
        raise ValueError(f"pixel u={wp.u} outside [0, {cam.width}]")
    if not 0.0 <= wp.v <= cam.height:
        raise ValueError(f"pixel v={wp.v} outside [0, {cam.height}]")
    return NormalizedWaypoint(2.0 * wp.u / cam.width - 1.0, 1.0 - 2.0 * wp.v / cam.height)


def denormalize(cam: CameraModel, nwp: NormalizedWaypoint) -> PixelWaypoint:
    """Inverse of normalize_pixel (exact for in-range inputs)."""
    return PixelWaypoint((nwp.u_norm + 1.0) * cam.width / 2.0, (1.0 - nwp.v_norm) * cam.height / 2.0)


def unproject(cam: CameraModel, nwp: NormalizedWaypoint, d_adj: float) -> Displacement3:
    """Lift a normalized waypoint to a body-frame displacement at forward depth d_adj."""
    if not d_adj > 0.0:
        raise ValueError(f"travel distance must be > 0, got {d_adj}")
    return Displacement3(
        nwp.u_norm * d_adj * cam.tan_alpha,
        d_adj,
        nwp.v_norm * d_adj * cam.tan_beta,
    )


def project(cam: CameraModel, d: Displacement3) -> Projection:
    """Exact inverse of unproject for forward-hemisphere displacements.

    Raises ValueError if the point is not strictly in front of the camera.
    """
    if not d.sy > 0.0:
        raise ValueError(f"cannot project a point behind the camera (sy={d.sy})")
    u_norm = (d.sx / d.sy) / cam.tan_alpha
    v_norm = (d.sz / d.sy) / cam.tan_beta
    # Boundary-inclusive with float slack: a ray exactly on the half-FOV cone
    # (e.g. 45 degree bearing at 45 degree half-FOV) counts as visible.
    lim = 1.0 + 1e-12
    return Projection(u_norm, v_norm, abs(u_norm) <= lim and abs(v_norm) <= lim)
