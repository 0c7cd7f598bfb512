"""Pinhole stereo camera model.

A rectified stereo rig is two identical pinhole cameras separated by a pure
translation along the camera X-axis (the baseline).  Depth and disparity are
related by::

    Z = (f * B) / d

where *f* is the focal length in pixels, *B* the baseline in scene units and
*d* the horizontal pixel disparity.  Scene units are abstract; a rig carries
a ``units_per_meter`` scale so downstream metric reporting can convert.

Pixel convention: integer pixel coordinate (u, v) names the pixel center, so
the principal point of a centered W x H camera is ((W-1)/2, (H-1)/2).  The
camera frame is x-right, y-down, z-forward (optical axis).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class NonPositiveDisparityError(ValueError):
    """Raised when converting a disparity d <= 0 to depth.

    A non-positive disparity marks an invalid or occluded pixel; it has no
    finite depth and callers are expected to mask it rather than crash.
    """


def focal_from_fov(fov_deg: float, width_px: int) -> float:
    """Focal length in pixels for a given horizontal field of view.

    f = (width_px / 2) / tan(fov_deg / 2).  The 60 deg x 500 px camera used
    throughout gives f = 433.0 px.

    Args:
        fov_deg: Field of view in degrees, in (0, 180).
        width_px: Image width in pixels spanned by the field of view, >= 2.

    Returns:
        Focal length in pixels.
    """
    if not 0.0 < fov_deg < 180.0:
        raise ValueError(f"fov_deg must be in (0, 180), got {fov_deg}")
    if width_px < 2:
        raise ValueError(f"width_px must be >= 2, got {width_px}")
    return (width_px / 2.0) / math.tan(math.radians(fov_deg) / 2.0)


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics shared by both cameras of a rig."""

    width_px: int
    height_px: int
    fov_h_deg: float
    fov_v_deg: float
    focal_px: float
    cx_px: float
    cy_px: float

    def __post_init__(self):
        if self.width_px < 2 or self.height_px < 2:
            raise ValueError("image dimensions must be >= 2 px")
        if not (0.0 < self.fov_h_deg < 180.0 and 0.0 < self.fov_v_deg < 180.0):
            raise ValueError("fov must be in (0, 180) degrees")
        expected = focal_from_fov(self.fov_h_deg, self.width_px)
        if abs(expected - self.focal_px) > 0.5:
            raise ValueError(
                f"focal_px {self.focal_px} inconsistent with fov/width "
                f"(expected {expected:.3f})"
            )

    @classmethod
    def from_fov(cls, width_px: int, height_px: int,
                 fov_h_deg: float, fov_v_deg: float | None = None) -> "CameraIntrinsics":
        """Build intrinsics with a derived focal length and centered principal point.

        If ``fov_v_deg`` is omitted it is derived from the horizontal focal
        length assuming square pixels.
        """
        focal = focal_from_fov(fov_h_deg, width_px)
        if fov_v_deg is None:
            fov_v_deg = math.degrees(2.0 * math.atan((height_px / 2.0) / focal))
        return cls(
            width_px=width_px,
            height_px=height_px,
            fov_h_deg=fov_h_deg,
            fov_v_deg=fov_v_deg,
            focal_px=focal,
            cx_px=(width_px - 1) / 2.0,
            cy_px=(height_px - 1) / 2.0,
        )


@dataclass(frozen=True)
class StereoRig:
    """Rectified stereo rig: shared intrinsics plus an X-axis baseline.

    ``units_per_meter`` maps abstract scene units to meters for metric
    reporting; the geometry itself is unit-agnostic.
    """

    intrinsics: CameraIntrinsics
    baseline: float
    units_per_meter: float = 1.0

    def __post_init__(self):
        if self.baseline <= 0:
            raise ValueError(f"baseline must be positive, got {self.baseline}")
        if self.units_per_meter <= 0:
            raise ValueError("units_per_meter must be positive")

    @classmethod
    def reference_preset(cls, units_per_meter: float = 500.0) -> "StereoRig":
        """The 500x500, 60 deg x 60 deg, B=24 configuration (f = 433 px).

        The default scale of 500 units per meter places the useful matching
        range (disparities of a few px up to ~140 px) over roughly 0.15-2 m,
        the band metric depth accuracy is evaluated on.
        """
        return cls(
            intrinsics=CameraIntrinsics.from_fov(500, 500, 60.0, 60.0),
            baseline=24.0,
            units_per_meter=units_per_meter,
        )

    def depth_to_meters(self, z_units):
        return z_units / self.units_per_meter

    def meters_to_units(self, z_m):
        return z_m * self.units_per_meter


@dataclass(frozen=True)
class Ray:
    """A ray in some frame: origin plus unit direction."""

    origin: np.ndarray
    direction: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        origin = np.asarray(self.origin, dtype=float)
        direction = np.asarray(self.direction, dtype=float)
        norm = float(np.linalg.norm(direction))
        if norm == 0.0:
            raise ValueError("ray direction must be non-zero")
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "direction", direction / norm)


def depth_from_disparity(rig: StereoRig, d) -> float:
    """Depth along the optical axis for a disparity d > 0: Z = f*B/d.

    Raises :class:`NonPositiveDisparityError` for d <= 0 (invalid/occluded
    pixel, not a computable depth).  Accepts scalars or arrays; arrays must
    be all-positive.
    """
    d_arr = np.asarray(d, dtype=float)
    if np.any(d_arr <= 0):
        raise NonPositiveDisparityError(f"disparity must be positive, got {d}")
    z = rig.intrinsics.focal_px * rig.baseline / d_arr
    return float(z) if np.isscalar(d) or d_arr.ndim == 0 else z


def disparity_from_depth(rig: StereoRig, z) -> float:
    """Disparity in pixels for a depth z > 0: d = f*B/Z (inverse of the above)."""
    z_arr = np.asarray(z, dtype=float)
    if np.any(z_arr <= 0):
        raise ValueError(f"depth must be positive, got {z}")
    d = rig.intrinsics.focal_px * rig.baseline / z_arr
    return float(d) if np.isscalar(z) or z_arr.ndim == 0 else d


def pixel_ray(intrinsics: CameraIntrinsics, u: float, v: float) -> Ray:
    """Camera-frame ray through the center of pixel (u, v).

    The principal point maps to the optical axis (0, 0, 1); a pixel at
    cx + focal_px maps to a 45-degree ray with x/z = 1.
    """
    if not (0 <= u < intrinsics.width_px and 0 <= v < intrinsics.height_px):
        raise ValueError(
            f"pixel ({u}, {v}) outside {intrinsics.width_px}x{intrinsics.height_px} image"
        )
    x = (u - intrinsics.cx_px) / intrinsics.focal_px
    y = (v - intrinsics.cy_px) / intrinsics.focal_px
    return Ray(origin=np.zeros(3), direction=np.array([x, y, 1.0]))
