"""deskrover: desk-scale synthetic rover perception and teleoperation.

Procedural stereo terrain rendering, from-scratch semi-global stereo
matching, simulated monocular metric depth, depth-driven obstacle detection,
a hybrid fast/slow perception scheduler, and a teleoperable differential
drive rover with halt-on-obstacle safety.
"""

from deskrover.geometry import (
    CameraIntrinsics,
    NonPositiveDisparityError,
    Ray,
    StereoRig,
    depth_from_disparity,
    disparity_from_depth,
    focal_from_fov,
    pixel_ray,
)

__version__ = "0.1.0"

__all__ = [
    "CameraIntrinsics",
    "NonPositiveDisparityError",
    "Ray",
    "StereoRig",
    "depth_from_disparity",
    "disparity_from_depth",
    "focal_from_fov",
    "pixel_ray",
    "__version__",
]
