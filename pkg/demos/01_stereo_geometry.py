"""Stereo camera geometry: the focal length / FOV relation and the
depth <-> disparity conversion the whole pipeline rests on."""

import numpy as np

from deskrover.geometry import (
    StereoRig,
    depth_from_disparity,
    disparity_from_depth,
    focal_from_fov,
    pixel_ray,
)

# A 60 x 60 degree camera at 500 x 500 pixels has a 433 px focal length.
focal = focal_from_fov(60.0, 500)
print(f"focal length for 60 deg / 500 px: {focal:.4f} px")

rig = StereoRig.reference_preset()
print(f"rig: f={rig.intrinsics.focal_px:.1f} px, B={rig.baseline} units, "
      f"{rig.units_per_meter} units per meter")

# Z = f*B/d: disparity equal to the baseline gives Z = f.
print(f"depth at d=24 px: {depth_from_disparity(rig, 24.0):.2f} units")

# The conversion is an exact involution.
z = np.linspace(80.0, 1000.0, 7)
d = disparity_from_depth(rig, z)
back = depth_from_disparity(rig, d)
print("\n  depth (m)   disparity (px)   round trip error")
for zi, di, bi in zip(z, d, back):
    print(f"    {zi / rig.units_per_meter:7.3f}     {di:8.3f}        {abs(bi - zi):.2e}")

# Rays through characteristic pixels.
intr = rig.intrinsics
for label, (u, v) in {"principal point": (intr.cx_px, intr.cy_px),
                      "one px right": (intr.cx_px + 1, intr.cy_px)}.items():
    ray = pixel_ray(intr, u, v)
    print(f"{label}: direction {np.round(ray.direction, 6)}")
