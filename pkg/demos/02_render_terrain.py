"""Procedural terrain rendering: build a boulder-strewn heightmap scene and
raycast a stereo pair with per-pixel ground-truth depth."""

from pathlib import Path

import numpy as np

from deskrover.formats import write_pfm, write_png
from deskrover.geometry import StereoRig
from deskrover.scene import (
    CameraPose,
    SceneDescription,
    TextureParams,
    generate_terrain,
    place_boulders,
    render_stereo,
    save_scene,
)

out = Path(__file__).parent / "out"
out.mkdir(exist_ok=True)

rig = StereoRig.reference_preset()  # 500x500, 60 deg, B=24 units, 500 units/m

terrain = generate_terrain(seed=7, extent=(2600.0, 2600.0), cell_size=25.0,
                           roughness=35.0)
boulders = place_boulders(terrain, seed=8, count=10,
                          radius_range=(40.0, 100.0), margin=200.0)
scene = SceneDescription(terrain=terrain, boulders=tuple(boulders),
                         texture=TextureParams(amplitude=0.45, scale=18.0))
print(f"terrain: {terrain.heightmap.shape} grid, "
      f"elevation {terrain.heightmap.min():.0f}..{terrain.heightmap.max():.0f} units")

camera_z = float(terrain.height_at(0.0, 0.0)) + 150.0
pose = CameraPose(position=np.array([0.0, 0.0, camera_z]), yaw=0.4,
                  pitch=np.deg2rad(32))
frame = render_stereo(scene, rig, pose)

finite = np.isfinite(frame.gt_depth_left)
print(f"rendered {frame.left.shape[1]}x{frame.left.shape[0]} pair; "
      f"{finite.mean():.0%} of pixels hit geometry, "
      f"depth {frame.gt_depth_left[finite].min():.0f}.."
      f"{frame.gt_depth_left[finite].max():.0f} units")

write_png(out / "left.png", frame.left)
write_png(out / "right.png", frame.right)
write_pfm(out / "gt_depth.pfm", frame.gt_depth_left)
save_scene(scene, out / "scene.json")
print(f"wrote {out}/left.png, right.png, gt_depth.pfm, scene.json")
