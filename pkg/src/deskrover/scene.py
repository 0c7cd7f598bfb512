"""Procedural lunar-analog terrain and a deterministic stereo renderer.

The scene model is a fractal-noise heightmap plus ellipsoidal boulders
resting on it, lit by a single directional sun with Lambertian shading and a
hash-based 3D albedo texture (so the stereo matcher has structure to lock
onto and renders are reproducible bit-for-bit with no image assets).

World frame: x/y ground plane, z up, terrain extent centered on the origin.
Rendering is a per-pixel raycast: fixed-step marching against the heightmap
(step = cell_size / 2, refined by bisection) and closed-form ellipsoid
intersection, taking the nearest hit.  Ground-truth depth is the optical
axis Z of the hit, matching Z = f*B/d, with +inf for sky.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from deskrover.geometry import CameraIntrinsics, StereoRig

REFINE_ITERS = 8

SKY_ID = -1
TERRAIN_ID = 0


class SceneGeometryError(ValueError):
    """Degenerate scene input (bad extent, camera below the surface, ...)."""


# ---------------------------------------------------------------------------
# Hash noise
# ---------------------------------------------------------------------------

def _fmix32(h):
    h = h.astype(np.uint32, copy=True)
    h ^= h >> np.uint32(16)
    h *= np.uint32(0x85EBCA6B)
    h ^= h >> np.uint32(13)
    h *= np.uint32(0xC2B2AE35)
    h ^= h >> np.uint32(16)
    return h


def _lattice_hash(ix, iy, iz, seed):
    """Deterministic uint32 hash of an integer lattice point."""
    seed_mix = np.uint32((int(seed) * 0x165667B1) & 0xFFFFFFFF)
    h = (
        ix.astype(np.uint32) * np.uint32(0x8DA6B343)
        ^ iy.astype(np.uint32) * np.uint32(0xD8163841)
        ^ iz.astype(np.uint32) * np.uint32(0xCB1AB31F)
        ^ seed_mix
    )
    return _fmix32(h)


def _lattice_value(ix, iy, iz, seed):
    # uint32 hash -> float in [-1, 1)
    return _lattice_hash(ix, iy, iz, seed).astype(np.float64) / 2147483648.0 - 1.0


def _smooth(t):
    return t * t * (3.0 - 2.0 * t)


def value_noise3(x, y, z, seed: int):
    """Smooth value noise in [-1, 1) on a unit lattice; pure hash, no RNG state."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    ix = np.floor(x).astype(np.int64)
    iy = np.floor(y).astype(np.int64)
    iz = np.floor(z).astype(np.int64)
    fx = _smooth(x - ix)
    fy = _smooth(y - iy)
    fz = _smooth(z - iz)
    one = np.int64(1)
    v = 0.0
    for dz, wz in ((0, 1.0 - fz), (1, fz)):
        for dy, wy in ((0, 1.0 - fy), (1, fy)):
            for dx, wx in ((0, 1.0 - fx), (1, fx)):
                corner = _lattice_value(ix + dx * one, iy + dy * one, iz + dz * one, seed)
                v = v + corner * (wx * wy * wz)
    return v


def value_noise2(x, y, seed: int):
    return value_noise3(x, y, np.zeros_like(np.asarray(x, dtype=np.float64)), seed)


def fractal_noise2(x, y, seed: int, octaves: int = 5, lacunarity: float = 2.0,
                   gain: float = 0.5):
    """Multi-octave value noise, normalized to roughly [-1, 1]."""
    total = 0.0
    amp = 1.0
    freq = 1.0
    norm = 0.0
    for o in range(octaves):
        total = total + amp * value_noise2(x * freq, y * freq, seed + o * 101)
        norm += amp
        amp *= gain
        freq *= lacunarity
    return total / norm


# ---------------------------------------------------------------------------
# Scene model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Terrain:
    """Heightmap terrain centered on the world origin.

    ``heightmap[j, i]`` is the elevation at x = x0 + i*cell_size,
    y = y0 + j*cell_size.
    """

    heightmap: np.ndarray
    cell_size: float
    seed: int
    extent: tuple[float, float]
    roughness: float = 0.0

    def __post_init__(self):
        hm = np.asarray(self.heightmap, dtype=np.float64)
        if hm.ndim != 2 or hm.shape[0] < 2 or hm.shape[1] < 2:
            raise SceneGeometryError(f"heightmap must be at least 2x2, got {hm.shape}")
        if not np.all(np.isfinite(hm)):
            raise SceneGeometryError("heightmap contains non-finite elevations")
        object.__setattr__(self, "heightmap", hm)

    @property
    def x0(self) -> float:
        return -self.extent[0] / 2.0

    @property
    def y0(self) -> float:
        return -self.extent[1] / 2.0

    def height_at(self, x, y):
        """Bilinear surface height; coordinates are clamped to the extent."""
        hm = self.heightmap
        ny, nx = hm.shape
        gx = np.clip((np.asarray(x, dtype=np.float64) - self.x0) / self.cell_size, 0.0, nx - 1.0)
        gy = np.clip((np.asarray(y, dtype=np.float64) - self.y0) / self.cell_size, 0.0, ny - 1.0)
        i0 = np.minimum(gx.astype(np.int64), nx - 2)
        j0 = np.minimum(gy.astype(np.int64), ny - 2)
        fx = gx - i0
        fy = gy - j0
        h00 = hm[j0, i0]
        h10 = hm[j0, i0 + 1]
        h01 = hm[j0 + 1, i0]
        h11 = hm[j0 + 1, i0 + 1]
        return (h00 * (1 - fx) * (1 - fy) + h10 * fx * (1 - fy)
                + h01 * (1 - fx) * fy + h11 * fx * fy)

    def normal_at(self, x, y):
        """Upward surface normal of the bilinear patch containing (x, y)."""
        hm = self.heightmap
        ny, nx = hm.shape
        gx = np.clip((np.asarray(x, dtype=np.float64) - self.x0) / self.cell_size, 0.0, nx - 1.0)
        gy = np.clip((np.asarray(y, dtype=np.float64) - self.y0) / self.cell_size, 0.0, ny - 1.0)
        i0 = np.minimum(gx.astype(np.int64), nx - 2)
        j0 = np.minimum(gy.astype(np.int64), ny - 2)
        fx = gx - i0
        fy = gy - j0
        h00 = hm[j0, i0]
        h10 = hm[j0, i0 + 1]
        h01 = hm[j0 + 1, i0]
        h11 = hm[j0 + 1, i0 + 1]
        dhdx = ((1 - fy) * (h10 - h00) + fy * (h11 - h01)) / self.cell_size
        dhdy = ((1 - fx) * (h01 - h00) + fx * (h11 - h10)) / self.cell_size
        n = np.stack([-dhdx, -dhdy, np.ones_like(dhdx)], axis=-1)
        return n / np.linalg.norm(n, axis=-1, keepdims=True)


@dataclass(frozen=True)
class Boulder:
    """Axis-aligned ellipsoid obstacle resting on (or above) the terrain."""

    center: np.ndarray
    radii: np.ndarray
    id: int = 0

    def __post_init__(self):
        center = np.asarray(self.center, dtype=np.float64)
        radii = np.asarray(self.radii, dtype=np.float64)
        if center.shape != (3,) or radii.shape != (3,):
            raise SceneGeometryError("boulder center and radii must be 3-vectors")
        if np.any(radii <= 0):
            raise SceneGeometryError(f"boulder radii must be positive, got {radii}")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radii", radii)

    def footprint_contains(self, x, y) -> bool:
        """True if ground point (x, y) lies inside the ellipse cross-section."""
        dx = (x - self.center[0]) / self.radii[0]
        dy = (y - self.center[1]) / self.radii[1]
        return bool(dx * dx + dy * dy <= 1.0)


@dataclass(frozen=True)
class TextureParams:
    """Albedo texture knobs; amplitude 0 disables texture entirely."""

    amplitude: float = 0.45
    scale: float = 1.0  # wavelength of the coarsest octave, scene units


@dataclass(frozen=True)
class SceneDescription:
    terrain: Terrain
    boulders: tuple[Boulder, ...] = ()
    sun_direction: np.ndarray = field(
        default_factory=lambda: np.array([0.35, 0.25, 0.9]))
    albedo: float = 0.75
    texture: TextureParams = field(default_factory=TextureParams)
    ambient: float = 0.18

    def __post_init__(self):
        sun = np.asarray(self.sun_direction, dtype=np.float64)
        norm = float(np.linalg.norm(sun))
        if norm == 0.0:
            raise SceneGeometryError("sun_direction must be non-zero")
        if not 0.0 < self.albedo <= 1.0:
            raise SceneGeometryError(f"albedo must be in (0, 1], got {self.albedo}")
        object.__setattr__(self, "sun_direction", sun / norm)
        object.__setattr__(self, "boulders", tuple(self.boulders))


@dataclass(frozen=True)
class CameraPose:
    """Rover-mounted rig pose: left-camera position, heading yaw, downward pitch."""

    position: np.ndarray
    yaw: float = 0.0
    pitch: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "position",
                           np.asarray(self.position, dtype=np.float64))

    def axes(self):
        """World-frame (forward, right, down) unit vectors of the camera."""
        cy, sy = math.cos(self.yaw), math.sin(self.yaw)
        cp, sp = math.cos(self.pitch), math.sin(self.pitch)
        forward = np.array([cy * cp, sy * cp, -sp])
        right = np.array([sy, -cy, 0.0])
        down = np.array([-cy * sp, -sy * sp, -cp])
        return forward, right, down


@dataclass(frozen=True)
class StereoFrame:
    """A rendered stereo pair with per-pixel ground truth for the left view."""

    left: np.ndarray            # (H, W) uint8
    right: np.ndarray           # (H, W) uint8
    gt_depth_left: np.ndarray   # (H, W) float64, optical-axis Z, +inf for sky
    timestamp: float
    rig_pose: CameraPose
    obj_id_left: np.ndarray | None = None  # (H, W) int32: -1 sky, 0 terrain, 1+i boulder

    def __post_init__(self):
        shapes = {self.left.shape, self.right.shape, self.gt_depth_left.shape}
        if len(shapes) != 1:
            raise SceneGeometryError(f"raster dimensions disagree: {shapes}")
        finite = self.gt_depth_left[np.isfinite(self.gt_depth_left)]
        if finite.size and np.any(finite <= 0):
            raise SceneGeometryError("ground-truth depth must be positive or +inf")


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------

def generate_terrain(seed: int, extent: tuple[float, float], cell_size: float,
                     roughness: float, octaves: int = 5,
                     base_wavelength: float | None = None) -> Terrain:
    """Fractal value-noise heightmap, deterministic for a fixed seed.

    ``roughness`` scales the height amplitude directly; 0 yields a flat plane
    at elevation 0.  ``base_wavelength`` sets the coarsest feature size
    (default: a quarter of the larger extent).
    """
    w, l = float(extent[0]), float(extent[1])
    if w <= 0 or l <= 0 or cell_size <= 0:
        raise SceneGeometryError(f"degenerate extent {extent} / cell {cell_size}")
    nx = max(int(round(w / cell_size)) + 1, 2)
    ny = max(int(round(l / cell_size)) + 1, 2)
    xs = -w / 2.0 + np.arange(nx) * cell_size
    ys = -l / 2.0 + np.arange(ny) * cell_size
    gx, gy = np.meshgrid(xs, ys)
    if roughness == 0.0:
        hm = np.zeros((ny, nx))
    else:
        wavelength = base_wavelength if base_wavelength else max(w, l) / 4.0
        hm = roughness * fractal_noise2(gx / wavelength, gy / wavelength, seed,
                                        octaves=octaves)
    return Terrain(heightmap=hm, cell_size=cell_size, seed=seed,
                   extent=(w, l), roughness=roughness)


def place_boulders(terrain: Terrain, seed: int, count: int,
                   radius_range: tuple[float, float],
                   margin: float = 0.0) -> list[Boulder]:
    """Scatter ``count`` ellipsoids resting on the surface, deterministic per seed.

    Resting means center_z = surface height + vertical semi-axis.  ``margin``
    keeps centers away from the extent edge.
    """
    if count < 0:
        raise ValueError("count must be >= 0")
    rng = np.random.default_rng(seed)
    w, l = terrain.extent
    lo, hi = radius_range
    boulders = []
    for i in range(count):
        x = rng.uniform(-w / 2.0 + margin, w / 2.0 - margin)
        y = rng.uniform(-l / 2.0 + margin, l / 2.0 - margin)
        base = rng.uniform(lo, hi)
        radii = base * rng.uniform(0.7, 1.3, size=3)
        z = float(terrain.height_at(x, y)) + radii[2]
        boulders.append(Boulder(center=np.array([x, y, z]), radii=radii, id=i + 1))
    return boulders


# ---------------------------------------------------------------------------
# Raycasting
# ---------------------------------------------------------------------------

def _aabb_span(origin, dirs, lo, hi, t_min, t_max):
    """Entry/exit params of rays against an axis-aligned box (slab method)."""
    n = dirs.shape[0]
    t_enter = np.full(n, t_min)
    t_exit = np.full(n, t_max)
    for axis in range(3):
        d = dirs[:, axis]
        o = origin[axis]
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = 1.0 / d
            t1 = (lo[axis] - o) * inv
            t2 = (hi[axis] - o) * inv
        near = np.minimum(t1, t2)
        far = np.maximum(t1, t2)
        parallel = d == 0.0
        inside = (lo[axis] <= o) & (o <= hi[axis])
        near = np.where(parallel, np.where(inside, t_min, t_max), near)
        far = np.where(parallel, np.where(inside, t_max, t_min), far)
        t_enter = np.maximum(t_enter, near)
        t_exit = np.minimum(t_exit, far)
    return t_enter, t_exit


def _march_terrain(terrain: Terrain, origin, dirs, t_min, t_max):
    """First terrain crossing per ray via fixed-step march + bisection.

    Returns hit param per ray (+inf for misses).
    """
    n = dirs.shape[0]
    hm = terrain.heightmap
    pad = terrain.cell_size * 1e-6
    lo = np.array([terrain.x0 - pad, terrain.y0 - pad, float(hm.min()) - pad])
    hi = np.array([terrain.x0 + (hm.shape[1] - 1) * terrain.cell_size + pad,
                   terrain.y0 + (hm.shape[0] - 1) * terrain.cell_size + pad,
                   float(hm.max()) + pad])
    t_enter, t_exit = _aabb_span(origin, dirs, lo, hi, t_min, t_max)

    step = terrain.cell_size / 2.0
    t_hit = np.full(n, np.inf)
    lo_t = np.full(n, np.nan)
    hi_t = np.full(n, np.nan)

    active = np.flatnonzero(t_enter < t_exit)
    t_prev = t_enter.copy()
    t_cur = t_enter.copy()
    at_exit = np.zeros(n, dtype=bool)
    while active.size:
        pos = origin[None, :] + t_cur[active, None] * dirs[active]
        below = pos[:, 2] <= terrain.height_at(pos[:, 0], pos[:, 1])
        hit_idx = active[below]
        lo_t[hit_idx] = t_prev[hit_idx]
        hi_t[hit_idx] = t_cur[hit_idx]
        active = active[~below]
        done = at_exit[active]
        active = active[~done]
        t_prev[active] = t_cur[active]
        nxt = t_cur[active] + step
        over = nxt >= t_exit[active]
        nxt = np.where(over, t_exit[active], nxt)
        at_exit[active[over]] = True
        t_cur[active] = nxt

    bracket = np.flatnonzero(~np.isnan(hi_t))
    if bracket.size:
        b_lo = lo_t[bracket]
        b_hi = hi_t[bracket]
        b_dirs = dirs[bracket]
        for _ in range(REFINE_ITERS):
            mid = 0.5 * (b_lo + b_hi)
            pos = origin[None, :] + mid[:, None] * b_dirs
            below = pos[:, 2] <= terrain.height_at(pos[:, 0], pos[:, 1])
            b_hi = np.where(below, mid, b_hi)
            b_lo = np.where(below, b_lo, mid)
        t_hit[bracket] = b_hi
    return t_hit


def _intersect_ellipsoid(boulder: Boulder, origin, dirs, t_min):
    """Nearest positive ray param against an ellipsoid (+inf for misses)."""
    m = (origin - boulder.center) / boulder.radii
    q = dirs / boulder.radii[None, :]
    a = np.einsum("ij,ij->i", q, q)
    b = 2.0 * (q @ m)
    c = float(m @ m) - 1.0
    disc = b * b - 4.0 * a * c
    hit = disc >= 0.0
    sq = np.sqrt(np.where(hit, disc, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        t_near = (-b - sq) / (2.0 * a)
        t_far = (-b + sq) / (2.0 * a)
    t = np.where(t_near >= t_min, t_near, t_far)
    return np.where(hit & (t >= t_min), t, np.inf)


def raycast(scene: SceneDescription, origin: np.ndarray, dirs: np.ndarray,
            t_min: float = 1e-6, max_range: float = np.inf,
            include_terrain: bool = True,
            include_boulders: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Nearest hit of each ray against the scene.

    Args:
        origin: (3,) common ray origin.
        dirs: (N, 3) unit directions.

    Returns:
        (t_hit, obj_id): hit params (+inf for sky) and object ids
        (SKY_ID, TERRAIN_ID, or boulder id).
    """
    origin = np.asarray(origin, dtype=np.float64)
    dirs = np.asarray(dirs, dtype=np.float64)
    n = dirs.shape[0]
    t_best = np.full(n, np.inf)
    obj_id = np.full(n, SKY_ID, dtype=np.int32)
    if include_terrain:
        t_terr = _march_terrain(scene.terrain, origin, dirs, t_min, max_range)
        closer = t_terr < t_best
        t_best = np.where(closer, t_terr, t_best)
        obj_id = np.where(closer, TERRAIN_ID, obj_id)
    if include_boulders:
        for boulder in scene.boulders:
            t_b = _intersect_ellipsoid(boulder, origin, dirs, t_min)
            closer = (t_b < t_best) & (t_b <= max_range)
            t_best = np.where(closer, t_b, t_best)
            obj_id = np.where(closer, np.int32(boulder.id), obj_id)
    return t_best, obj_id


# ---------------------------------------------------------------------------
# Shading and rendering
# ---------------------------------------------------------------------------

def _surface_texture(scene: SceneDescription, points):
    tex = scene.texture
    if tex.amplitude == 0.0:
        return np.ones(points.shape[0])
    s1 = tex.scale
    s2 = tex.scale / 4.0
    seed = scene.terrain.seed
    n1 = value_noise3(points[:, 0] / s1, points[:, 1] / s1, points[:, 2] / s1,
                      seed + 7919)
    n2 = value_noise3(points[:, 0] / s2, points[:, 1] / s2, points[:, 2] / s2,
                      seed + 27449)
    return 1.0 + tex.amplitude * (0.6 * n1 + 0.4 * n2)


def _shade(scene: SceneDescription, points, normals):
    lambert = np.clip(np.einsum("ij,j->i", normals, scene.sun_direction), 0.0, None)
    light = scene.ambient + (1.0 - scene.ambient) * lambert
    intensity = scene.albedo * np.clip(_surface_texture(scene, points), 0.05, 2.0) * light
    return np.clip(intensity, 0.0, 1.0)


def render_view(scene: SceneDescription, intrinsics: CameraIntrinsics,
                origin: np.ndarray, forward, right, down,
                max_range: float = np.inf):
    """Render one camera: (uint8 image, GT optical-axis depth, object-id map)."""
    h, w = intrinsics.height_px, intrinsics.width_px
    us = (np.arange(w) - intrinsics.cx_px) / intrinsics.focal_px
    vs = (np.arange(h) - intrinsics.cy_px) / intrinsics.focal_px
    gu, gv = np.meshgrid(us, vs)
    cam = np.stack([gu.ravel(), gv.ravel(), np.ones(h * w)], axis=1)
    cam /= np.linalg.norm(cam, axis=1, keepdims=True)
    world = (cam[:, 0:1] * right[None, :] + cam[:, 1:2] * down[None, :]
             + cam[:, 2:3] * forward[None, :])

    inside = (scene.terrain.x0 <= origin[0] <= -scene.terrain.x0
              and scene.terrain.y0 <= origin[1] <= -scene.terrain.y0)
    if inside and origin[2] <= float(scene.terrain.height_at(origin[0], origin[1])):
        raise SceneGeometryError("camera origin is below the terrain surface")

    t_hit, obj_id = raycast(scene, origin, world, max_range=max_range)
    depth = t_hit * cam[:, 2]

    image = np.zeros(h * w)
    hit = np.isfinite(t_hit)
    if np.any(hit):
        pts = origin[None, :] + t_hit[hit, None] * world[hit]
        normals = np.zeros_like(pts)
        terr = obj_id[hit] == TERRAIN_ID
        if np.any(terr):
            normals[terr] = scene.terrain.normal_at(pts[terr, 0], pts[terr, 1])
        for boulder in scene.boulders:
            sel = obj_id[hit] == boulder.id
            if np.any(sel):
                nb = (pts[sel] - boulder.center[None, :]) / (boulder.radii[None, :] ** 2)
                normals[sel] = nb / np.linalg.norm(nb, axis=1, keepdims=True)
        image[hit] = _shade(scene, pts, normals)

    img8 = np.round(image * 255.0).astype(np.uint8).reshape(h, w)
    return img8, depth.reshape(h, w), obj_id.reshape(h, w)


def render_stereo(scene: SceneDescription, rig: StereoRig, rig_pose: CameraPose,
                  timestamp: float = 0.0, max_range: float = np.inf) -> StereoFrame:
    """Render the stereo pair for a rig pose.

    The left camera sits at the pose position; the right camera is offset by
    the baseline along the camera X (right) axis.  Both share intrinsics, so
    the pair is rectified by construction and ground-truth disparity is
    exactly f*B/Z.
    """
    forward, right_ax, down = rig_pose.axes()
    left_img, depth, obj_id = render_view(
        scene, rig.intrinsics, rig_pose.position, forward, right_ax, down,
        max_range=max_range)
    right_origin = rig_pose.position + rig.baseline * right_ax
    right_img, _, _ = render_view(
        scene, rig.intrinsics, right_origin, forward, right_ax, down,
        max_range=max_range)
    return StereoFrame(left=left_img, right=right_img, gt_depth_left=depth,
                       timestamp=timestamp, rig_pose=rig_pose, obj_id_left=obj_id)


def probe_depth(scene: SceneDescription, intrinsics: CameraIntrinsics,
                rig_pose: CameraPose, max_range: float = np.inf,
                boulders_only: bool = False):
    """Ground-truth depth without shading, for fast perception channels.

    With ``boulders_only`` the terrain is skipped, mimicking an obstacle
    detector that responds to rocks but not to the ground plane.  Returns
    (depth map with +inf misses, object-id map).
    """
    h, w = intrinsics.height_px, intrinsics.width_px
    us = (np.arange(w) - intrinsics.cx_px) / intrinsics.focal_px
    vs = (np.arange(h) - intrinsics.cy_px) / intrinsics.focal_px
    gu, gv = np.meshgrid(us, vs)
    cam = np.stack([gu.ravel(), gv.ravel(), np.ones(h * w)], axis=1)
    cam /= np.linalg.norm(cam, axis=1, keepdims=True)
    forward, right_ax, down = rig_pose.axes()
    world = (cam[:, 0:1] * right_ax[None, :] + cam[:, 1:2] * down[None, :]
             + cam[:, 2:3] * forward[None, :])
    t_hit, obj_id = raycast(scene, rig_pose.position, world, max_range=max_range,
                            include_terrain=not boulders_only)
    depth = (t_hit * cam[:, 2]).reshape(h, w)
    return depth, obj_id.reshape(h, w)


# ---------------------------------------------------------------------------
# Scene file format
# ---------------------------------------------------------------------------

def scene_to_dict(scene: SceneDescription) -> dict:
    t = scene.terrain
    return {
        "seed": t.seed,
        "extent": list(t.extent),
        "cell_size": t.cell_size,
        "roughness": t.roughness,
        "boulders": [
            {"center": b.center.tolist(), "radii": b.radii.tolist()}
            for b in scene.boulders
        ],
        "sun_direction": scene.sun_direction.tolist(),
        "albedo": scene.albedo,
        "texture": {"amplitude": scene.texture.amplitude, "scale": scene.texture.scale},
        "ambient": scene.ambient,
    }


def scene_from_dict(data: dict) -> SceneDescription:
    terrain = generate_terrain(
        seed=int(data["seed"]),
        extent=tuple(data["extent"]),
        cell_size=float(data["cell_size"]),
        roughness=float(data["roughness"]),
    )
    boulders = tuple(
        Boulder(center=np.asarray(b["center"]), radii=np.asarray(b["radii"]), id=i + 1)
        for i, b in enumerate(data.get("boulders", []))
    )
    tex = data.get("texture", {})
    return SceneDescription(
        terrain=terrain,
        boulders=boulders,
        sun_direction=np.asarray(data.get("sun_direction", [0.35, 0.25, 0.9])),
        albedo=float(data.get("albedo", 0.75)),
        texture=TextureParams(amplitude=float(tex.get("amplitude", 0.45)),
                              scale=float(tex.get("scale", 1.0))),
        ambient=float(data.get("ambient", 0.18)),
    )


def save_scene(scene: SceneDescription, path) -> None:
    Path(path).write_text(json.dumps(scene_to_dict(scene), indent=2))


def load_scene(path) -> SceneDescription:
    return scene_from_dict(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------------------
# Canned scenes
# ---------------------------------------------------------------------------

WALL_CAMERA_HEIGHT = 5.0


def wall_scene(depth_units: float, texture_scale: float,
               half_height: float = 1e4, seed: int = 3) -> SceneDescription:
    """A textured fronto-parallel wall at the given optical-axis depth.

    Built from a nearly flat giant ellipsoid centered at camera height,
    facing a camera that looks along +x from above a small flat terrain
    patch; every ray clears the patch and lands on the wall, so the frame
    is wall from edge to edge (depth variation across it is < 1e-3 units).
    """
    terrain = generate_terrain(seed=seed, extent=(10.0, 10.0), cell_size=1.0,
                               roughness=0.0)
    curvature_radius = 1e-3 * depth_units
    wall = Boulder(
        center=np.array([depth_units + curvature_radius, 0.0, WALL_CAMERA_HEIGHT]),
        radii=np.array([curvature_radius, half_height, half_height]),
        id=1,
    )
    return SceneDescription(
        terrain=terrain, boulders=(wall,),
        sun_direction=np.array([-1.0, 0.15, 0.2]),
        texture=TextureParams(amplitude=0.45, scale=texture_scale),
    )


def wall_camera_pose() -> CameraPose:
    """Camera for :func:`wall_scene`: looks along +x at the wall center height."""
    return CameraPose(position=np.array([0.0, 0.0, WALL_CAMERA_HEIGHT]), yaw=0.0)
