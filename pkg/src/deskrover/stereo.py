"""From-scratch semi-global stereo matching.

Pipeline: census transform -> Hamming cost volume -> multi-path semi-global
aggregation -> winner-take-all with parabola subpixel refinement and a
uniqueness test -> left-right consistency -> speckle filtering -> depth via
Z = f*B/d.

The matching cost is the census transform compared by Hamming distance:
integer-exact (so the aggregation can be checked against a naive reference
DP bit for bit) and robust to the renderer's shading.  The path recursion is

    L_r(p, d) = C(p, d) + min(L_r(p-r, d),
                              L_r(p-r, d+-1) + P1,
                              min_k L_r(p-r, k) + P2) - min_k L_r(p-r, k)

restarting with the raw cost at image borders.  Sweeps are vectorized over
whole rows/columns and the disparity axis; only the path direction is
sequential.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from deskrover.geometry import StereoRig

INVALID = -1.0

# (dy, dx) of the path direction; a pixel's predecessor is at (y-dy, x-dx)
_DIRECTIONS_4 = [(0, 1), (0, -1), (1, 0), (-1, 0)]
_DIRECTIONS_8 = _DIRECTIONS_4 + [(1, 1), (1, -1), (-1, 1), (-1, -1)]


@dataclass(frozen=True)
class SgmParams:
    """Semi-global matching parameters (OpenCV-flavored defaults).

    ``p1``/``p2`` default to 8 and 32 times (census bits / 8), i.e. 24/96
    for the 5x5 window.
    """

    num_disparities: int = 64
    census_window: tuple[int, int] = (5, 5)
    p1: int | None = None
    p2: int | None = None
    num_paths: int = 8
    uniqueness_ratio: float = 10.0
    lr_max_diff: float = 1.0
    speckle_window: int = 100
    speckle_range: float = 2.0

    def __post_init__(self):
        w, h = self.census_window
        if w < 3 or h < 3 or w % 2 == 0 or h % 2 == 0:
            raise ValueError(f"census window must be odd and >= 3, got {self.census_window}")
        if w * h - 1 > 64:
            raise ValueError(f"census window {self.census_window} exceeds 64 bits")
        if self.num_disparities < 1 or self.num_disparities % 16 != 0:
            raise ValueError("num_disparities must be a positive multiple of 16")
        if self.num_paths not in (4, 8):
            raise ValueError("num_paths must be 4 or 8")
        bits = w * h - 1
        if self.p1 is None:
            object.__setattr__(self, "p1", 8 * bits // 8)
        if self.p2 is None:
            object.__setattr__(self, "p2", 32 * bits // 8)
        if not 0 < self.p1 < self.p2:
            raise ValueError(f"require 0 < p1 < p2, got p1={self.p1} p2={self.p2}")
        if self.uniqueness_ratio < 0 or self.speckle_window < 0:
            raise ValueError("uniqueness_ratio and speckle_window must be >= 0")

    @property
    def census_bits(self) -> int:
        w, h = self.census_window
        return w * h - 1

    @property
    def directions(self) -> list[tuple[int, int]]:
        return _DIRECTIONS_8 if self.num_paths == 8 else _DIRECTIONS_4


@dataclass(frozen=True)
class CensusImage:
    """Per-pixel census codes; bit k compares the k-th row-major neighbor."""

    codes: np.ndarray  # (H, W) uint64
    num_bits: int


@dataclass(frozen=True)
class CostVolume:
    """Per (pixel, disparity) matching or aggregated cost."""

    costs: np.ndarray  # (H, W, D) integer
    max_cost: int

    @property
    def height(self) -> int:
        return self.costs.shape[0]

    @property
    def width(self) -> int:
        return self.costs.shape[1]

    @property
    def num_disparities(self) -> int:
        return self.costs.shape[2]


@dataclass(frozen=True)
class DisparityMap:
    values: np.ndarray  # (H, W) float32, INVALID sentinel where not valid
    valid: np.ndarray   # (H, W) bool

    @property
    def shape(self):
        return self.values.shape


@dataclass(frozen=True)
class DepthMap:
    """Per-pixel depth; units are whatever the producer used (see callers)."""

    values: np.ndarray  # (H, W) float32, INVALID sentinel where not valid
    valid: np.ndarray   # (H, W) bool

    @property
    def shape(self):
        return self.values.shape

    def scaled(self, factor: float) -> "DepthMap":
        vals = np.where(self.valid, self.values * factor, INVALID)
        return DepthMap(values=vals.astype(np.float32), valid=self.valid.copy())


def census_transform(image: np.ndarray, window: tuple[int, int] = (5, 5)) -> CensusImage:
    """Census codes: bit k is set iff the k-th neighbor (row-major, center
    excluded) is strictly darker than the center; edges are clamp-padded."""
    img = np.asarray(image)
    if img.ndim != 2:
        raise ValueError(f"census expects a single-channel image, got shape {img.shape}")
    w, h = window
    if w % 2 == 0 or h % 2 == 0 or w < 1 or h < 1:
        raise ValueError(f"census window must be odd, got {window}")
    if w * h - 1 > 64:
        raise ValueError(f"census window {window} exceeds 64 bits")
    if w > img.shape[1] or h > img.shape[0]:
        raise ValueError(f"census window {window} larger than image {img.shape}")
    rx, ry = w // 2, h // 2
    padded = np.pad(img, ((ry, ry), (rx, rx)), mode="edge")
    rows, cols = img.shape
    codes = np.zeros((rows, cols), dtype=np.uint64)
    bit = 0
    for dy in range(-ry, ry + 1):
        for dx in range(-rx, rx + 1):
            if dx == 0 and dy == 0:
                continue
            neighbor = padded[ry + dy: ry + dy + rows, rx + dx: rx + dx + cols]
            codes |= (neighbor < img).astype(np.uint64) << np.uint64(bit)
            bit += 1
    return CensusImage(codes=codes, num_bits=bit)


def hamming_distance(a: CensusImage, b: CensusImage) -> np.ndarray:
    if a.codes.shape != b.codes.shape:
        raise ValueError("census images differ in shape")
    return np.bitwise_count(a.codes ^ b.codes).astype(np.uint8)


def build_cost_volume(left: CensusImage, right: CensusImage,
                      num_disparities: int) -> CostVolume:
    """Hamming cost between left pixel x and right pixel x-d; disparities
    that fall off the left edge get the maximum census distance."""
    if left.codes.shape != right.codes.shape:
        raise ValueError("left/right census dimensions disagree")
    if num_disparities < 1:
        raise ValueError("num_disparities must be >= 1")
    h, w = left.codes.shape
    max_cost = left.num_bits
    costs = np.empty((h, w, num_disparities), dtype=np.uint8)
    for d in range(num_disparities):
        if d >= w:
            costs[:, :, d] = max_cost
            continue
        if d:
            costs[:, :d, d] = max_cost
        xor = left.codes[:, d:] ^ right.codes[:, : w - d]
        costs[:, d:, d] = np.bitwise_count(xor)
    return CostVolume(costs=costs, max_cost=max_cost)


def _dp_step(prev: np.ndarray, cost_slice: np.ndarray, p1: int, p2: int) -> np.ndarray:
    """One recursion step for a batch of parallel paths: prev and cost_slice
    are (batch, D) int32."""
    prev_min = prev.min(axis=1, keepdims=True)
    cand = np.minimum(prev, prev_min + p2)
    np.minimum(cand[:, 1:], prev[:, :-1] + p1, out=cand[:, 1:])
    np.minimum(cand[:, :-1], prev[:, 1:] + p1, out=cand[:, :-1])
    return cost_slice + cand - prev_min


def _sweep_vertical(cost: np.ndarray, total: np.ndarray, dy: int, dx: int,
                    p1: int, p2: int) -> None:
    h, w, _ = cost.shape
    ys = range(h) if dy > 0 else range(h - 1, -1, -1)
    prev_row = None
    for y in ys:
        c_row = cost[y]
        if prev_row is None:
            line = c_row.copy()
        else:
            if dx == 0:
                pred = prev_row
            else:
                pred = np.empty_like(prev_row)
                if dx > 0:
                    pred[1:] = prev_row[:-1]
                    pred[0] = 0
                else:
                    pred[:-1] = prev_row[1:]
                    pred[-1] = 0
            line = _dp_step(pred, c_row, p1, p2)
            if dx > 0:
                line[0] = c_row[0]
            elif dx < 0:
                line[-1] = c_row[-1]
        total[y] += line
        prev_row = line


def _sweep_horizontal(cost: np.ndarray, total: np.ndarray, dx: int,
                      p1: int, p2: int) -> None:
    h, w, _ = cost.shape
    xs = range(w) if dx > 0 else range(w - 1, -1, -1)
    prev_col = None
    for x in xs:
        c_col = cost[:, x]
        if prev_col is None:
            line = c_col.copy()
        else:
            line = _dp_step(prev_col, c_col, p1, p2)
        total[:, x] += line
        prev_col = line


def aggregate_paths(volume: CostVolume, params: SgmParams) -> CostVolume:
    """Sum the path recursion over ``params.num_paths`` directions."""
    cost = volume.costs.astype(np.int32)
    total = np.zeros_like(cost)
    for dy, dx in params.directions:
        if dy == 0:
            _sweep_horizontal(cost, total, dx, params.p1, params.p2)
        else:
            _sweep_vertical(cost, total, dy, dx, params.p1, params.p2)
    # every path contribution is bounded by C_max + P2
    return CostVolume(costs=total,
                      max_cost=params.num_paths * (volume.max_cost + params.p2))


def select_disparity(aggregated: CostVolume, params: SgmParams) -> DisparityMap:
    """Winner-take-all with parabola subpixel offset and a uniqueness test.

    Ties resolve to the smallest disparity.  A pixel is invalidated when the
    best cost outside d* +- 1 is within ``uniqueness_ratio`` percent of the
    winner.  Subpixel refinement is skipped at the disparity-range edges.
    """
    s = aggregated.costs
    h, w, d_levels = s.shape
    d_star = s.argmin(axis=2)
    best = np.take_along_axis(s, d_star[..., None], axis=2)[..., 0]

    valid = np.ones((h, w), dtype=bool)
    if d_levels > 2:
        ds = np.arange(d_levels)[None, None, :]
        near_winner = np.abs(ds - d_star[..., None]) <= 1
        big = np.iinfo(s.dtype).max
        second = np.where(near_winner, big, s).min(axis=2)
        valid &= ~(second < best * (1.0 + params.uniqueness_ratio / 100.0))

    offset = np.zeros((h, w), dtype=np.float64)
    interior = (d_star > 0) & (d_star < d_levels - 1)
    if np.any(interior):
        dm = np.take_along_axis(s, np.maximum(d_star - 1, 0)[..., None], axis=2)[..., 0]
        dp = np.take_along_axis(s, np.minimum(d_star + 1, d_levels - 1)[..., None],
                                axis=2)[..., 0]
        denom = dm + dp - 2 * best
        safe = interior & (denom > 0)
        offset[safe] = (dm[safe] - dp[safe]) / (2.0 * denom[safe])
        np.clip(offset, -0.5, 0.5, out=offset)

    values = np.where(valid, d_star + offset, INVALID).astype(np.float32)
    return DisparityMap(values=values, valid=valid)


def lr_consistency(left_disp: DisparityMap, right_disp: DisparityMap,
                   max_diff: float = 1.0) -> DisparityMap:
    """Keep a left pixel iff the right view agrees:
    |d_L(x, y) - d_R(x - round(d_L), y)| <= max_diff."""
    if left_disp.shape != right_disp.shape:
        raise ValueError("disparity map dimensions disagree")
    h, w = left_disp.shape
    xs = np.arange(w)[None, :]
    target = xs - np.round(left_disp.values).astype(np.int64)
    in_range = (target >= 0) & (target < w)
    target_safe = np.clip(target, 0, w - 1)
    d_r = np.take_along_axis(right_disp.values, target_safe, axis=1)
    r_valid = np.take_along_axis(right_disp.valid, target_safe, axis=1)
    agree = np.abs(left_disp.values - d_r) <= max_diff
    valid = left_disp.valid & in_range & r_valid & agree
    values = np.where(valid, left_disp.values, INVALID).astype(np.float32)
    return DisparityMap(values=values, valid=valid)


def speckle_filter(disp: DisparityMap, window: int = 100,
                   range_: float = 2.0) -> DisparityMap:
    """Invalidate connected blobs smaller than ``window`` pixels.

    Valid pixels are 4-connected when their disparities differ by at most
    ``range_``; components with fewer than ``window`` members are speckle.
    """
    if window <= 1:
        return disp
    h, w = disp.shape
    values = disp.values
    valid = disp.valid

    def edges(a_idx, b_idx):
        ok = (valid.ravel()[a_idx] & valid.ravel()[b_idx]
              & (np.abs(values.ravel()[a_idx] - values.ravel()[b_idx]) <= range_))
        return a_idx[ok], b_idx[ok]

    idx = np.arange(h * w).reshape(h, w)
    ha, hb = edges(idx[:, :-1].ravel(), idx[:, 1:].ravel())
    va, vb = edges(idx[:-1, :].ravel(), idx[1:, :].ravel())
    rows = np.concatenate([ha, va])
    cols = np.concatenate([hb, vb])
    graph = csr_matrix((np.ones(rows.size, dtype=np.int8), (rows, cols)),
                       shape=(h * w, h * w))
    _, labels = connected_components(graph, directed=False)
    sizes = np.bincount(labels[valid.ravel()], minlength=labels.max() + 1)
    keep = valid & (sizes[labels.reshape(h, w)] >= window)
    new_values = np.where(keep, values, INVALID).astype(np.float32)
    return DisparityMap(values=new_values, valid=keep)


def match_pair(left_image: np.ndarray, right_image: np.ndarray,
               params: SgmParams) -> DisparityMap:
    """Full left-view disparity: census, cost volume, aggregation, WTA,
    left-right consistency, speckle filter.

    The right-view disparity for the consistency check is computed by
    re-matching with swapped roles (cost between right(x) and left(x+d)),
    realized by mirroring both images, matching, and mirroring back.
    """
    left_cen = census_transform(left_image, params.census_window)
    right_cen = census_transform(right_image, params.census_window)

    vol_l = build_cost_volume(left_cen, right_cen, params.num_disparities)
    disp_l = select_disparity(aggregate_paths(vol_l, params), params)

    mirror_l = CensusImage(codes=right_cen.codes[:, ::-1], num_bits=right_cen.num_bits)
    mirror_r = CensusImage(codes=left_cen.codes[:, ::-1], num_bits=left_cen.num_bits)
    vol_r = build_cost_volume(mirror_l, mirror_r, params.num_disparities)
    disp_r_flipped = select_disparity(aggregate_paths(vol_r, params), params)
    disp_r = DisparityMap(values=np.ascontiguousarray(disp_r_flipped.values[:, ::-1]),
                          valid=np.ascontiguousarray(disp_r_flipped.valid[:, ::-1]))

    checked = lr_consistency(disp_l, disp_r, params.lr_max_diff)
    return speckle_filter(checked, params.speckle_window, params.speckle_range)


def depth_from_disparity_map(rig: StereoRig, disp: DisparityMap) -> DepthMap:
    """Z = f*B/d per valid pixel; d <= 0 (e.g. sky at infinity) is invalid."""
    fb = rig.intrinsics.focal_px * rig.baseline
    positive = disp.valid & (disp.values > 0)
    with np.errstate(divide="ignore"):
        z = np.where(positive, fb / disp.values, INVALID)
    return DepthMap(values=z.astype(np.float32), valid=positive)


def compute_depth(rig: StereoRig, frame, params: SgmParams) -> tuple[DisparityMap, DepthMap]:
    """Disparity and depth (scene units) for a rendered stereo frame."""
    if frame.left.shape != (rig.intrinsics.height_px, rig.intrinsics.width_px):
        raise ValueError(
            f"frame {frame.left.shape} does not match rig "
            f"{rig.intrinsics.height_px}x{rig.intrinsics.width_px}")
    disp = match_pair(frame.left, frame.right, params)
    return disp, depth_from_disparity_map(rig, disp)
