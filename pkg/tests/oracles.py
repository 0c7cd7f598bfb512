"""Independent reference implementations used as test oracles.

Everything here is written the slow, obvious way (plain Python loops) and
deliberately shares no code with the production paths it checks.
"""

from __future__ import annotations

import numpy as np


def census_bits_reference(image: np.ndarray, window: tuple[int, int]) -> list[list[list[int]]]:
    """Per-pixel census bit list (row-major neighbors, center excluded),
    edge-clamped neighborhoods."""
    h, w = image.shape
    cw, ch = window
    rx, ry = cw // 2, ch // 2
    out = []
    for y in range(h):
        row = []
        for x in range(w):
            center = int(image[y, x])
            bits = []
            for dy in range(-ry, ry + 1):
                for dx in range(-rx, rx + 1):
                    if dx == 0 and dy == 0:
                        continue
                    yy = min(max(y + dy, 0), h - 1)
                    xx = min(max(x + dx, 0), w - 1)
                    bits.append(1 if int(image[yy, xx]) < center else 0)
            row.append(bits)
        out.append(row)
    return out


def hamming_cost_reference(left_bits, right_bits, num_disparities: int,
                           max_cost: int) -> np.ndarray:
    """Brute-force census Hamming cost volume (H, W, D)."""
    h = len(left_bits)
    w = len(left_bits[0])
    cost = np.zeros((h, w, num_disparities), dtype=np.int64)
    for y in range(h):
        for x in range(w):
            for d in range(num_disparities):
                if x - d < 0:
                    cost[y, x, d] = max_cost
                else:
                    a = left_bits[y][x]
                    b = right_bits[y][x - d]
                    cost[y, x, d] = sum(1 for u, v in zip(a, b) if u != v)
    return cost


def aggregate_reference(cost: np.ndarray, p1: int, p2: int,
                        directions: list[tuple[int, int]]) -> np.ndarray:
    """Naive per-direction semi-global DP, summed over directions.

    Direction (dy, dx) means pixel (y, x) takes its predecessor at
    (y - dy, x - dx); the recursion restarts with the raw cost wherever the
    predecessor falls outside the image.
    """
    h, w, d_levels = cost.shape
    total = np.zeros_like(cost, dtype=np.int64)
    for dy, dx in directions:
        path = np.zeros_like(cost, dtype=np.int64)
        ys = range(h) if dy >= 0 else range(h - 1, -1, -1)
        xs = range(w) if dx >= 0 else range(w - 1, -1, -1)
        for y in ys:
            for x in xs:
                py, px = y - dy, x - dx
                if not (0 <= py < h and 0 <= px < w):
                    for d in range(d_levels):
                        path[y, x, d] = cost[y, x, d]
                    continue
                prev = path[py, px]
                prev_min = int(prev.min())
                for d in range(d_levels):
                    best = int(prev[d])
                    if d > 0:
                        best = min(best, int(prev[d - 1]) + p1)
                    if d < d_levels - 1:
                        best = min(best, int(prev[d + 1]) + p1)
                    best = min(best, prev_min + p2)
                    path[y, x, d] = cost[y, x, d] + best - prev_min
        total += path
    return total


def nms_reference(boxes, confidences, iou_threshold: float) -> list[int]:
    """O(n^2) greedy NMS over (x0, y0, x1, y1) boxes; returns kept indices
    into the input order."""

    def area(b):
        return max(0.0, b[2] - b[0]) * max(0.0, b[3] - b[1])

    def iou(a, b):
        ix0, iy0 = max(a[0], b[0]), max(a[1], b[1])
        ix1, iy1 = min(a[2], b[2]), min(a[3], b[3])
        inter = max(0.0, ix1 - ix0) * max(0.0, iy1 - iy0)
        union = area(a) + area(b) - inter
        return inter / union if union > 0 else 0.0

    order = sorted(range(len(boxes)),
                   key=lambda i: (-confidences[i], boxes[i][0], boxes[i][1]))
    kept = []
    for i in order:
        if all(iou(boxes[i], boxes[j]) <= iou_threshold for j in kept):
            kept.append(i)
    return kept


def connected_components_reference(mask: np.ndarray) -> list[list[tuple[int, int]]]:
    """4-connected components of a boolean mask via BFS flood fill."""
    h, w = mask.shape
    seen = np.zeros_like(mask, dtype=bool)
    comps = []
    for y in range(h):
        for x in range(w):
            if not mask[y, x] or seen[y, x]:
                continue
            queue = [(y, x)]
            seen[y, x] = True
            comp = []
            while queue:
                cy, cx = queue.pop()
                comp.append((cy, cx))
                for ny, nx in ((cy - 1, cx), (cy + 1, cx), (cy, cx - 1), (cy, cx + 1)):
                    if 0 <= ny < h and 0 <= nx < w and mask[ny, nx] and not seen[ny, nx]:
                        seen[ny, nx] = True
                        queue.append((ny, nx))
            comps.append(comp)
    return comps


def speckle_components_reference(values: np.ndarray, valid: np.ndarray,
                                 range_: float) -> list[list[tuple[int, int]]]:
    """Components of valid pixels where 4-neighbors connect iff the disparity
    difference is within ``range_``."""
    h, w = values.shape
    seen = np.zeros((h, w), dtype=bool)
    comps = []
    for y in range(h):
        for x in range(w):
            if not valid[y, x] or seen[y, x]:
                continue
            queue = [(y, x)]
            seen[y, x] = True
            comp = []
            while queue:
                cy, cx = queue.pop()
                comp.append((cy, cx))
                for ny, nx in ((cy - 1, cx), (cy + 1, cx), (cy, cx - 1), (cy, cx + 1)):
                    if (0 <= ny < h and 0 <= nx < w and valid[ny, nx]
                            and not seen[ny, nx]
                            and abs(float(values[ny, nx]) - float(values[cy, cx])) <= range_):
                        seen[ny, nx] = True
                        queue.append((ny, nx))
            comps.append(comp)
    return comps


def point_segment_distance(p, a, b) -> float:
    """Euclidean distance from point p to segment ab (2D)."""
    p = np.asarray(p, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return float(np.linalg.norm(p - a))
    t = float(np.clip((p - a) @ ab / denom, 0.0, 1.0))
    return float(np.linalg.norm(p - (a + t * ab)))
