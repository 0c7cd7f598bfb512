"""Depth-driven obstacle detection with confidence scoring and NMS.

Plays the neural detector's role in the perception loop: valid depth pixels
nearer than a threshold are grouped into 4-connected components, each
component becomes a box with a fill-ratio confidence (component area over
box area, so compact blobs score high) and a median-depth range estimate.
Detections then pass a confidence filter and greedy non-maximum suppression
using the deployed thresholds (confidence 0.25, NMS IoU 0.2).

Boxes are half-open pixel rectangles (x_min, y_min, x_max, y_max); the area
is (x_max - x_min) * (y_max - y_min).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from deskrover.stereo import DepthMap

Box = tuple[float, float, float, float]


@dataclass(frozen=True)
class Detection:
    box: Box
    confidence: float
    range_m: float
    class_label: str = "obstacle"
    source_timestamp: float = 0.0

    def __post_init__(self):
        x0, y0, x1, y1 = self.box
        if not (x0 < x1 and y0 < y1):
            raise ValueError(f"degenerate box {self.box}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence}")

    def center_x(self) -> float:
        return (self.box[0] + self.box[2]) / 2.0

    def scaled(self, factor: float) -> "Detection":
        """Rescale box coordinates (e.g. probe resolution -> full frame)."""
        x0, y0, x1, y1 = self.box
        return Detection(box=(x0 * factor, y0 * factor, x1 * factor, y1 * factor),
                         confidence=self.confidence, range_m=self.range_m,
                         class_label=self.class_label,
                         source_timestamp=self.source_timestamp)

    def to_wire(self) -> dict:
        return {
            "box": [float(v) for v in self.box],
            "confidence": float(self.confidence),
            "range_m": float(self.range_m),
            "label": self.class_label,
            "ts": float(self.source_timestamp),
        }

    @classmethod
    def from_wire(cls, data: dict) -> "Detection":
        return cls(box=tuple(float(v) for v in data["box"]),
                   confidence=float(data["confidence"]),
                   range_m=float(data["range_m"]),
                   class_label=str(data.get("label", "obstacle")),
                   source_timestamp=float(data.get("ts", 0.0)))


@dataclass(frozen=True)
class DetectorConfig:
    near_threshold: float = 1.0        # meters
    confidence_threshold: float = 0.25
    nms_iou_threshold: float = 0.2
    min_area: int = 25                 # pixels
    rate_hz: float = 10.0

    def __post_init__(self):
        if self.near_threshold <= 0:
            raise ValueError("near_threshold must be positive")
        for name in ("confidence_threshold", "nms_iou_threshold"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if self.min_area < 1 or self.rate_hz <= 0:
            raise ValueError("min_area must be >= 1 and rate_hz > 0")


def iou(a: Box, b: Box) -> float:
    """Intersection over union of two half-open boxes; 0 when disjoint."""
    ix0 = max(a[0], b[0])
    iy0 = max(a[1], b[1])
    ix1 = min(a[2], b[2])
    iy1 = min(a[3], b[3])
    inter = max(0.0, ix1 - ix0) * max(0.0, iy1 - iy0)
    if inter == 0.0:
        return 0.0
    area_a = (a[2] - a[0]) * (a[3] - a[1])
    area_b = (b[2] - b[0]) * (b[3] - b[1])
    return inter / (area_a + area_b - inter)


def nms(detections: list[Detection], iou_threshold: float) -> list[Detection]:
    """Greedy NMS: highest confidence first (ties by smaller x_min, then
    y_min), keeping a box iff its IoU with every kept box is <= threshold."""
    order = sorted(detections,
                   key=lambda d: (-d.confidence, d.box[0], d.box[1]))
    kept: list[Detection] = []
    for det in order:
        if all(iou(det.box, k.box) <= iou_threshold for k in kept):
            kept.append(det)
    return kept


def detect(depth: DepthMap, config: DetectorConfig,
           timestamp: float = 0.0) -> list[Detection]:
    """Detect near obstacles in a metric depth map.

    Pixels with valid depth below ``near_threshold`` form 4-connected
    components; components of at least ``min_area`` pixels become
    detections, filtered by confidence and NMS.
    """
    near = depth.valid & (depth.values < config.near_threshold)
    if not near.any():
        return []
    labels, count = ndimage.label(near)  # default structure = 4-connectivity
    candidates: list[Detection] = []
    slices = ndimage.find_objects(labels)
    for i, sl in enumerate(slices, start=1):
        if sl is None:
            continue
        component = labels[sl] == i
        area = int(component.sum())
        if area < config.min_area:
            continue
        y0, x0 = sl[0].start, sl[1].start
        y1, x1 = sl[0].stop, sl[1].stop
        box_area = (x1 - x0) * (y1 - y0)
        confidence = area / box_area
        range_m = float(np.median(depth.values[sl][component]))
        candidates.append(Detection(box=(float(x0), float(y0), float(x1), float(y1)),
                                    confidence=confidence, range_m=range_m,
                                    source_timestamp=timestamp))
    candidates = [d for d in candidates
                  if d.confidence >= config.confidence_threshold]
    return nms(candidates, config.nms_iou_threshold)
