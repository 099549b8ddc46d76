"""Shared domain types: frames, boxes, points and per-sequence tracker state."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

# ITU-R 601 luma weights, fixed so the cached gray plane is reproducible.
_LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


class PointF(NamedTuple):
    """Continuous pixel coordinate (x rightward, y downward)."""

    x: float
    y: float


@dataclass
class Frame:
    """One decoded video frame: color plane plus a lazily derived gray plane."""

    index: int
    color: np.ndarray  # (H, W, 3) uint8
    _gray: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.color.ndim != 3 or self.color.shape[2] != 3:
            raise ValueError(f"color plane must be (H, W, 3), got {self.color.shape}")
        if self.color.shape[0] < 1 or self.color.shape[1] < 1:
            raise ValueError("frame must have positive dimensions")

    @property
    def height(self) -> int:
        return self.color.shape[0]

    @property
    def width(self) -> int:
        return self.color.shape[1]

    @property
    def gray(self) -> np.ndarray:
        """Luminance plane, round-half-up of 0.299R + 0.587G + 0.114B."""
        if self._gray is None:
            luma = self.color.astype(np.float64) @ _LUMA_WEIGHTS
            self._gray = np.floor(luma + 0.5).astype(np.uint8)
        return self._gray


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box stored center-based; corner form is derived on demand."""

    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self) -> None:
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"box must have positive size, got w={self.w}, h={self.h}")

    @property
    def x(self) -> float:
        return self.cx - self.w / 2.0

    @property
    def y(self) -> float:
        return self.cy - self.h / 2.0

    @property
    def center(self) -> PointF:
        return PointF(self.cx, self.cy)

    @property
    def area(self) -> float:
        return self.w * self.h

    @classmethod
    def from_corner(cls, x: float, y: float, w: float, h: float) -> "BBox":
        return cls(x + w / 2.0, y + h / 2.0, w, h)

    def scaled(self, factor: float) -> "BBox":
        return BBox(self.cx, self.cy, self.w * factor, self.h * factor)

    def moved_to(self, center: PointF) -> "BBox":
        return BBox(center.x, center.y, self.w, self.h)


def bbox_iou(a: BBox, b: BBox) -> float:
    """Intersection-over-union of two boxes; 0 when disjoint."""
    ix = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    iy = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    return inter / (a.area + b.area - inter)


def center_distance(a: BBox, b: BBox) -> float:
    """Euclidean distance between box centers, in pixels."""
    return math.hypot(a.cx - b.cx, a.cy - b.cy)


@dataclass
class TrackState:
    """Mutable per-sequence state; confined to a single tracking session.

    ``rt_scale_ff`` is fixed at initialization (reference template height over
    first-frame height); the correction margin is the only field rewritten on
    re-detection.
    """

    rt_box: BBox
    rt_patch: np.ndarray
    rt_scale_ff: float
    corr_margin: tuple[float, float]
    prev_center: PointF
    prev_bbox: BBox
    tracked_points: list[PointF]
    frame_h_ff: int
