"""Shi-Tomasi corner response and adaptive corner selection.

The detector starts strict (high quality threshold, one corner) and relaxes
its parameters monotonically until a corner passes the histogram-similarity
and center-distance gates; multiple surviving corners are fused into the
centroid of their convex hull.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .core import BBox, Frame, PointF
from .imgproc import extract_patch, hist_correlation, histogram, sobel_gradients

HIST_BINS = 32
MAX_CORNER_CAP = 16
MIN_DISTANCE_FLOOR = 1.0


@dataclass(frozen=True)
class CornerConfig:
    quality_level: float = 0.3
    min_distance: Optional[float] = None  # default 0.5 * min(template w, h)
    block_size: int = 3
    max_corners: int = 1
    max_adapt_iters: int = 6
    quality_decay: float = 0.5
    corner_growth: int = 2


@dataclass(frozen=True)
class CornerSet:
    points: list[PointF]
    anchor: PointF


def shi_tomasi_response(gray: np.ndarray, block_size: int = 3) -> np.ndarray:
    """Per-pixel minimum eigenvalue of the structure tensor summed over a
    block_size window (closed form for the symmetric 2x2 tensor)."""
    if gray.shape[0] < block_size or gray.shape[1] < block_size:
        raise ValueError("image smaller than block size")
    ix, iy = sobel_gradients(gray)
    a = _box_sum(ix * ix, block_size)
    b = _box_sum(ix * iy, block_size)
    c = _box_sum(iy * iy, block_size)
    half_trace = (a + c) / 2.0
    return half_trace - np.sqrt(((a - c) / 2.0) ** 2 + b * b)


def _box_sum(img: np.ndarray, size: int) -> np.ndarray:
    """Window sum with replicate border via an integral image."""
    r = size // 2
    padded = np.pad(img, r, mode="edge")
    integral = np.zeros((padded.shape[0] + 1, padded.shape[1] + 1))
    np.cumsum(np.cumsum(padded, axis=0), axis=1, out=integral[1:, 1:])
    h, w = img.shape
    return (
        integral[size : size + h, size : size + w]
        - integral[size : size + h, :w]
        - integral[:h, size : size + w]
        + integral[:h, :w]
    )


def detect_corners(gray: np.ndarray, cfg: CornerConfig, region: BBox) -> list[PointF]:
    """Strongest corners inside a region: relative quality threshold, greedy
    non-maximum suppression with radius min_distance, top max_corners."""
    h, w = gray.shape
    x0 = max(0, int(math.floor(region.x)))
    y0 = max(0, int(math.floor(region.y)))
    x1 = min(w, int(math.ceil(region.x + region.w)))
    y1 = min(h, int(math.ceil(region.y + region.h)))
    if x0 >= x1 or y0 >= y1:
        raise ValueError("region does not intersect the image")

    # evaluate the response on the region plus the filter support only
    margin = cfg.block_size // 2 + 1
    cx0, cy0 = max(0, x0 - margin), max(0, y0 - margin)
    cx1, cy1 = min(w, x1 + margin), min(h, y1 + margin)
    crop = gray[cy0:cy1, cx0:cx1]
    if crop.shape[0] < max(3, cfg.block_size) or crop.shape[1] < max(3, cfg.block_size):
        return []
    response = shi_tomasi_response(crop, cfg.block_size)[y0 - cy0 : y1 - cy0, x0 - cx0 : x1 - cx0]
    peak = response.max()
    if peak <= 0:
        return []
    ys, xs = np.nonzero(response >= cfg.quality_level * peak)
    if len(ys) == 0:
        return []
    order = np.argsort(response[ys, xs])[::-1]
    min_dist = cfg.min_distance if cfg.min_distance is not None else MIN_DISTANCE_FLOOR
    min_dist2 = min_dist * min_dist

    selected: list[PointF] = []
    for i in order:
        px, py = float(xs[i] + x0), float(ys[i] + y0)
        if all((px - p.x) ** 2 + (py - p.y) ** 2 >= min_dist2 for p in selected):
            selected.append(PointF(px, py))
            if len(selected) >= cfg.max_corners:
                break
    return selected


def convex_hull_centroid(points: list[PointF]) -> PointF:
    """Centroid of the convex hull: the point itself, the midpoint of two, or
    the polygon area centroid for three or more points."""
    if not points:
        raise ValueError("need at least one point")
    if len(points) == 1:
        return points[0]
    if len(points) == 2:
        return PointF((points[0].x + points[1].x) / 2.0, (points[0].y + points[1].y) / 2.0)
    hull = _monotone_chain(points)
    if len(hull) < 3:
        xs = [p.x for p in hull]
        ys = [p.y for p in hull]
        return PointF(sum(xs) / len(xs), sum(ys) / len(ys))
    # signed-area centroid of the hull polygon
    area2 = 0.0
    cx = 0.0
    cy = 0.0
    for i in range(len(hull)):
        x1, y1 = hull[i]
        x2, y2 = hull[(i + 1) % len(hull)]
        cross = x1 * y2 - x2 * y1
        area2 += cross
        cx += (x1 + x2) * cross
        cy += (y1 + y2) * cross
    if abs(area2) < 1e-12:  # collinear hull: fall back to the vertex mean
        xs = [p.x for p in hull]
        ys = [p.y for p in hull]
        return PointF(sum(xs) / len(xs), sum(ys) / len(ys))
    return PointF(cx / (3.0 * area2), cy / (3.0 * area2))


def _monotone_chain(points: list[PointF]) -> list[PointF]:
    pts = sorted(set((p.x, p.y) for p in points))
    if len(pts) <= 2:
        return [PointF(*p) for p in pts]

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list[tuple[float, float]] = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[tuple[float, float]] = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return [PointF(*p) for p in lower[:-1] + upper[:-1]]


def accept_corner(
    anchor: PointF,
    rt_box: BBox,
    rt_patch: np.ndarray,
    frame: Frame,
    alpha: float,
    beta_factor: float,
) -> bool:
    """Accept the anchor when the test template around it matches the
    reference template: histogram correlation >= alpha and center distance
    <= beta_factor * (w + h)."""
    test_box = BBox(anchor.x, anchor.y, rt_box.w, rt_box.h)
    try:
        test_patch = extract_patch(frame, test_box)
    except ValueError:
        return False
    simi = hist_correlation(histogram(rt_patch, HIST_BINS), histogram(test_patch, HIST_BINS))
    if simi is None:
        return False
    dist = math.hypot(rt_box.cx - anchor.x, rt_box.cy - anchor.y)
    beta = beta_factor * (rt_box.w + rt_box.h)
    return simi >= alpha and dist <= beta


def adaptive_select(
    frame: Frame,
    rt_box: BBox,
    rt_patch: np.ndarray,
    cfg: CornerConfig,
    alpha: float = 0.5,
    beta_factor: float = 0.5,
) -> CornerSet:
    """Recursively relax detector parameters until an anchor passes
    accept_corner; falls back to the template center after max_adapt_iters."""
    min_dist = cfg.min_distance if cfg.min_distance is not None else 0.5 * min(rt_box.w, rt_box.h)
    current = replace(cfg, min_distance=min_dist)
    center = rt_box.center
    for _ in range(cfg.max_adapt_iters):
        found = detect_corners(frame.gray, current, rt_box)
        if found:
            found.sort(key=lambda p: (p.x - center.x) ** 2 + (p.y - center.y) ** 2)
            anchor = convex_hull_centroid(found)
            if accept_corner(anchor, rt_box, rt_patch, frame, alpha, beta_factor):
                return CornerSet(points=found, anchor=anchor)
        current = replace(
            current,
            quality_level=current.quality_level * current.quality_decay,
            max_corners=min(current.max_corners * current.corner_growth, MAX_CORNER_CAP),
            min_distance=max(current.min_distance * 0.5, MIN_DISTANCE_FLOOR),
        )
    return CornerSet(points=[center], anchor=center)
