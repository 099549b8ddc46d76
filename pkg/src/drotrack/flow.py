"""Sparse iterative pyramidal Lucas-Kanade optical flow.

Coarse-to-fine Newton iterations on the window image difference; points are
flagged lost when the gradient matrix is near-singular, the estimate leaves
the image, or the update diverges beyond the window size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import PointF
from .imgproc import Pyramid, sobel_gradients


@dataclass(frozen=True)
class FlowConfig:
    pyramid_levels: int = 3
    window: int = 21  # odd
    max_iters: int = 30
    epsilon: float = 0.01  # convergence threshold on the update norm, px
    min_eig_threshold: float = 1e-4  # normalized; below it a point is lost

    def __post_init__(self) -> None:
        if self.window < 3 or self.window % 2 == 0:
            raise ValueError("window must be odd and >= 3")
        if self.pyramid_levels < 1:
            raise ValueError("need at least one pyramid level")


@dataclass
class FlowResult:
    new_points: list[PointF]
    ok: list[bool]  # False = lost
    residual: list[float]  # mean |intensity error| over the window, gray levels


def _bilinear(img: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Sub-pixel sampling with replicate border."""
    h, w = img.shape
    xs = np.clip(xs, 0.0, w - 1.0)
    ys = np.clip(ys, 0.0, h - 1.0)
    x0 = np.clip(np.floor(xs).astype(np.int64), 0, w - 2) if w > 1 else np.zeros_like(xs, np.int64)
    y0 = np.clip(np.floor(ys).astype(np.int64), 0, h - 2) if h > 1 else np.zeros_like(ys, np.int64)
    fx = xs - x0
    fy = ys - y0
    top = img[y0, x0] * (1 - fx) + img[y0, x0 + 1] * fx
    bot = img[y0 + 1, x0] * (1 - fx) + img[y0 + 1, x0 + 1] * fx
    return top * (1 - fy) + bot * fy


def _window_gradients(level: np.ndarray, cx: float, cy: float, r: int):
    """Sobel derivatives of the previous image sampled on the fixed window."""
    h, w = level.shape
    x0 = max(0, int(np.floor(cx)) - r - 2)
    y0 = max(0, int(np.floor(cy)) - r - 2)
    x1 = min(w, int(np.ceil(cx)) + r + 3)
    y1 = min(h, int(np.ceil(cy)) + r + 3)
    crop = level[y0:y1, x0:x1]
    if crop.shape[0] < 3 or crop.shape[1] < 3:
        return None
    gx, gy = sobel_gradients(crop)
    offs = np.arange(-r, r + 1, dtype=np.float64)
    wy, wx = np.meshgrid(offs, offs, indexing="ij")
    xs = wx + (cx - x0)
    ys = wy + (cy - y0)
    # Sobel response of a unit ramp is 8; rescale to derivative units and
    # normalize intensities to [0, 1] so min_eig_threshold is scale-free.
    scale = 1.0 / (8.0 * 255.0)
    return _bilinear(gx, xs, ys) * scale, _bilinear(gy, xs, ys) * scale


def lk_track(prev: Pyramid, nxt: Pyramid, points: list[PointF], cfg: FlowConfig) -> FlowResult:
    """Track points from the previous pyramid into the next one."""
    if [lvl.shape for lvl in prev.levels] != [lvl.shape for lvl in nxt.levels]:
        raise ValueError("pyramid geometries do not match")
    r = cfg.window // 2
    win_area = float(cfg.window * cfg.window)

    new_points: list[PointF] = []
    ok: list[bool] = []
    residual: list[float] = []
    for p in points:
        pos, good, res = _track_point(prev, nxt, p, cfg, r, win_area)
        new_points.append(pos)
        ok.append(good)
        residual.append(res)
    return FlowResult(new_points=new_points, ok=ok, residual=residual)


def _track_point(prev, nxt, p, cfg, r, win_area):
    top = prev.num_levels - 1
    g = np.zeros(2)  # displacement guess carried between levels
    lost = False
    res = float("inf")
    offs = np.arange(-r, r + 1, dtype=np.float64)
    wy, wx = np.meshgrid(offs, offs, indexing="ij")

    for level in range(top, -1, -1):
        I = prev.levels[level]
        J = nxt.levels[level]
        h, w = I.shape
        scale = 2.0**level
        cx, cy = p.x / scale, p.y / scale
        if not (0 <= cx <= w - 1 and 0 <= cy <= h - 1):
            lost = True
            break

        grads = _window_gradients(I, cx, cy, r)
        if grads is None:
            lost = True
            break
        gx, gy = grads
        gxx = (gx * gx).sum()
        gxy = (gx * gy).sum()
        gyy = (gy * gy).sum()
        half_trace = (gxx + gyy) / 2.0
        min_eig = half_trace - np.sqrt(((gxx - gyy) / 2.0) ** 2 + gxy * gxy)
        if min_eig / win_area < cfg.min_eig_threshold:
            lost = True
            break
        det = gxx * gyy - gxy * gxy
        inv = np.array([[gyy, -gxy], [-gxy, gxx]]) / det

        i_win = _bilinear(I, wx + cx, wy + cy) / 255.0
        d = g.copy()
        for _ in range(cfg.max_iters):
            jx = wx + cx + d[0]
            jy = wy + cy + d[1]
            diff = i_win - _bilinear(J, jx, jy) / 255.0
            b = np.array([(gx * diff).sum(), (gy * diff).sum()])
            nu = inv @ b
            d += nu
            if np.hypot(nu[0], nu[1]) < cfg.epsilon:
                break
        if np.hypot(d[0] - g[0], d[1] - g[1]) > cfg.window:
            lost = True
            break
        if not (0 <= cx + d[0] <= w - 1 and 0 <= cy + d[1] <= h - 1):
            lost = True
            break
        res = float(np.abs(i_win - _bilinear(J, wx + cx + d[0], wy + cy + d[1]) / 255.0).mean()) * 255.0
        g = d if level == 0 else 2.0 * d

    final = PointF(p.x + g[0], p.y + g[1])
    if lost or not (np.isfinite(final.x) and np.isfinite(final.y)):
        return p, False, res
    return final, True, res
