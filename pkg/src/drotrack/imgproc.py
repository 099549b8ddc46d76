"""Low-level image primitives: gray conversion, gradients, pyramids,
histograms and their correlation, binary morphology, patch extraction and
half-size decimation.

Everything is plain numpy with replicate borders; no OpenCV dependency.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import BBox, Frame

SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)
SOBEL_Y = SOBEL_X.T

# 5-tap binomial antialias kernel used between pyramid levels.
_GAUSS5 = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0


@dataclass(frozen=True)
class Histogram:
    """Per-channel bin counts, concatenated channel-major."""

    bins: np.ndarray
    bin_count: int
    channels: int

    def __post_init__(self) -> None:
        assert self.bins.shape == (self.bin_count * self.channels,)


@dataclass(frozen=True)
class Pyramid:
    """Coarse-to-fine image stack; level 0 is the original resolution."""

    levels: list[np.ndarray]

    @property
    def num_levels(self) -> int:
        return len(self.levels)


def to_gray(frame: Frame) -> np.ndarray:
    """Cached luminance plane of a frame (see core.Frame.gray)."""
    return frame.gray


def _correlate3(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """3x3 correlation with replicate border, via shifted-slice accumulation."""
    padded = np.pad(img.astype(np.float64), 1, mode="edge")
    h, w = img.shape
    out = np.zeros((h, w), dtype=np.float64)
    for dy in range(3):
        for dx in range(3):
            k = kernel[dy, dx]
            if k != 0.0:
                out += k * padded[dy : dy + h, dx : dx + w]
    return out


def sobel_gradients(gray: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Signed 3x3 Sobel gradients (Ix, Iy) with replicate border."""
    if gray.shape[0] < 3 or gray.shape[1] < 3:
        raise ValueError(f"image too small for 3x3 Sobel: {gray.shape}")
    return _correlate3(gray, SOBEL_X), _correlate3(gray, SOBEL_Y)


def _blur5(img: np.ndarray) -> np.ndarray:
    """Separable 5-tap binomial blur with replicate border."""
    padded = np.pad(img, ((2, 2), (0, 0)), mode="edge")
    tmp = np.zeros_like(img, dtype=np.float64)
    for i, k in enumerate(_GAUSS5):
        tmp += k * padded[i : i + img.shape[0], :]
    padded = np.pad(tmp, ((0, 0), (2, 2)), mode="edge")
    out = np.zeros_like(tmp)
    for i, k in enumerate(_GAUSS5):
        out += k * padded[:, i : i + img.shape[1]]
    return out


def build_pyramid(gray: np.ndarray, levels: int) -> Pyramid:
    """Gaussian pyramid: blur-then-decimate, level k has dims ceil(dim / 2^k)."""
    if levels < 1:
        raise ValueError("levels must be >= 1")
    base = gray.astype(np.float64)
    stack = [base]
    for _ in range(levels - 1):
        prev = stack[-1]
        if prev.shape[0] // 2 < 8 or prev.shape[1] // 2 < 8:
            raise ValueError(
                f"too many pyramid levels for image size {gray.shape}: "
                f"coarsest level would fall below 8x8"
            )
        stack.append(_blur5(prev)[::2, ::2])
    return Pyramid(stack)


def max_pyramid_levels(shape: tuple[int, int], requested: int) -> int:
    """Largest level count <= requested whose coarsest level stays >= 8x8."""
    levels = 1
    h, w = shape
    while levels < requested and h // 2 >= 8 and w // 2 >= 8:
        h //= 2
        w //= 2
        levels += 1
    return levels


def histogram(patch: np.ndarray, bins_per_channel: int) -> Histogram:
    """Per-channel count histogram of an 8-bit patch (1 or 3 channels)."""
    if patch.size == 0:
        raise ValueError("cannot histogram an empty patch")
    if patch.ndim == 2:
        patch = patch[:, :, None]
    channels = patch.shape[2]
    idx = patch.astype(np.int64) * bins_per_channel // 256
    bins = np.concatenate(
        [np.bincount(idx[:, :, c].ravel(), minlength=bins_per_channel) for c in range(channels)]
    ).astype(np.float64)
    return Histogram(bins=bins, bin_count=bins_per_channel, channels=channels)


def hist_correlation(h1: Histogram, h2: Histogram) -> Optional[float]:
    """Pearson correlation over all bins jointly; None when either histogram
    is constant (undefined similarity, treated as a failed match by callers)."""
    if h1.bins.shape != h2.bins.shape:
        raise ValueError("histogram shapes differ")
    a = h1.bins - h1.bins.mean()
    b = h2.bins - h2.bins.mean()
    denom = np.sqrt((a * a).sum() * (b * b).sum())
    if denom == 0.0:
        return None
    return float((a * b).sum() / denom)


def _morph3(mask: np.ndarray, op) -> np.ndarray:
    padded = np.pad(mask.astype(bool), 1, mode="edge")
    h, w = mask.shape
    views = [padded[dy : dy + h, dx : dx + w] for dy in range(3) for dx in range(3)]
    return op(np.stack(views), axis=0)


def erode(mask: np.ndarray) -> np.ndarray:
    """3x3 binary erosion with replicate border."""
    return _morph3(mask, np.min)


def dilate(mask: np.ndarray) -> np.ndarray:
    """3x3 binary dilation with replicate border."""
    return _morph3(mask, np.max)


def extract_patch(frame: Frame, box: BBox) -> np.ndarray:
    """Rasterized color patch under a box, clipped to the frame bounds."""
    x0 = int(round(box.x))
    y0 = int(round(box.y))
    x1 = int(round(box.x + box.w))
    y1 = int(round(box.y + box.h))
    x0c, x1c = max(0, x0), min(frame.width, x1)
    y0c, y1c = max(0, y0), min(frame.height, y1)
    if x0c >= x1c or y0c >= y1c:
        raise ValueError(f"box {box} lies entirely outside the {frame.width}x{frame.height} frame")
    return frame.color[y0c:y1c, x0c:x1c]


def resize_half(frame: Frame) -> Frame:
    """2x decimation with a 2x2 box filter per channel (round half up)."""
    if frame.height < 2 or frame.width < 2:
        raise ValueError("frame too small to halve")
    h2, w2 = frame.height // 2, frame.width // 2
    c = frame.color[: 2 * h2, : 2 * w2].astype(np.float64)
    mean = (c[0::2, 0::2] + c[0::2, 1::2] + c[1::2, 0::2] + c[1::2, 1::2]) / 4.0
    return Frame(index=frame.index, color=np.floor(mean + 0.5).astype(np.uint8))
