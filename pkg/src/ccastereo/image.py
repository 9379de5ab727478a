"""Raster helpers: grayscale, pyramids, Gaussian windows and DP pre-filters.

Images are plain 2-D ``float64`` numpy arrays indexed ``[row, col]``.
Every filter replicates edge pixels at the border.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy import ndimage

from .errors import DimensionError, LevelCountError, ParameterError

LUMA_WEIGHTS = (0.299, 0.587, 0.114)
VIGNETTING_FLOOR = 1e-4


def as_image(img):
    """Return ``img`` as a validated 2-D float64 array."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"expected a non-empty 2-D raster, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ParameterError("image contains non-finite values")
    return arr


def _same_shape(a, b):
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")


def to_grayscale(rgb):
    """BT.601 luma of an RGB raster.

    Accepts an ``(H, W, 3)`` array, a sequence of three ``(H, W)`` channels,
    or an already single-channel raster (returned unchanged).
    """
    if isinstance(rgb, (list, tuple)):
        if len(rgb) == 1:
            return as_image(rgb[0])
        if len(rgb) != 3:
            raise DimensionError(f"expected 3 channels, got {len(rgb)}")
        chans = [np.asarray(c, dtype=np.float64) for c in rgb]
        if not (chans[0].shape == chans[1].shape == chans[2].shape):
            raise DimensionError("channel dimensions differ: "
                                 + ", ".join(str(c.shape) for c in chans))
        stack = np.stack(chans, axis=-1)
    else:
        stack = np.asarray(rgb, dtype=np.float64)
        if stack.ndim == 2:
            return as_image(stack)
        if stack.ndim == 3 and stack.shape[2] == 1:
            return as_image(stack[..., 0])
        if stack.ndim != 3 or stack.shape[2] < 3:
            raise DimensionError(f"cannot convert shape {stack.shape} to grayscale")
        stack = stack[..., :3]
    r, g, b = LUMA_WEIGHTS
    return as_image(r * stack[..., 0] + g * stack[..., 1] + b * stack[..., 2])


def gaussian_kernel1d(std):
    """Normalized 1-D Gaussian taps with radius ``ceil(3*std)``."""
    if not std > 0:
        raise ParameterError(f"Gaussian std must be positive, got {std}")
    radius = int(math.ceil(3.0 * std))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / std) ** 2)
    return k / k.sum()


def gaussian_window_filter(img, std):
    """Separable Gaussian smoothing (the matching window of the cost)."""
    k = gaussian_kernel1d(std)
    img = np.asarray(img, dtype=np.float64)
    out = ndimage.correlate1d(img, k, axis=0, mode="nearest")
    return ndimage.correlate1d(out, k, axis=1, mode="nearest")


@dataclass
class Pyramid:
    levels: list
    factor: float

    def __len__(self):
        return len(self.levels)

    def __getitem__(self, i):
        return self.levels[i]


def _downsample(img, factor):
    # sample at coarse pixel centres so bilinear_upsample inverts the geometry
    h, w = img.shape
    nh, nw = math.ceil(h / factor), math.ceil(w / factor)
    rows = np.clip((np.arange(nh) + 0.5) * factor - 0.5, 0, h - 1)
    cols = np.clip((np.arange(nw) + 0.5) * factor - 0.5, 0, w - 1)
    r0 = np.floor(rows).astype(np.intp)
    c0 = np.floor(cols).astype(np.intp)
    fr, fc = rows - r0, cols - c0
    r1, c1 = np.minimum(r0 + 1, h - 1), np.minimum(c0 + 1, w - 1)
    tmp = img[r0] * (1.0 - fr)[:, None] + img[r1] * fr[:, None]
    return tmp[:, c0] * (1.0 - fc) + tmp[:, c1] * fc


def build_pyramid(img, num_levels, factor=2.0):
    """Gaussian pyramid ordered fine to coarse.

    Each coarser level is the previous one blurred with std ``0.5*factor``
    and subsampled; the coarsest level must stay at least 8x8.
    """
    img = as_image(img)
    if num_levels < 1:
        raise LevelCountError(f"num_levels must be >= 1, got {num_levels}")
    if not factor > 1:
        raise ParameterError(f"pyramid factor must exceed 1, got {factor}")
    h, w = img.shape
    for _ in range(num_levels - 1):
        h, w = math.ceil(h / factor), math.ceil(w / factor)
    if h < 8 or w < 8:
        raise LevelCountError(
            f"{img.shape[1]}x{img.shape[0]} image too small for {num_levels} levels "
            f"at factor {factor} (coarsest would be {w}x{h}, need >= 8x8)")
    levels = [img]
    for _ in range(num_levels - 1):
        blurred = gaussian_window_filter(levels[-1], 0.5 * factor)
        levels.append(_downsample(blurred, factor))
    return Pyramid(levels, float(factor))


def _axis_weights(n_src, n_dst):
    # align_corners=False: dst pixel centres map back onto the source grid
    pos = (np.arange(n_dst) + 0.5) * (n_src / n_dst) - 0.5
    pos = np.clip(pos, 0.0, n_src - 1)
    i0 = np.floor(pos).astype(np.intp)
    i1 = np.minimum(i0 + 1, n_src - 1)
    return i0, i1, pos - i0


def bilinear_upsample(img, target_w, target_h):
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape
    if target_w < w or target_h < h:
        raise DimensionError(f"cannot upsample {w}x{h} to smaller {target_w}x{target_h}")
    r0, r1, fr = _axis_weights(h, target_h)
    c0, c1, fc = _axis_weights(w, target_w)
    rows = img[r0] * (1.0 - fr)[:, None] + img[r1] * fr[:, None]
    return rows[:, c0] * (1.0 - fc) + rows[:, c1] * fc


def vignetting_compensate(left, right, lpf_std=32.0):
    """Match the left view's low-frequency gain to the right view's."""
    left, right = as_image(left), as_image(right)
    _same_shape(left, right)
    if not lpf_std > 0:
        raise ParameterError(f"lpf_std must be positive, got {lpf_std}")
    lpf_l = gaussian_window_filter(left, lpf_std)
    lpf_r = gaussian_window_filter(right, lpf_std)
    return left * (lpf_r / np.maximum(lpf_l, VIGNETTING_FLOOR))


def bilateral_filter(img, spatial_std, range_std, guide=None):
    """Brute-force (joint) bilateral filter over a ``ceil(3*spatial_std)`` window."""
    if not spatial_std > 0 or not range_std > 0:
        raise ParameterError("bilateral stds must be positive")
    img = np.asarray(img, dtype=np.float64)
    guide = img if guide is None else np.asarray(guide, dtype=np.float64)
    _same_shape(img, guide)
    r = int(math.ceil(3.0 * spatial_std))
    h, w = img.shape
    pad_i = np.pad(img, r, mode="edge")
    pad_g = np.pad(guide, r, mode="edge")
    num = np.zeros_like(img)
    den = np.zeros_like(img)
    inv_s = 0.5 / spatial_std ** 2
    inv_r = 0.5 / range_std ** 2
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            ws = math.exp(-(dy * dy + dx * dx) * inv_s)
            gq = pad_g[r + dy:r + dy + h, r + dx:r + dx + w]
            wgt = ws * np.exp(-((gq - guide) ** 2) * inv_r)
            num += wgt * pad_i[r + dy:r + dy + h, r + dx:r + dx + w]
            den += wgt
    return num / den


def subtraction_bilateral(img, spatial_std=3.0, range_std=20.0):
    """High-pass residual ``img - bilateral(img)``."""
    img = as_image(img)
    out = img - bilateral_filter(img, spatial_std, range_std)
    # the filter reproduces constants only up to rounding
    if np.ptp(img) == 0:
        out[:] = 0.0
    return out
