"""Synthetic stereo / dual-pixel pairs with known sub-pixel disparity."""

import numpy as np
from scipy import ndimage

from .errors import ParameterError
from .image import gaussian_window_filter


def shift_image(img, shift):
    """Bilinear resample so that ``out[y, x] = img[y, x + shift[y, x]]``.

    With the matching convention of :func:`ccastereo.cost.compute_cost` the
    pair ``(img, out)`` then has disparity ``shift``.
    """
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape
    shift = np.broadcast_to(np.asarray(shift, dtype=np.float64), (h, w))
    rows, cols = np.mgrid[0:h, 0:w].astype(np.float64)
    return ndimage.map_coordinates(img, [rows, cols + shift], order=1, mode="nearest")


def noise_texture(width, height, rng, smooth=1.0):
    """Smoothed uniform noise normalized to [0, 1]."""
    tex = rng.random((height, width))
    if smooth > 0:
        tex = gaussian_window_filter(tex, smooth)
    lo, hi = tex.min(), tex.max()
    return (tex - lo) / (hi - lo) if hi > lo else tex


def pink_texture(width, height, rng, exponent=1.0):
    """Noise with a ``1/f**exponent`` amplitude spectrum, normalized to [0, 1].

    Natural images keep contrast across scales roughly like ``exponent=1``.
    """
    fy = np.fft.fftfreq(height)[:, None]
    fx = np.fft.rfftfreq(width)[None, :]
    f = np.hypot(fy, fx)
    f[0, 0] = 1.0
    spectrum = (rng.standard_normal(f.shape) + 1j * rng.standard_normal(f.shape)) / f ** exponent
    spectrum[0, 0] = 0.0
    tex = np.fft.irfft2(spectrum, s=(height, width))
    lo, hi = tex.min(), tex.max()
    return (tex - lo) / (hi - lo) if hi > lo else tex


def variable_blur(img, std_field, step=0.25):
    """Per-pixel Gaussian blur, linearly blending a stack of fixed-std blurs."""
    img = np.asarray(img, dtype=np.float64)
    std_field = np.broadcast_to(np.asarray(std_field, dtype=np.float64), img.shape)
    if np.any(std_field < 0):
        raise ParameterError("blur std must be non-negative")
    top = float(std_field.max())
    if top == 0:
        return img.copy()
    levels = np.arange(0.0, top + step, step)
    stack = np.stack([img if s == 0 else gaussian_window_filter(img, s) for s in levels])
    pos = std_field / step
    i0 = np.clip(np.floor(pos).astype(np.intp), 0, len(levels) - 1)
    i1 = np.minimum(i0 + 1, len(levels) - 1)
    f = pos - i0
    lo = np.take_along_axis(stack, i0[None], 0)[0]
    hi = np.take_along_axis(stack, i1[None], 0)[0]
    return lo * (1 - f) + hi * f


def generate_synthetic_pair(width, height, shift=0.0, blur=None, seed=0,
                            d_range=None, smooth=1.0, noise=0.0, texture="noise"):
    """Return ``(left, right, gt)``.

    ``shift`` is a constant or an ``(height, width)`` disparity field, and
    ``gt`` equals it.  ``blur`` (scalar or field of Gaussian stds) defocuses
    the right view only, so the two views see different PSFs.  ``texture``
    is ``"noise"`` (smoothed white noise, see ``smooth``) or ``"pink"``
    (1/f spectrum).  ``noise`` adds independent Gaussian sensor noise of
    that std to each view.  ``d_range`` bounds the allowed shift magnitudes.
    """
    gt = np.broadcast_to(np.asarray(shift, dtype=np.float64), (height, width)).copy()
    if d_range is not None:
        lo, hi = d_range
        if gt.min() < lo or gt.max() > hi:
            raise ParameterError(
                f"shift [{gt.min():.3g}, {gt.max():.3g}] outside range [{lo}, {hi}]")
    rng = np.random.default_rng(seed)
    if texture == "pink":
        left = pink_texture(width, height, rng)
    elif texture == "noise":
        left = noise_texture(width, height, rng, smooth)
    else:
        raise ParameterError(f"unknown texture {texture!r}")
    right = shift_image(left, gt)
    if blur is not None:
        right = variable_blur(right, blur)
    if noise > 0:
        left = left + rng.normal(0.0, noise, left.shape)
        right = right + rng.normal(0.0, noise, right.shape)
    return left, right, gt


def ramp_field(width, height, lo, hi):
    """Disparity growing linearly from ``lo`` (left edge) to ``hi`` (right edge)."""
    return np.broadcast_to(np.linspace(lo, hi, width), (height, width)).copy()


def smooth_random_field(width, height, rng, lo, hi, smooth=None):
    """Low-frequency random disparity field spanning ``[lo, hi]``."""
    smooth = smooth or max(width, height) / 8.0
    f = gaussian_window_filter(rng.standard_normal((height, width)), smooth)
    f = (f - f.min()) / max(f.max() - f.min(), 1e-12)
    return lo + (hi - lo) * f


def layered_field(width, height, rng, values, num_rects=4):
    """Piecewise-constant field: a background plus random axis-aligned slabs."""
    field = np.full((height, width), float(values[0]))
    for v in values[1:num_rects + 1]:
        h0 = rng.integers(0, height // 2)
        w0 = rng.integers(0, width // 2)
        hh = rng.integers(height // 6, height // 2)
        ww = rng.integers(width // 6, width // 2)
        field[h0:h0 + hh, w0:w0 + ww] = v
    return field


def dp_suite(count=20, width=256, height=256, seed=0, d_lo=-3.0, d_hi=3.0,
             blur_base=0.5, blur_gain=0.5, noise=0.02):
    """Dual-pixel-like pairs: smooth varying disparity, defocus growing with ``|d|``.

    Blur hits the right view only (mismatched PSFs) and both views get
    Gaussian sensor noise.

    Yields ``(left, right, gt)`` triples, deterministic per ``seed``.
    """
    rng = np.random.default_rng(seed)
    for _ in range(count):
        gt = smooth_random_field(width, height, rng, d_lo, d_hi)
        blur = blur_base + blur_gain * np.abs(gt)
        yield generate_synthetic_pair(width, height, gt, blur, int(rng.integers(2 ** 31)),
                                      noise=noise)


def stereo_suite(count=20, width=256, height=256, seed=0, d_lo=1.0, d_hi=14.0, noise=0.01):
    """Stereo-like pairs: slanted background plus fronto-parallel slabs.

    Disparities mix integer and fractional parts; no blur.
    """
    rng = np.random.default_rng(seed)
    for _ in range(count):
        lo, hi = np.sort(rng.uniform(d_lo, d_hi, 2))
        gt = ramp_field(width, height, lo, hi)
        slabs = layered_field(width, height, rng, [0.0] + list(rng.uniform(d_lo, d_hi, 3)), 3)
        gt = np.where(slabs != 0.0, slabs, gt)
        yield generate_synthetic_pair(width, height, gt, None, int(rng.integers(2 ** 31)),
                                      noise=noise)
