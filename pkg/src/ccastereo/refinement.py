"""Disparity post-processing: L-R check, speckles, hole filling, smoothing."""

from dataclasses import dataclass
import math

import numpy as np
from scipy import ndimage

from .errors import DimensionError, ParameterError


@dataclass
class DisparityMap:
    values: np.ndarray
    valid: np.ndarray
    confidence: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.valid = np.asarray(self.valid, dtype=bool)
        self.confidence = np.where(self.valid, np.asarray(self.confidence, dtype=np.float64), 0.0)
        if not (self.values.shape == self.valid.shape == self.confidence.shape):
            raise DimensionError("values, valid and confidence must share a shape")

    @classmethod
    def from_values(cls, values, valid=None):
        values = np.asarray(values, dtype=np.float64)
        if valid is None:
            valid = np.isfinite(values)
        valid = np.asarray(valid, dtype=bool) & np.isfinite(values)
        return cls(values, valid, valid.astype(np.float64))

    @property
    def shape(self):
        return self.values.shape

    def with_valid(self, valid):
        return DisparityMap(self.values.copy(), valid, valid.astype(np.float64))

    def masked(self):
        """Values with invalid pixels set to NaN (the on-disk form)."""
        return np.where(self.valid, self.values, np.nan)


def _same(a, b):
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")


def lr_consistency(disp_l, disp_r, tol=1.0):
    """Invalidate left pixels whose match in the right view disagrees.

    A left pixel at column ``x`` with disparity ``d`` matches column
    ``x - round(d)`` on the right; a consistent right map holds ``-d`` there.
    """
    _same(disp_l.values, disp_r.values)
    h, w = disp_l.shape
    cols = np.arange(w)[None, :] - np.rint(np.nan_to_num(disp_l.values)).astype(np.int64)
    inside = (cols >= 0) & (cols < w)
    rows = np.broadcast_to(np.arange(h)[:, None], (h, w))
    cc = np.clip(cols, 0, w - 1)
    dr = disp_r.values[rows, cc]
    ok = (inside & disp_l.valid & disp_r.valid[rows, cc]
          & (np.abs(disp_l.values + dr) <= tol))
    return disp_l.with_valid(ok)


def speckle_filter(disp, max_region=100, disp_tol=1.0):
    """Invalidate 4-connected regions smaller than ``max_region`` pixels.

    Neighbours join a region when both are valid and their disparities
    differ by at most ``disp_tol``.
    """
    if max_region < 1:
        raise ParameterError(f"max_region must be >= 1, got {max_region}")
    labels = _label_regions(disp.values, disp.valid, disp_tol)
    sizes = np.bincount(labels.ravel())
    small = sizes < max_region
    small[0] = False
    return disp.with_valid(disp.valid & ~small[labels])


def _label_regions(values, valid, tol):
    """Component labels under the disparity-similarity predicate; 0 marks invalid."""
    h, w = values.shape
    idx = np.arange(h * w).reshape(h, w)
    right = valid[:, :-1] & valid[:, 1:] & (np.abs(values[:, :-1] - values[:, 1:]) <= tol)
    down = valid[:-1, :] & valid[1:, :] & (np.abs(values[:-1, :] - values[1:, :]) <= tol)
    pairs = np.concatenate([
        np.stack([idx[:, :-1][right], idx[:, 1:][right]], axis=1),
        np.stack([idx[:-1, :][down], idx[1:, :][down]], axis=1),
    ])
    if len(pairs):
        from scipy.sparse import coo_matrix
        from scipy.sparse.csgraph import connected_components

        g = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(h * w, h * w))
        _, comp = connected_components(g, directed=False)
    else:
        comp = np.arange(h * w)
    labels = np.zeros(h * w, dtype=np.int64)
    flat_valid = valid.ravel()
    _, dense = np.unique(comp[flat_valid], return_inverse=True)
    labels[flat_valid] = dense + 1
    return labels.reshape(h, w)


def median_fill(disp, window=2, max_passes=1):
    """Fill invalid pixels with the median of valid values in a square window.

    ``window`` is the half-size.  Each pass only reads pixels that were valid
    before it started; ``max_passes=None`` repeats until nothing changes.
    """
    if window < 1:
        raise ParameterError(f"window must be >= 1, got {window}")
    values = disp.values.copy()
    valid = disp.valid.copy()
    size = 2 * window + 1
    passes = 0
    while (max_passes is None or passes < max_passes) and not valid.all():
        passes += 1
        nan_map = np.where(valid, values, np.nan)
        padded = np.pad(nan_map, window, mode="constant", constant_values=np.nan)
        holes = np.argwhere(~valid)
        filled = False
        for y, x in holes:
            patch = padded[y:y + size, x:x + size]
            good = patch[np.isfinite(patch)]
            if good.size:
                values[y, x] = np.median(good)
                valid[y, x] = True
                filled = True
        if not filled:
            break
    conf = np.where(disp.valid, disp.confidence, valid.astype(np.float64))
    return DisparityMap(values, valid, conf)


def _pass_count(lam):
    return max(1, int(round(math.log2(1.0 + lam))))


def edge_aware_smooth(disp, guide, sigma_luma=4.0, sigma_xy=32.0, lam=512.0, max_taps=25):
    """Iterated confidence-weighted joint bilateral filter.

    ``out(p) = sum_q k(p,q) c(q) d(q) / sum_q k(p,q) c(q)`` with a spatial
    Gaussian (``sigma_xy``) times a range Gaussian on the guide
    (``sigma_luma``), run ``round(log2(1 + lam))`` times.  For wide kernels
    the window is sampled on a regular lattice of at most ``max_taps`` taps
    per axis.  Pixels with no confident neighbour pass through.
    """
    guide = np.asarray(guide, dtype=np.float64)
    _same(disp.values, guide)
    if not sigma_luma > 0 or not sigma_xy > 0:
        raise ParameterError("smoothing stds must be positive")
    r = int(math.ceil(3.0 * sigma_xy))
    stride = max(1, int(math.ceil((2 * r + 1) / max_taps)))
    offs = np.arange(-(r // stride) * stride, r + 1, stride)
    h, w = guide.shape
    pad_g = np.pad(guide, r, mode="edge")
    conf = np.where(disp.valid, disp.confidence, 0.0)
    vals = np.where(disp.valid, disp.values, 0.0)
    inv_s = 0.5 / sigma_xy ** 2
    inv_r = 0.5 / sigma_luma ** 2
    range_w = {}
    for dy in offs:
        for dx in offs:
            gq = pad_g[r + dy:r + dy + h, r + dx:r + dx + w]
            range_w[dy, dx] = math.exp(-(dy * dy + dx * dx) * inv_s) * np.exp(-((gq - guide) ** 2) * inv_r)
    out = vals.copy()
    reached = np.zeros(disp.shape, dtype=bool)
    for _ in range(_pass_count(lam)):
        pad_v = np.pad(out * conf, r, mode="edge")
        pad_c = np.pad(conf, r, mode="edge")
        num = np.zeros_like(out)
        den = np.zeros_like(out)
        for (dy, dx), k in range_w.items():
            num += k * pad_v[r + dy:r + dy + h, r + dx:r + dx + w]
            den += k * pad_c[r + dy:r + dy + h, r + dx:r + dx + w]
        has = den > 1e-300
        reached |= has
        out = np.where(has, num / np.where(has, den, 1.0), out)
    valid = disp.valid | reached
    out = np.where(reached, out, disp.values)
    return DisparityMap(out, valid, valid.astype(np.float64))


def _box(img, radius):
    return ndimage.uniform_filter(img, size=2 * radius + 1, mode="nearest")


def guided_smooth(disp, guide, radius=37, eps=0.2):
    """Box-window guided filter of the disparity map (invalid pixels median-filled first)."""
    guide = np.asarray(guide, dtype=np.float64)
    _same(disp.values, guide)
    src = disp
    if not disp.valid.all():
        src = median_fill(disp, window=2, max_passes=None)
    p = np.where(src.valid, src.values, 0.0)
    g = guide
    mean_g = _box(g, radius)
    mean_p = _box(p, radius)
    cov = _box(g * p, radius) - mean_g * mean_p
    var = _box(g * g, radius) - mean_g ** 2
    a = cov / (var + eps)
    b = mean_p - a * mean_g
    out = _box(a, radius) * g + _box(b, radius)
    return DisparityMap(out, src.valid, src.valid.astype(np.float64))
