"""Integer-disparity matching costs and per-pixel minima."""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError
from .image import gaussian_window_filter

METRICS = ("SAD", "SSD", "NCC")
NCC_VAR_FLOOR = 1e-12


@dataclass
class CostVolume:
    """Costs indexed ``[plane, row, col]``; plane ``i`` holds disparity ``d_min + i``."""

    costs: np.ndarray
    d_min: int
    d_max: int

    @property
    def num_disparities(self):
        return self.d_max - self.d_min + 1

    @property
    def shape(self):
        return self.costs.shape[1:]

    @property
    def disparities(self):
        return np.arange(self.d_min, self.d_max + 1)

    def curve(self, row, col):
        return self.costs[:, row, col]


def shift_columns(img, d):
    """Sample ``img`` at column ``x - d`` with edge replication."""
    w = img.shape[1]
    idx = np.clip(np.arange(w) - d, 0, w - 1)
    return img[:, idx]


def compute_cost(left, right, metric="SAD", window_std=8.0, d_min=-2, d_max=2):
    """Gaussian-windowed matching cost for every integer disparity in range.

    The right view is sampled at ``x - d``, so a scene point at column ``x``
    in the left image sits at ``x - d`` in the right image.
    """
    left = np.asarray(left, dtype=np.float64)
    right = np.asarray(right, dtype=np.float64)
    if left.shape != right.shape:
        raise DimensionError(f"pair shape mismatch: {left.shape} vs {right.shape}")
    d_min, d_max = int(d_min), int(d_max)
    if d_max < d_min:
        raise ParameterError(f"empty disparity range [{d_min}, {d_max}]")
    if d_max - d_min + 1 < 3:
        raise ParameterError(f"need at least 3 disparities, got [{d_min}, {d_max}]")
    metric = metric.upper()
    if metric not in METRICS:
        raise ParameterError(f"unknown metric {metric!r}; expected one of {METRICS}")

    planes = np.empty((d_max - d_min + 1,) + left.shape)
    if metric == "NCC":
        mu_l = gaussian_window_filter(left, window_std)
        var_l = gaussian_window_filter(left * left, window_std) - mu_l ** 2
    for i, d in enumerate(range(d_min, d_max + 1)):
        rs = shift_columns(right, d)
        if metric == "SAD":
            planes[i] = gaussian_window_filter(np.abs(left - rs), window_std)
        elif metric == "SSD":
            planes[i] = gaussian_window_filter((left - rs) ** 2, window_std)
        else:
            mu_r = gaussian_window_filter(rs, window_std)
            var_r = gaussian_window_filter(rs * rs, window_std) - mu_r ** 2
            cov = gaussian_window_filter(left * rs, window_std) - mu_l * mu_r
            denom = var_l * var_r
            ok = (var_l > NCC_VAR_FLOOR) & (var_r > NCC_VAR_FLOOR)
            ncc = np.zeros_like(cov)
            ncc[ok] = cov[ok] / np.sqrt(denom[ok])
            planes[i] = np.clip(1.0 - ncc, 0.0, 2.0)
    # rounding in the box sums can dip a hair below zero
    np.maximum(planes, 0.0, out=planes)
    return CostVolume(planes, d_min, d_max)


@dataclass
class MinimaList:
    """Up to ``k`` minima per pixel, ascending by cost.

    ``disparity`` and ``cost`` have shape ``(k, H, W)``; entries at index
    ``>= count`` are padding (disparity ``d_min - 1``, cost ``inf``).
    """

    disparity: np.ndarray
    cost: np.ndarray
    count: np.ndarray

    def at(self, row, col):
        n = int(self.count[row, col])
        return [(int(self.disparity[j, row, col]), float(self.cost[j, row, col]))
                for j in range(n)]


def find_minima(cv, k=2):
    """Global minimum followed by the next ``k-1`` strict local minima.

    Ties in cost go to the lower disparity.
    """
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    c = cv.costs
    n = c.shape[0]
    best = np.argmin(c, axis=0)
    local = np.zeros(c.shape, dtype=bool)
    if n >= 3:
        local[1:-1] = (c[1:-1] < c[:-2]) & (c[1:-1] < c[2:])
    np.put_along_axis(local, best[None], False, axis=0)

    k_out = min(k, n)
    disp = np.full((k,) + c.shape[1:], cv.d_min - 1, dtype=np.int64)
    cost = np.full((k,) + c.shape[1:], np.inf)
    disp[0] = best + cv.d_min
    cost[0] = np.take_along_axis(c, best[None], axis=0)[0]
    count = np.ones(c.shape[1:], dtype=np.int64)
    if k_out > 1:
        masked = np.where(local, c, np.inf)
        order = np.argsort(masked, axis=0, kind="stable")[:k_out - 1]
        vals = np.take_along_axis(masked, order, axis=0)
        present = np.isfinite(vals)
        disp[1:k_out] = np.where(present, order + cv.d_min, cv.d_min - 1)
        cost[1:k_out] = vals
        count += present.sum(axis=0)
    return MinimaList(disp, cost, count)
