"""Reference semi-global matching with parabola sub-pixel refinement."""

from dataclasses import dataclass

import numba
import numpy as np

from .aggregation import path_directions
from .cost import CostVolume
from .errors import DimensionError, ParameterError
from .refinement import DisparityMap


@dataclass
class SgmParams:
    p1_small: float = 0.5
    p2_large: float = 4.0
    num_paths: int = 8
    sigma: float = 3.0

    def __post_init__(self):
        if not 0 <= self.p1_small <= self.p2_large:
            raise ParameterError(
                f"need 0 <= p1 <= p2, got p1={self.p1_small}, p2={self.p2_large}")


@numba.njit(cache=True)
def _sgm_scan(cost, guide, dy, dx, p1, p2, sigma, out):
    n, h, w = cost.shape
    L = np.empty((h, w, n))
    y0, y1, ys = (0, h, 1) if dy >= 0 else (h - 1, -1, -1)
    x0, x1, xs = (0, w, 1) if dx >= 0 else (w - 1, -1, -1)
    for y in range(y0, y1, ys):
        py = y - dy
        for x in range(x0, x1, xs):
            px = x - dx
            if py < 0 or py >= h or px < 0 or px >= w:
                for d in range(n):
                    L[y, x, d] = cost[d, y, x]
                    out[d, y, x] += L[y, x, d]
                continue
            prev_min = L[py, px, 0]
            for d in range(1, n):
                if L[py, px, d] < prev_min:
                    prev_min = L[py, px, d]
            grad = abs(guide[y, x] - guide[py, px])
            p2_eff = p2
            if grad > sigma:
                p2_eff = max(p1, p2 * sigma / grad)
            jump = prev_min + p2_eff
            for d in range(n):
                best = L[py, px, d]
                if d > 0 and L[py, px, d - 1] + p1 < best:
                    best = L[py, px, d - 1] + p1
                if d < n - 1 and L[py, px, d + 1] + p1 < best:
                    best = L[py, px, d + 1] + p1
                if jump < best:
                    best = jump
                L[y, x, d] = cost[d, y, x] + best - prev_min
                out[d, y, x] += L[y, x, d]


def sgm_aggregate(cv, params, guide):
    """Sum of the classic SGM path costs over ``params.num_paths`` directions.

    ``P2`` is divided by ``|dI| / sigma`` (never below ``P1``) where the
    guide gradient exceeds ``sigma``.
    """
    if cv.num_disparities < 3:
        raise ParameterError("SGM needs at least 3 disparity planes")
    guide = np.ascontiguousarray(guide, dtype=np.float64)
    if guide.shape != cv.shape:
        raise DimensionError(f"guide {guide.shape} does not match cost volume {cv.shape}")
    cost = np.ascontiguousarray(cv.costs, dtype=np.float64)
    out = np.zeros_like(cost)
    for dy, dx in path_directions(params.num_paths):
        _sgm_scan(cost, guide, dy, dx, float(params.p1_small), float(params.p2_large),
                  float(params.sigma), out)
    return CostVolume(out, cv.d_min, cv.d_max)


def wta_subpixel(cv):
    """Winner-take-all plus parabola vertex; boundary argmins stay integer."""
    c = cv.costs
    n = c.shape[0]
    k = np.argmin(c, axis=0)
    disp = (k + cv.d_min).astype(np.float64)
    inner = (k > 0) & (k < n - 1)
    kk = np.clip(k, 1, n - 2)
    c_m = np.take_along_axis(c, (kk - 1)[None], 0)[0]
    c_0 = np.take_along_axis(c, kk[None], 0)[0]
    c_p = np.take_along_axis(c, (kk + 1)[None], 0)[0]
    den = 2.0 * (c_m + c_p - 2.0 * c_0)
    with np.errstate(divide="ignore", invalid="ignore"):
        off = np.where(inner & (den > 0), (c_m - c_p) / den, 0.0)
    return DisparityMap.from_values(disp + off)
