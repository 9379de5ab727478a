"""Semi-global propagation of parabola coefficients along straight paths.

Along a path every pixel ``p`` turns its local cost ``alpha*d**2 + beta*d``
into ``A*d**2 + B*d`` by adding the quadratic pull
``P_adapt * (d - m_prev)**2`` towards the previous minimizer, with

    P_adapt = P * A_prev * exp(-(I_p - I_prev)**2 / sigma**2)
    A = alpha + P_adapt
    B = beta + P_adapt * B_prev / A_prev

Only two scalars travel per pixel, so a path costs O(WH) whatever the
disparity range.
"""

from dataclasses import dataclass
from typing import Optional

import numba
import numpy as np

from .errors import DimensionError, InvariantViolation, ParameterError
from .parabola import DEFAULT_EPS, ParabolaMap, reduce_confidence_large  # noqa: F401

# Keeps A finite along very long edge-free runs where P*e > 1 grows it
# geometrically; at this size the local term is already irrelevant.
PENALTY_CAP = 1e150

DIRECTIONS_8 = ((0, 1), (0, -1), (1, 0), (-1, 0), (1, 1), (-1, -1), (1, -1), (-1, 1))


def path_directions(num_paths):
    """``(dy, dx)`` steps for 2, 4 or 8 paths (axis-aligned first)."""
    if num_paths not in (2, 4, 8):
        raise ParameterError(f"num_paths must be 2, 4 or 8, got {num_paths}")
    return DIRECTIONS_8[:num_paths]


@dataclass
class PenaltyParams:
    P: float = 3.2
    sigma: float = 3.25
    P1: Optional[float] = None
    P2: float = 0.05
    t_prop: float = 1000.0
    t_edge: float = 0.5
    t_d: float = 0.1

    def __post_init__(self):
        if self.P1 is None:
            self.P1 = self.P
        if not self.P >= 0:
            raise ParameterError(f"P must be non-negative, got {self.P}")
        if not self.sigma > 0:
            raise ParameterError(f"sigma must be positive, got {self.sigma}")
        if self.P1 > 0 and not 0 < self.P2 < self.P1:
            raise ParameterError(f"need 0 < P2 < P1, got P1={self.P1}, P2={self.P2}")


@dataclass
class AggregationState:
    sum_a: np.ndarray
    sum_b: np.ndarray
    sum_g: Optional[np.ndarray] = None
    num_paths: int = 0

    @property
    def shape(self):
        return self.sum_a.shape


def adaptive_penalty(P, a_prev, i_p, i_prev, sigma):
    return P * a_prev * np.exp(-((i_p - i_prev) ** 2) / sigma ** 2)


def step(alpha, beta, a_prev, b_prev, p_adapt):
    """One propagation step; returns the aggregated ``(A, B)``."""
    return alpha + p_adapt, beta + p_adapt * (b_prev / a_prev)


def edge_strength(i_p, i_prev, sigma):
    """``1 - exp(-dI**2/sigma**2)``: 0 on flat ground, towards 1 across edges."""
    return 1.0 - np.exp(-((i_p - i_prev) ** 2) / sigma ** 2)


def step_large_disparity(alpha, beta, a_prev, b_prev, d, m_prev, i_p, i_prev,
                         params, iteration):
    """Two-regime step used for wide-baseline stereo.

    First iteration: smooth normally when ``|d - m_prev| < 2``; otherwise
    copy the predecessor if it is ``t_prop`` times more confident and no
    edge separates the pixels, else keep the local parabola.  Later
    iterations always smooth, with ``P1`` for small jumps and the weaker
    ``P2`` for large ones.
    """
    e = np.exp(-((i_p - i_prev) ** 2) / params.sigma ** 2)
    small = abs(d - m_prev) < 2
    if iteration <= 1:
        if small:
            return step(alpha, beta, a_prev, b_prev, params.P1 * e * a_prev)
        if a_prev / alpha > params.t_prop and (1.0 - e) < params.t_edge:
            return a_prev, b_prev
        return alpha, beta
    pen = (params.P1 if small else params.P2) * e * a_prev
    return step(alpha, beta, a_prev, b_prev, pen)


@numba.njit(cache=True)
def _scan(alpha, beta, guide, dy, dx, P, inv_s2, sum_a, sum_b, keep_gamma, gamma, sum_g):
    h, w = alpha.shape
    A = np.empty((h, w))
    B = np.empty((h, w))
    G = np.empty((h, w))
    y0, y1, ys = (0, h, 1) if dy >= 0 else (h - 1, -1, -1)
    x0, x1, xs = (0, w, 1) if dx >= 0 else (w - 1, -1, -1)
    for y in range(y0, y1, ys):
        py = y - dy
        for x in range(x0, x1, xs):
            px = x - dx
            if py < 0 or py >= h or px < 0 or px >= w:
                A[y, x] = alpha[y, x]
                B[y, x] = beta[y, x]
                if keep_gamma:
                    G[y, x] = gamma[y, x]
            else:
                a_prev = A[py, px]
                di = guide[y, x] - guide[py, px]
                pen = P * a_prev * np.exp(-di * di * inv_s2)
                if pen > PENALTY_CAP:
                    pen = PENALTY_CAP
                ratio = B[py, px] / a_prev
                A[y, x] = alpha[y, x] + pen
                B[y, x] = beta[y, x] + pen * ratio
                if keep_gamma:
                    G[y, x] = gamma[y, x] + pen * (0.5 * ratio) ** 2
            sum_a[y, x] += A[y, x]
            sum_b[y, x] += B[y, x]
            if keep_gamma:
                sum_g[y, x] += G[y, x]


@numba.njit(cache=True)
def _scan_large(alpha, beta, d_case, guide, dy, dx, P1, P2, inv_s2, t_prop, t_edge,
                first_iteration, sum_a, sum_b):
    h, w = alpha.shape
    A = np.empty((h, w))
    B = np.empty((h, w))
    y0, y1, ys = (0, h, 1) if dy >= 0 else (h - 1, -1, -1)
    x0, x1, xs = (0, w, 1) if dx >= 0 else (w - 1, -1, -1)
    for y in range(y0, y1, ys):
        py = y - dy
        for x in range(x0, x1, xs):
            px = x - dx
            a = alpha[y, x]
            b = beta[y, x]
            if py < 0 or py >= h or px < 0 or px >= w:
                A[y, x] = a
                B[y, x] = b
            else:
                a_prev = A[py, px]
                b_prev = B[py, px]
                m_prev = -b_prev / (2.0 * a_prev)
                di = guide[y, x] - guide[py, px]
                e = np.exp(-di * di * inv_s2)
                small = abs(d_case[y, x] - m_prev) < 2.0
                if first_iteration and not small:
                    if a_prev / a > t_prop and (1.0 - e) < t_edge:
                        A[y, x] = a_prev
                        B[y, x] = b_prev
                    else:
                        A[y, x] = a
                        B[y, x] = b
                else:
                    pen = (P1 if small else P2) * e * a_prev
                    if pen > PENALTY_CAP:
                        pen = PENALTY_CAP
                    A[y, x] = a + pen
                    B[y, x] = b + pen * (b_prev / a_prev)
            sum_a[y, x] += A[y, x]
            sum_b[y, x] += B[y, x]


def _check(parabolas, guide):
    guide = np.ascontiguousarray(guide, dtype=np.float64)
    if guide.shape != parabolas.alpha.shape:
        raise DimensionError(
            f"guide {guide.shape} does not match parabolas {parabolas.alpha.shape}")
    return guide


def _directions(num_paths, directions):
    return tuple(directions) if directions is not None else path_directions(num_paths)


def aggregate(parabolas, guide, params, num_paths=8, directions=None, keep_gamma=False):
    """Sum the per-path aggregated coefficients over all directions.

    With ``keep_gamma`` the constant term is propagated too (debug only;
    it never affects the minimizer).
    """
    guide = _check(parabolas, guide)
    dirs = _directions(num_paths, directions)
    alpha = np.ascontiguousarray(parabolas.alpha, dtype=np.float64)
    beta = np.ascontiguousarray(parabolas.beta, dtype=np.float64)
    sum_a = np.zeros_like(alpha)
    sum_b = np.zeros_like(alpha)
    use_g = keep_gamma and parabolas.gamma is not None
    gamma = (np.ascontiguousarray(parabolas.gamma, dtype=np.float64)
             if use_g else np.zeros((1, 1)))
    sum_g = np.zeros_like(alpha) if use_g else np.zeros((1, 1))
    inv_s2 = 1.0 / params.sigma ** 2
    for dy, dx in dirs:
        _scan(alpha, beta, guide, dy, dx, float(params.P), inv_s2, sum_a, sum_b,
              use_g, gamma, sum_g)
    return AggregationState(sum_a, sum_b, sum_g if use_g else None, len(dirs))


def aggregate_large(parabolas, guide, d_case, params, iteration=1, num_paths=8,
                    directions=None):
    """:func:`aggregate` using the two-regime large-disparity step."""
    guide = _check(parabolas, guide)
    dirs = _directions(num_paths, directions)
    alpha = np.ascontiguousarray(parabolas.alpha, dtype=np.float64)
    beta = np.ascontiguousarray(parabolas.beta, dtype=np.float64)
    d_case = np.ascontiguousarray(d_case, dtype=np.float64)
    sum_a = np.zeros_like(alpha)
    sum_b = np.zeros_like(alpha)
    inv_s2 = 1.0 / params.sigma ** 2
    for dy, dx in dirs:
        _scan_large(alpha, beta, d_case, guide, dy, dx, float(params.P1), float(params.P2),
                    inv_s2, float(params.t_prop), float(params.t_edge), iteration <= 1,
                    sum_a, sum_b)
    return AggregationState(sum_a, sum_b, None, len(dirs))


def extract_disparity(state):
    """Closed-form minimizer ``-sum(B) / (2*sum(A))`` as a :class:`DisparityMap`."""
    from .refinement import DisparityMap

    if not np.all(state.sum_a > 0):
        raise InvariantViolation("aggregated curvature must be positive everywhere")
    values = -state.sum_b / (2.0 * state.sum_a)
    if not np.all(np.isfinite(values)):
        raise InvariantViolation("non-finite aggregated disparity")
    return DisparityMap.from_values(values)


def renormalize_iteration(state, alpha1, eps=DEFAULT_EPS):
    """Seed the next iteration with ``N*sumA, N*sumB``, ``N = alpha1 / mean(alpha1)``.

    Pixels whose ``N`` vanishes fall back to the ``(eps, 0)`` sentinel.
    """
    alpha1 = np.asarray(alpha1, dtype=np.float64)
    mean = alpha1.mean()
    if not mean > 0:
        raise ParameterError("mean first-iteration curvature must be positive")
    n = alpha1 / mean
    alpha = n * state.sum_a
    beta = n * state.sum_b
    valid = alpha > 0
    alpha[~valid] = eps
    beta[~valid] = 0.0
    return ParabolaMap(alpha, beta, valid)
