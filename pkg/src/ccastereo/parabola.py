"""Continuous per-pixel costs: parabola fits, confidence and sub-pixel re-centring.

A local fit around the integer argmin ``d0`` is
``C(dd) = a*dd**2 + b*dd + c`` with ``dd = d - d0``; in global form it is
``C(d) = alpha*d**2 + beta*d + gamma`` and its minimizer is
``-beta / (2*alpha)``.  Invalid pixels carry the sentinel ``(eps, 0, 0)``
so that aggregation hands them the disparity of their path predecessors.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .cost import compute_cost, find_minima
from .errors import ParameterError

DEFAULT_EPS = 1e-4
CALIBRATION_SHIFTS = tuple(round(0.1 * i, 1) for i in range(1, 11))


class NoTripletError(ValueError):
    """The argmin sits on the edge of the disparity range."""


@dataclass
class LocalParabola:
    a: float
    b: float
    c: float
    d0: int

    @property
    def offset(self):
        return -self.b / (2.0 * self.a)

    @property
    def minimizer(self):
        return self.d0 + self.offset


@dataclass
class ParabolaMap:
    alpha: np.ndarray
    beta: np.ndarray
    valid: np.ndarray
    gamma: Optional[np.ndarray] = None

    @property
    def shape(self):
        return self.alpha.shape

    def minimizer(self):
        return -self.beta / (2.0 * self.alpha)

    def copy(self):
        return ParabolaMap(self.alpha.copy(), self.beta.copy(), self.valid.copy(),
                           None if self.gamma is None else self.gamma.copy())


def fit_local(c_minus, c_0, c_plus, d0):
    """Fit through the costs at ``d0-1, d0, d0+1``.

    Pass ``None`` for a missing neighbour (argmin on the range boundary);
    that raises :class:`NoTripletError` and the caller invalidates the pixel.
    """
    if c_minus is None or c_plus is None:
        raise NoTripletError(f"no cost triplet around d0={d0}")
    a = (c_plus + c_minus - 2.0 * c_0) / 2.0
    b = (c_plus - c_minus) / 2.0
    return LocalParabola(a, b, c_0, int(d0))


def to_global(p):
    """``(alpha, beta, gamma)`` of the parabola expressed in absolute disparity."""
    alpha = p.a
    beta = p.b - 2.0 * p.a * p.d0
    gamma = p.c + p.a * p.d0 ** 2 - p.b * p.d0
    return alpha, beta, gamma


def recenter(p, delta):
    """Keep the curvature, move the minimizer to ``d0 + delta``."""
    if abs(delta) >= 1:
        raise ParameterError(f"|delta| must be < 1, got {delta}")
    return LocalParabola(p.a, -2.0 * p.a * delta, p.c, p.d0)


def confidence_scale(c_best, c_second=None, d_best=0, d_second=None, t_q=2.2, eps=DEFAULT_EPS):
    """Ambiguity down-weighting from the second cost minimum.

    Uses ``r = c_second / c_best >= 1`` and returns
    ``max(min((r - 1) / (t_q - 1), 1), eps)**2``: a runner-up at least
    ``t_q`` times worse leaves the parabola alone, an equally good one
    shrinks it to ``eps**2``.  Only non-adjacent runners-up count.
    """
    return float(_confidence_from_ratio(
        np.asarray(c_best, dtype=np.float64),
        np.asarray(np.inf if c_second is None else c_second, dtype=np.float64),
        np.asarray(d_second is not None and abs(d_second - d_best) > 1),
        t_q, eps))


def _confidence_from_ratio(c0, c1, applies, t_q, eps):
    if not t_q > 1:
        raise ParameterError(f"ratio threshold must exceed 1, got {t_q}")
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(c1 <= 0, 1.0, c1 / c0)
    ratio = np.where(np.isnan(ratio), 1.0, ratio)
    s = np.maximum(np.minimum((ratio - 1.0) / (t_q - 1.0), 1.0), eps) ** 2
    return np.where(applies & np.isfinite(c1), s, 1.0)


def invalidate(pmap, t_a, eps=DEFAULT_EPS):
    """Replace parabolas flatter than ``t_a`` by the ``(eps, 0, 0)`` sentinel."""
    bad = pmap.alpha < t_a
    out = pmap.copy()
    out.alpha[bad] = eps
    out.beta[bad] = 0.0
    if out.gamma is not None:
        out.gamma[bad] = 0.0
    out.valid &= ~bad
    return out


def histeq_subpixel(c_minus, c_0, c_plus, calibrated_offset=0.0):
    """Histogram-equalized sub-pixel offset from a cost triplet.

    The parabola estimate ``p`` piles up near zero ("pixel locking") when the
    cost rises linearly away from the match, as SAD does.  Its equalizing
    remap ``2p / (1 + 2|p|)`` reduces to
    ``(c_minus - c_plus) / (2 * (max(c_minus, c_plus) - c_0))``,
    which is what is evaluated here.  The calibrated bias is then removed
    and the result clipped to [-0.5, 0.5].  Works elementwise on arrays.
    """
    c_minus = np.asarray(c_minus, dtype=np.float64)
    c_plus = np.asarray(c_plus, dtype=np.float64)
    span = 2.0 * (np.maximum(c_minus, c_plus) - c_0)
    with np.errstate(divide="ignore", invalid="ignore"):
        raw = np.where(span > 0, (c_minus - c_plus) / span, 0.0)
    out = np.clip(raw - calibrated_offset, -0.5, 0.5)
    return float(out) if out.ndim == 0 else out


def parabola_subpixel(c_minus, c_0, c_plus):
    """Vertex offset of the three-point parabola (0 for flat triplets)."""
    c_minus = np.asarray(c_minus, dtype=np.float64)
    c_plus = np.asarray(c_plus, dtype=np.float64)
    den = 2.0 * (c_plus + c_minus - 2.0 * c_0)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(den > 0, (c_minus - c_plus) / den, 0.0)
    out = np.clip(out, -0.5, 0.5)
    return float(out) if out.ndim == 0 else out


@dataclass
class SubpixelEstimator:
    """Which interpolant re-centres the initial parabolas.

    ``kind`` is ``"parabola"`` (no re-centring) or ``"histeq"``.  Other
    estimators plug in by subclassing and overriding :meth:`offset`.
    """

    kind: str = "parabola"
    calibrated_offset: float = 0.0

    def __post_init__(self):
        if self.kind not in ("parabola", "histeq"):
            raise ParameterError(f"unknown sub-pixel estimator {self.kind!r}")
        if not -0.5 < self.calibrated_offset < 0.5:
            raise ParameterError("calibrated_offset must lie in (-0.5, 0.5)")

    @property
    def recenters(self):
        return self.kind != "parabola"

    def offset(self, c_minus, c_0, c_plus):
        if self.kind == "histeq":
            return histeq_subpixel(c_minus, c_0, c_plus, self.calibrated_offset)
        return parabola_subpixel(c_minus, c_0, c_plus)


def calibration_image(rng_seed, width=256, height=64, smooth=1.0):
    from .image import gaussian_window_filter

    rng = np.random.default_rng(rng_seed)
    return gaussian_window_filter(rng.random((height, width)), smooth) * 255.0


def calibrate_histeq_offset(rng_seed=0, estimator=None, metric="SAD", window_std=3.0,
                            width=256, height=64, shifts=CALIBRATION_SHIFTS):
    """Mean signed sub-pixel error of ``estimator`` on shifted random images.

    A random texture is shifted by 0.1 .. 1.0 px with bilinear sampling, the
    integer argmin and its cost triplet are found, and ``estimator(c-, c0, c+)``
    (uncalibrated histogram equalization by default) supplies the fraction.
    Subtracting the returned value from later estimates removes the bias.
    """
    from .synthetic import shift_image

    if estimator is None:
        estimator = histeq_subpixel
    base = calibration_image(rng_seed, width, height)
    margin = int(np.ceil(3 * window_std)) + 3
    errors = []
    for s in shifts:
        right = shift_image(base, s)
        cv = compute_cost(base, right, metric, window_std, -2, 3)
        d_idx = np.argmin(cv.costs, axis=0)
        inner = (d_idx > 0) & (d_idx < cv.num_disparities - 1)
        inner[:, :margin] = False
        inner[:, -margin:] = False
        rows, cols = np.nonzero(inner)
        k = d_idx[rows, cols]
        c_m = cv.costs[k - 1, rows, cols]
        c_0 = cv.costs[k, rows, cols]
        c_p = cv.costs[k + 1, rows, cols]
        est = k + cv.d_min + np.asarray(estimator(c_m, c_0, c_p), dtype=np.float64)
        errors.append(est - s)
    return float(np.mean(np.concatenate(errors)))


@dataclass
class ParabolaField:
    """Everything the aggregation needs from the initial fit of one scale."""

    parabolas: ParabolaMap
    d0: np.ndarray
    minima: object
    local_disparity: np.ndarray = field(default=None)


def fit_parabolas(cv, t_q=2.2, t_a=0.04, eps=DEFAULT_EPS, estimator=None,
                  num_minima=2, large_disparity=False, t_d=0.1, keep_gamma=False):
    """Vectorized initial parabolas for a whole cost volume.

    Order per pixel: triplet fit at the argmin (boundary argmins are
    invalidated), optional re-centring, conversion to global form, the
    ``t_a`` flatness test, then confidence scaling of the survivors.
    """
    costs = cv.costs
    n = costs.shape[0]
    minima = find_minima(cv, num_minima)
    k = minima.disparity[0] - cv.d_min
    interior = (k > 0) & (k < n - 1)
    kk = np.clip(k, 1, n - 2)
    c_m = np.take_along_axis(costs, (kk - 1)[None], 0)[0]
    c_0 = np.take_along_axis(costs, kk[None], 0)[0]
    c_p = np.take_along_axis(costs, (kk + 1)[None], 0)[0]
    a = (c_p + c_m - 2.0 * c_0) / 2.0
    b = (c_p - c_m) / 2.0
    if estimator is not None and estimator.recenters:
        b = -2.0 * a * estimator.offset(c_m, c_0, c_p)
    d0 = minima.disparity[0].astype(np.float64)
    alpha = a.copy()
    beta = b - 2.0 * a * d0
    gamma = c_0 + a * d0 ** 2 - b * d0 if keep_gamma else None

    pmap = ParabolaMap(alpha, beta, interior.copy(), gamma)
    pmap.alpha[~interior] = -np.inf  # forces the sentinel below
    pmap = invalidate(pmap, t_a, eps)

    scale = np.ones_like(alpha)
    for j in range(1, minima.disparity.shape[0]):
        present = j < minima.count
        applies = present & (np.abs(minima.disparity[j] - minima.disparity[0]) > 1)
        scale = np.minimum(scale, _confidence_from_ratio(
            minima.cost[0], np.where(present, minima.cost[j], np.inf), applies, t_q, eps))
    if large_disparity:
        scale = np.minimum(scale, reduce_confidence_large(minima, t_d, eps))
    v = pmap.valid
    pmap.alpha[v] *= scale[v]
    pmap.beta[v] *= scale[v]
    if pmap.gamma is not None:
        pmap.gamma[v] *= scale[v]
    local = np.where(interior, d0 - b / np.where(a != 0, 2.0 * a, np.inf), d0)
    return ParabolaField(pmap, minima.disparity[0].copy(), minima, local)


def reduce_confidence_large(minima, t_d=0.1, eps=DEFAULT_EPS):
    """``eps**2`` where a far (> 2 px) minimum costs within ``t_d`` of the best, else 1.

    Accepts a :class:`MinimaList` or a per-pixel list of ``(disparity, cost)``.
    """
    if isinstance(minima, (list, tuple)):
        if not minima:
            return 1.0
        d0, c0 = minima[0]
        hit = any((c - c0) < t_d and abs(d - d0) > 2 for d, c in minima[1:])
        return eps ** 2 if hit else 1.0
    out = np.ones(minima.count.shape)
    for j in range(1, minima.disparity.shape[0]):
        hit = ((j < minima.count)
               & (minima.cost[j] - minima.cost[0] < t_d)
               & (np.abs(minima.disparity[j] - minima.disparity[0]) > 2))
        out[hit] = eps ** 2
    return out
