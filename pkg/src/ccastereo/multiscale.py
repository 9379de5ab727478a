"""Coarse-to-fine CCA: coefficient priors and disparity-range narrowing."""

from dataclasses import dataclass
import math

import numpy as np

from .aggregation import (PenaltyParams, aggregate, aggregate_large, extract_disparity,
                          renormalize_iteration)
from .cost import compute_cost
from .errors import DimensionError, ParameterError
from .image import bilinear_upsample, build_pyramid
from .parabola import ParabolaMap, SubpixelEstimator, fit_parabolas
from .refinement import lr_consistency, speckle_filter, DisparityMap


@dataclass
class ScalePrior:
    a_prior: np.ndarray
    b_prior: np.ndarray
    weight: float = 1.0


def upsample_prior(a_coarse, b_coarse, factor, target_w, target_h, weight=1.0):
    """Carry coarse aggregated coefficients to the finer grid.

    ``B`` is multiplied by ``factor`` first, so the implied minimizer is
    expressed in fine-level pixels.
    """
    if not factor > 1:
        raise ParameterError(f"scale factor must exceed 1, got {factor}")
    a_coarse = np.asarray(a_coarse, dtype=np.float64)
    b_coarse = np.asarray(b_coarse, dtype=np.float64)
    if a_coarse.shape != b_coarse.shape:
        raise DimensionError("A and B maps differ in shape")
    a = bilinear_upsample(a_coarse, target_w, target_h)
    b = bilinear_upsample(b_coarse * factor, target_w, target_h)
    return ScalePrior(np.maximum(a, 0.0), b, weight)


def fuse_prior(alpha, beta, prior):
    """``alpha + w*A_prior`` and ``beta + w*B_prior``."""
    return alpha + prior.weight * prior.a_prior, beta + prior.weight * prior.b_prior


def range_from_prior(coarse_disparity, factor, limits=None):
    """Integer search range for the finer level, one plane of margin each side.

    ``limits`` optionally clamps the result to an absolute ``(lo, hi)``;
    the range is widened back to three planes if needed.
    """
    vals = getattr(coarse_disparity, "values", coarse_disparity)
    valid = getattr(coarse_disparity, "valid", None)
    vals = np.asarray(vals, dtype=np.float64)
    if valid is not None and np.any(valid):
        vals = vals[valid]
    vals = vals[np.isfinite(vals)]
    if vals.size == 0:
        raise ParameterError("coarse disparity map has no valid pixels")
    lo = math.floor(factor * vals.min()) - 1
    hi = math.ceil(factor * vals.max()) + 1
    if limits is not None:
        lo, hi = max(lo, limits[0]), min(hi, limits[1])
        if hi < lo:
            lo, hi = limits
    return _at_least_three(lo, hi)


def _at_least_three(lo, hi):
    while hi - lo + 1 < 3:
        lo, hi = lo - 1, hi + 1
    return int(lo), int(hi)


def level_limits(d_min, d_max, scale):
    """Integer planes covering ``[d_min, d_max] / scale`` with a one-plane margin."""
    return _at_least_three(math.floor(d_min / scale) - 1, math.ceil(d_max / scale) + 1)


@dataclass
class LevelResult:
    disparity: DisparityMap
    sum_a: np.ndarray
    sum_b: np.ndarray
    d_range: tuple
    initial: ParabolaMap


@dataclass
class CCAResult:
    disparity: DisparityMap
    levels: list


def estimator_from(config):
    return SubpixelEstimator(config.subpixel, config.histeq_offset)


def penalty_from(config):
    p2 = config.P2 if config.mode == "stereo-large" else min(config.P2, 0.5 * config.P)
    return PenaltyParams(P=config.P, sigma=config.sigma, P1=config.P, P2=p2,
                         t_prop=config.t_prop,
                         t_edge=config.t_edge, t_d=config.t_d)


def _large_confidence(left, right, cv, field, config):
    """Down-weight speckles and L-R inconsistent pixels of the initial fit."""
    cv_r = compute_cost(right, left, config.metric, config.window_std, -cv.d_max, -cv.d_min)
    field_r = fit_parabolas(cv_r, config.t_q, config.t_a, config.eps, None,
                            config.num_minima, True, config.t_d)
    init_l = DisparityMap.from_values(field.local_disparity)
    init_r = DisparityMap.from_values(field_r.local_disparity)
    keep = lr_consistency(init_l, init_r, config.lr_tol).valid
    keep &= speckle_filter(init_l, config.speckle_size, config.speckle_tol).valid
    pm = field.parabolas
    low = ~keep & pm.valid
    s = config.eps ** 2
    pm.alpha[low] *= s
    pm.beta[low] *= s


def run_level(left, right, d_range, config, prior=None, iterations=1):
    """Cost volume, parabolas, optional prior fusion and iterated aggregation."""
    cv = compute_cost(left, right, config.metric, config.window_std, *d_range)
    large = config.mode == "stereo-large"
    field = fit_parabolas(cv, config.t_q, config.t_a, config.eps, estimator_from(config),
                          config.num_minima, large, config.t_d)
    if large:
        _large_confidence(left, right, cv, field, config)
    pmap = field.parabolas
    if prior is not None:
        pmap.alpha, pmap.beta = fuse_prior(pmap.alpha, pmap.beta, prior)
    initial = pmap.copy()
    params = penalty_from(config)
    alpha1 = pmap.alpha.copy()
    d_case = np.rint(field.local_disparity)
    state = None
    for it in range(iterations):
        if it > 0:
            pmap = renormalize_iteration(state, alpha1, config.eps)
            d_case = np.rint(pmap.minimizer())
        if large:
            state = aggregate_large(pmap, left, d_case, params, it + 1, config.num_paths)
        else:
            state = aggregate(pmap, left, params, config.num_paths)
    return LevelResult(extract_disparity(state), state.sum_a, state.sum_b, d_range, initial)


def normalized_prior_maps(level):
    """Rescale aggregated sums so their mean matches the level's local curvature.

    The sums grow with path count and iterations; the ratio keeps every
    minimizer and makes the fusion weight comparable to one local parabola.
    """
    k = level.initial.alpha.mean() / level.sum_a.mean()
    return level.sum_a * k, level.sum_b * k


def run_coarse_to_fine(left, right, config):
    """Multi-scale CCA on an already pre-processed pair; returns :class:`CCAResult`."""
    left = np.asarray(left, dtype=np.float64)
    right = np.asarray(right, dtype=np.float64)
    if left.shape != right.shape:
        raise DimensionError(f"pair shape mismatch: {left.shape} vs {right.shape}")
    f = config.pyramid_factor
    pyr_l = build_pyramid(left, config.scales, f)
    pyr_r = build_pyramid(right, config.scales, f)
    levels = []
    prior = None
    prev = None
    for s in range(config.scales - 1, -1, -1):
        lim = level_limits(config.d_min, config.d_max, f ** s)
        if prev is None:
            d_range = lim
        else:
            d_range = range_from_prior(prev.disparity, f, lim)
            h, w = pyr_l[s].shape
            a, b = normalized_prior_maps(prev)
            prior = upsample_prior(a, b, f, w, h, config.prior_weight)
        it = config.iterations[config.scales - 1 - s]
        prev = run_level(pyr_l[s], pyr_r[s], d_range, config,
                         prior if config.prior_weight > 0 else None, it)
        levels.append(prev)
    return CCAResult(prev.disparity, levels)
