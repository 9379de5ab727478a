"""End-to-end CCA and SGM runs: pre-processing, matching, post-processing."""

from dataclasses import replace
import logging

import numpy as np

from .cost import compute_cost
from .errors import DimensionError
from .image import as_image, subtraction_bilateral, vignetting_compensate
from .multiscale import run_coarse_to_fine
from .refinement import (edge_aware_smooth, guided_smooth, lr_consistency, median_fill,
                         speckle_filter)
from .sgm import SgmParams, sgm_aggregate, wta_subpixel

log = logging.getLogger(__name__)


def preprocess(left, right, config):
    """Scale to ``intensity_scale`` and apply the configured photometric fixes.

    Returns ``(left, right, guide)``; the guide is the scaled left view
    before band-pass filtering, so edges stay meaningful for smoothing.
    """
    left, right = as_image(left), as_image(right)
    if left.shape != right.shape:
        raise DimensionError(f"pair shape mismatch: {left.shape} vs {right.shape}")
    left = left * config.intensity_scale
    right = right * config.intensity_scale
    if config.vignetting:
        left = vignetting_compensate(left, right, config.vignetting_lpf_std)
    guide = left.copy()
    if config.subtraction_bilateral:
        left = subtraction_bilateral(left, config.bilsub_spatial_std, config.bilsub_range_std)
        right = subtraction_bilateral(right, config.bilsub_spatial_std, config.bilsub_range_std)
    return left, right, guide


def _mirrored(config):
    return replace(config, d_min=-config.d_max, d_max=-config.d_min)


def postprocess(disp_l, disp_r, guide, config):
    """L-R check, speckle removal, hole filling, then edge-aware smoothing."""
    disp = lr_consistency(disp_l, disp_r, config.lr_tol)
    disp = speckle_filter(disp, config.speckle_size, config.speckle_tol)
    if not disp.valid.any():
        log.warning("post-processing rejected every pixel; keeping the raw map")
        return disp_l
    disp = median_fill(disp, config.median_window, max_passes=None)
    if config.smoother == "guided":
        return guided_smooth(disp, guide / config.intensity_scale, config.guided_radius,
                             config.guided_eps)
    return edge_aware_smooth(disp, guide, config.sigma_luma, config.sigma_xy, config.lam)


def run_cca(left, right, config):
    """Disparity of ``left`` w.r.t. ``right`` (right sampled at ``x - d``)."""
    left, right, guide = preprocess(left, right, config)
    disp = run_coarse_to_fine(left, right, config).disparity
    if not config.postprocess:
        return disp
    disp_r = run_coarse_to_fine(right, left, _mirrored(config)).disparity
    return postprocess(disp, disp_r, guide, config)


def sgm_params(config):
    return SgmParams(config.sgm_p1, config.sgm_p2, config.num_paths, config.sigma)


def _sgm_once(left, right, config):
    lo, hi = int(np.floor(config.d_min)), int(np.ceil(config.d_max))
    if hi - lo < 2:
        lo, hi = lo - 1, hi + 1
    cv = compute_cost(left, right, config.metric, config.window_std, lo, hi)
    return wta_subpixel(sgm_aggregate(cv, sgm_params(config), left))


def run_sgm(left, right, config):
    """SGM baseline on the same cost, range and post-processing as :func:`run_cca`."""
    left, right, guide = preprocess(left, right, config)
    disp = _sgm_once(left, right, config)
    if not config.postprocess:
        return disp
    disp_r = _sgm_once(right, left, _mirrored(config))
    return postprocess(disp, disp_r, guide, config)
