"""Affine-invariant DP metrics and standard stereo error rates."""

from dataclasses import asdict, dataclass, field
import json

import numpy as np
from scipy.stats import rankdata

from .errors import ParameterError

IRLS_ITERATIONS = 20
IRLS_FLOOR = 1e-6
CONF_THRESHOLD = 0.5


@dataclass
class AffineFit:
    gain: float
    bias: float
    degenerate: bool = False


@dataclass
class MetricReport:
    ai1: float
    ai2: float
    one_minus_abs_spearman: float
    bad_px: dict = field(default_factory=dict)
    rmse: float = float("nan")

    @property
    def geometric_mean(self):
        return geometric_mean(self.ai1, self.ai2, self.one_minus_abs_spearman)

    def as_dict(self):
        d = asdict(self)
        d["geometric_mean"] = self.geometric_mean
        d["bad_px"] = {str(k): v for k, v in self.bad_px.items()}
        return d

    def to_text(self):
        d = self.as_dict()
        lines = [f"ai1 = {d['ai1']:.6f}", f"ai2 = {d['ai2']:.6f}",
                 f"one_minus_abs_spearman = {d['one_minus_abs_spearman']:.6f}",
                 f"geometric_mean = {d['geometric_mean']:.6f}"]
        for k, v in d["bad_px"].items():
            lines.append(f"bad_px_{k} = {v:.4f}")
        if np.isfinite(d["rmse"]):
            lines.append(f"rmse = {d['rmse']:.6f}")
        return "\n".join(lines) + "\n"

    def to_json(self):
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)


def geometric_mean(*values):
    v = np.asarray(values, dtype=np.float64)
    return float(np.prod(v) ** (1.0 / len(v)))


def _values(x):
    vals = getattr(x, "values", x)
    return np.asarray(vals, dtype=np.float64)


def _overlap(est, gt, gt_conf=None):
    e, g = _values(est), _values(gt)
    if e.shape != g.shape:
        raise ParameterError(f"estimate {e.shape} and ground truth {g.shape} differ in shape")
    ok = np.isfinite(e) & np.isfinite(g)
    est_valid = getattr(est, "valid", None)
    if est_valid is not None:
        ok &= est_valid
    w = np.ones_like(e) if gt_conf is None else np.asarray(gt_conf, dtype=np.float64)
    ok &= w > 0
    return e[ok], g[ok], w[ok]


def _wls(x, y, w):
    """Weighted least squares ``y ~ gain*x + bias`` on pre-standardized ``x``."""
    sw = w.sum()
    mx, my = (w * x).sum() / sw, (w * y).sum() / sw
    sxx = (w * (x - mx) ** 2).sum()
    if sxx <= 0:
        return 0.0, my
    gain = (w * (x - mx) * (y - my)).sum() / sxx
    return gain, my - gain * mx


def _standardize(e):
    mu = e.mean()
    sd = e.std()
    return (e - mu) / sd if sd > 0 else e - mu, mu, sd


def _fit_std(z, g, w, norm):
    gain, bias = _wls(z, g, w)
    if norm == "L1":
        for _ in range(IRLS_ITERATIONS):
            r = np.abs(g - (gain * z + bias))
            gain, bias = _wls(z, g, w / np.maximum(r, IRLS_FLOOR))
    return gain, bias


def affine_fit(est, gt, gt_conf=None, norm="L2"):
    """Best ``gt ~ gain*est + bias`` under a (confidence-weighted) L1 or L2 loss.

    L1 runs 20 reweighted least-squares rounds started from the L2 solution.
    """
    norm = norm.upper()
    if norm not in ("L1", "L2"):
        raise ParameterError(f"norm must be L1 or L2, got {norm!r}")
    e, g, w = _overlap(est, gt, gt_conf)
    if e.size < 2:
        raise ParameterError("need at least two overlapping valid pixels")
    z, mu, sd = _standardize(e)
    if sd == 0:
        return AffineFit(0.0, float((w * g).sum() / w.sum()), degenerate=True)
    gain, bias = _fit_std(z, g, w, norm)
    return AffineFit(float(gain / sd), float(bias - gain * mu / sd))


def normalize_gt(g):
    lo, hi = g.min(), g.max()
    return (g - lo) / (hi - lo) if hi > lo else g - lo


def ai_metric(est, gt, gt_conf=None, order=2):
    """Affine-invariant error: weighted mean |r| (order 1) or RMS r (order 2).

    The ground truth is rescaled to [0, 1] over the evaluated pixels, then
    fitted with the matching norm.
    """
    if order not in (1, 2):
        raise ParameterError(f"order must be 1 or 2, got {order}")
    e, g, w = _overlap(est, gt, gt_conf)
    if e.size == 0:
        raise ParameterError("no valid overlap between estimate and ground truth")
    g = normalize_gt(g)
    z, _, sd = _standardize(e)
    if sd == 0 or e.size < 2:
        pred = np.full_like(g, (w * g).sum() / w.sum())
    else:
        gain, bias = _fit_std(z, g, w, "L1" if order == 1 else "L2")
        pred = gain * z + bias
    r = g - pred
    if order == 1:
        return float((w * np.abs(r)).sum() / w.sum())
    return float(np.sqrt((w * r ** 2).sum() / w.sum()))


def spearman(est, gt, gt_conf=None):
    """``1 - |rho_s|`` with average ranks, over pixels of confidence > 0.5."""
    conf = None if gt_conf is None else (np.asarray(gt_conf) > CONF_THRESHOLD).astype(float)
    e, g, _ = _overlap(est, gt, conf)
    if e.size < 3:
        raise ParameterError("need at least 3 valid pixels for a rank correlation")
    re, rg = rankdata(e), rankdata(g)
    re -= re.mean()
    rg -= rg.mean()
    den = np.sqrt((re ** 2).sum() * (rg ** 2).sum())
    if den == 0:
        return 1.0
    rho = float((re * rg).sum() / den)
    return float(np.clip(1.0 - abs(rho), 0.0, 1.0))


def stereo_metrics(est, gt, mask=None, thresholds=(0.5, 1.0, 2.0)):
    """Bad-pixel percentages and RMSE over ``mask`` (e.g. non-occluded).

    Invalid estimates inside the mask count as bad pixels.
    """
    e, g = _values(est), _values(gt)
    m = np.isfinite(g) if mask is None else (np.asarray(mask, dtype=bool) & np.isfinite(g))
    if not m.any():
        raise ParameterError("empty evaluation mask")
    est_valid = getattr(est, "valid", np.isfinite(e))
    err = np.where(est_valid & np.isfinite(e), np.abs(e - g), np.inf)[m]
    bad = {t: float(100.0 * np.mean(err > t)) for t in thresholds}
    finite = np.isfinite(err)
    rmse = float(np.sqrt(np.mean(err[finite] ** 2))) if finite.any() else float("nan")
    return bad, rmse


def evaluate(est, gt, gt_conf=None, mask=None):
    """Full :class:`MetricReport` for one estimate."""
    bad, rmse = stereo_metrics(est, gt, mask)
    return MetricReport(ai_metric(est, gt, gt_conf, 1), ai_metric(est, gt, gt_conf, 2),
                        spearman(est, gt, gt_conf), bad, rmse)


def aggregate_reports(reports):
    """Mean of each metric across a dataset."""
    if not reports:
        raise ParameterError("no reports to aggregate")
    keys = reports[0].bad_px.keys()
    return MetricReport(
        float(np.mean([r.ai1 for r in reports])),
        float(np.mean([r.ai2 for r in reports])),
        float(np.mean([r.one_minus_abs_spearman for r in reports])),
        {k: float(np.mean([r.bad_px[k] for r in reports])) for k in keys},
        float(np.mean([r.rmse for r in reports])))
