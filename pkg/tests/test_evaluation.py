import numpy as np
import pytest

from ccastereo.errors import ParameterError
from ccastereo.evaluation import (affine_fit, ai_metric, evaluate, geometric_mean, spearman,
                                  stereo_metrics)


def test_affine_fit_exact(rng):
    e = rng.standard_normal(100)
    fit = affine_fit(e, 3 * e - 2)
    assert fit.gain == pytest.approx(3) and fit.bias == pytest.approx(-2)
    assert affine_fit(np.ones(5), np.arange(5.0)).degenerate


def test_l1_fit_ignores_outlier():
    e = np.arange(10.0)
    g = 2 * e + 1
    g[9] = 100.0
    l1 = affine_fit(e, g, norm="L1")
    assert l1.gain == pytest.approx(2, abs=1e-3) and l1.bias == pytest.approx(1, abs=1e-3)
    gains, biases = np.meshgrid(np.linspace(1.5, 2.5, 201), np.linspace(0, 2, 201))
    loss = np.abs(g[None, None] - (gains[..., None] * e + biases[..., None])).sum(-1)
    i = np.unravel_index(np.argmin(loss), loss.shape)
    assert abs(l1.gain - gains[i]) < 0.01 and abs(l1.bias - biases[i]) < 0.02
    assert affine_fit(e, g).gain > 2.5
    with pytest.raises(ParameterError):
        affine_fit(e, g, norm="L3")


def test_ai_metric_values(rng):
    gt = rng.random((50, 50))
    assert ai_metric(5 * gt + 1, gt) == pytest.approx(0, abs=1e-12)
    noise = rng.random((200, 200))
    assert ai_metric(noise, rng.random((200, 200)), order=2) == pytest.approx(np.sqrt(1 / 12),
                                                                              rel=0.02)
    assert ai_metric(np.full((4, 4), 2.0), gt[:4, :4]) > 0
    with pytest.raises(ParameterError):
        ai_metric(gt, gt, order=3)


def test_ai_metric_ignores_invalid(rng):
    gt = rng.random((20, 20))
    est = gt.copy()
    est[:5] = np.nan
    assert ai_metric(est, gt) == pytest.approx(0, abs=1e-12)
    conf = np.ones_like(gt)
    est2 = gt.copy()
    est2[:5] = rng.random((5, 20))
    conf[:5] = 0
    assert ai_metric(est2, gt, conf) == pytest.approx(0, abs=1e-12)


def test_spearman_examples():
    gt = np.arange(5.0)
    assert spearman(gt, gt) == 0.0
    assert spearman(-gt, gt) == 0.0
    assert spearman(np.array([1.0, 0, 2, 3, 4]), gt) == pytest.approx(0.1)
    assert spearman(np.array([0.0, 2, 1, 4, 3]), gt) == pytest.approx(0.2)


def test_stereo_metrics_examples():
    gt = np.zeros((4, 4))
    bad, rmse = stereo_metrics(gt + 0.75, gt)
    assert bad[0.5] == 100 and bad[1.0] == 0 and rmse == pytest.approx(0.75)
    est = gt.copy()
    est[:2] = 3.0
    bad, _ = stereo_metrics(est, gt)
    assert bad[0.5] == bad[1.0] == bad[2.0] == 50
    est = gt.copy()
    est[0, 0] = np.nan
    bad, _ = stereo_metrics(est, gt)
    assert bad[1.0] == pytest.approx(100 / 16)


def test_geometric_mean_and_report(rng):
    assert geometric_mean(1, 4, 16) == pytest.approx(4)
    gt = rng.random((16, 16))
    rep = evaluate(gt * 2, gt)
    assert rep.ai2 == pytest.approx(0, abs=1e-12) and rep.geometric_mean == pytest.approx(0)
    assert "ai2 = " in rep.to_text() and '"ai1"' in rep.to_json()
