import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from ccastereo.errors import DimensionError, LevelCountError, ParameterError
from ccastereo.image import (as_image, bilateral_filter, bilinear_upsample, build_pyramid,
                             gaussian_kernel1d, gaussian_window_filter, subtraction_bilateral,
                             to_grayscale, vignetting_compensate)


def test_grayscale_white_and_green():
    assert np.allclose(to_grayscale(np.ones((3, 4, 3))), 1.0)
    green = np.zeros((2, 2, 3))
    green[..., 1] = 1.0
    assert np.allclose(to_grayscale(green), 0.587)


def test_grayscale_two_pixel_raster():
    rgb = np.zeros((1, 2, 3))
    rgb[0, 0, 0] = 1.0
    rgb[0, 1, 1] = 1.0
    assert np.allclose(to_grayscale(rgb), [[0.299, 0.587]])


def test_grayscale_passes_gray_through():
    g = np.arange(6.0).reshape(2, 3)
    assert np.array_equal(to_grayscale(g), g)


def test_as_image_rejects_bad_input():
    with pytest.raises(DimensionError):
        as_image(np.zeros(5))
    with pytest.raises(ParameterError):
        as_image(np.array([[np.nan, 1.0]]))


def test_kernel_normalized_with_3sigma_radius():
    k = gaussian_kernel1d(2.0)
    assert k.size == 2 * 6 + 1
    assert k.sum() == pytest.approx(1.0)


def test_filter_constant_unchanged():
    img = np.full((20, 30), 7.5)
    assert np.allclose(gaussian_window_filter(img, 3.0), 7.5)


def test_filter_impulse_peak():
    img = np.zeros((21, 21))
    img[10, 10] = 1.0
    out = gaussian_window_filter(img, 1.0)
    x = np.arange(-3, 4)
    g = np.exp(-x ** 2 / 2.0)
    g /= g.sum()
    assert out[10, 10] == pytest.approx(g[3] ** 2)
    assert out.sum() == pytest.approx(1.0)


def test_filter_rejects_bad_std():
    with pytest.raises(ParameterError):
        gaussian_window_filter(np.zeros((4, 4)), 0.0)


@settings(max_examples=25, deadline=None)
@given(arrays(np.float64, (9, 11), elements=st.floats(-100, 100)),
       arrays(np.float64, (9, 11), elements=st.floats(-100, 100)),
       st.floats(-3, 3), st.floats(-3, 3))
def test_filter_and_upsample_linear(x, y, a, b):
    lhs = gaussian_window_filter(a * x + b * y, 1.5)
    rhs = a * gaussian_window_filter(x, 1.5) + b * gaussian_window_filter(y, 1.5)
    assert np.allclose(lhs, rhs, rtol=1e-6, atol=1e-6)
    lhs = bilinear_upsample(a * x + b * y, 20, 17)
    rhs = a * bilinear_upsample(x, 20, 17) + b * bilinear_upsample(y, 20, 17)
    assert np.allclose(lhs, rhs, rtol=1e-6, atol=1e-6)


def test_pyramid_dims_and_constant():
    pyr = build_pyramid(np.full((64, 64), 3.0), 3, 2.0)
    assert [lvl.shape for lvl in pyr.levels] == [(64, 64), (32, 32), (16, 16)]
    assert all(np.allclose(lvl, 3.0) for lvl in pyr.levels)
    assert len(build_pyramid(np.zeros((10, 10)), 1)) == 1


def test_pyramid_odd_sizes_ceil():
    pyr = build_pyramid(np.zeros((33, 17)), 2)
    assert pyr[1].shape == (17, 9)


def test_pyramid_too_small():
    with pytest.raises(LevelCountError):
        build_pyramid(np.zeros((32, 32)), 4)


def test_pyramid_downsample_is_centre_aligned():
    # a ramp must survive down/up-sampling without a half-pixel shift
    ramp = np.tile(np.arange(64.0), (64, 1))
    coarse = build_pyramid(ramp, 2)[1]
    back = bilinear_upsample(coarse, 64, 64)
    assert np.allclose(back[:, 6:-6], ramp[:, 6:-6], atol=1e-9)


def test_upsample_identity_ramp_constant():
    img = np.random.default_rng(0).random((5, 6))
    assert np.allclose(bilinear_upsample(img, 6, 5), img)
    ramp = bilinear_upsample(np.array([[0.0, 1.0]]), 4, 1)[0]
    assert np.all(np.diff(ramp) >= 0) and ramp[0] == 0.0 and ramp[-1] == 1.0
    assert np.allclose(bilinear_upsample(np.full((3, 3), 2.0), 9, 7), 2.0)
    with pytest.raises(DimensionError):
        bilinear_upsample(np.zeros((4, 4)), 2, 2)


def test_vignetting_cases():
    rng = np.random.default_rng(1)
    right = rng.random((40, 40)) + 0.5
    assert np.allclose(vignetting_compensate(right, right), right)
    out = vignetting_compensate(2.0 * right, right)
    assert np.allclose(out, right, rtol=1e-9)
    assert np.array_equal(vignetting_compensate(np.zeros((40, 40)), right), np.zeros((40, 40)))


def test_subtraction_bilateral_constant_is_zero():
    out = subtraction_bilateral(np.full((16, 16), 42.0))
    assert np.array_equal(out, np.zeros((16, 16)))


def test_subtraction_bilateral_step():
    img = np.zeros((20, 40))
    img[:, 20:] = 100.0
    res = subtraction_bilateral(img, 3.0, 20.0)
    assert np.abs(res[:, :12]).max() < 1e-6
    assert np.abs(res[:, 28:]).max() < 1e-6
    assert np.abs(res).max() < 1.0  # range kernel keeps the step out of the blur


def test_subtraction_bilateral_impulse():
    img = np.zeros((21, 21))
    img[10, 10] = 10.0
    res = subtraction_bilateral(img, 3.0, 20.0)
    smooth = bilateral_filter(img, 3.0, 20.0)
    assert res[10, 10] == pytest.approx(10.0 - smooth[10, 10])
    assert 0 < smooth[10, 10] < 10.0
