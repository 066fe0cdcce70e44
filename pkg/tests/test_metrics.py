import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from oracles import hand_ssim

from chantwin.errors import DegeneratePeak, DegenerateVariance, DimensionMismatch
from chantwin.grid import RadioMap, make_grid
from chantwin.metrics import abs_error_map, all_metrics, correlation, default_stabilizers, mse, psnr, ssim

finite_maps = arrays(float, (6, 5), elements=st.floats(-150, -20))


def test_mse_examples():
    x = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert mse(x, x) == 0.0
    assert mse(x, x + 3.0) == pytest.approx(9.0)
    assert mse(np.zeros((2, 2)), x) == 7.5


def test_psnr_examples():
    truth = np.array([[-10.0, -30.0], [-20.0, -40.0]])
    assert psnr(truth, truth + 1.0) == pytest.approx(20.0)
    assert psnr(truth, truth + 10.0) == pytest.approx(0.0)
    assert psnr(truth, truth) == float("inf")


def test_psnr_zero_peak():
    with pytest.raises(DegeneratePeak):
        psnr(np.array([[0.0, -1.0]]), np.array([[1.0, 1.0]]))


def test_psnr_uses_maximum_not_largest_magnitude():
    truth = np.array([[-5.0, -100.0]])
    assert psnr(truth, truth + 1.0) == pytest.approx(10 * np.log10(25.0))


def test_ssim_hand_case():
    a = np.array([[0.0, 0.0], [2.0, 2.0]])
    b = np.zeros((2, 2))
    expected = (1e-4 * (0 + 1e-4)) / ((1 + 1e-4) * (1 + 1e-4))
    assert ssim(a, b, 1e-4, 1e-4) == pytest.approx(expected, rel=1e-12)
    assert ssim(a, b, 1e-4, 1e-4) == pytest.approx(hand_ssim(a, b, 1e-4, 1e-4), rel=1e-12)


def test_ssim_mirror_is_negative():
    rng = np.random.default_rng(0)
    a = rng.normal(-90, 8, (10, 10))
    assert ssim(a, -a + 2 * a.mean()) < 0


def test_default_stabilizers():
    c1, c2 = default_stabilizers(np.array([-100.0, -50.0]))
    assert c1 == pytest.approx(0.25) and c2 == pytest.approx(2.25)


def test_correlation_examples():
    rng = np.random.default_rng(1)
    a = rng.normal(size=(8, 8))
    assert correlation(a, a) == pytest.approx(1.0, abs=1e-12)
    assert correlation(a, -a) == pytest.approx(-1.0, abs=1e-12)
    with pytest.raises(DegenerateVariance):
        correlation(a, np.ones_like(a))


def test_abs_error_map():
    g = make_grid(3, 2, 1.0)
    truth = RadioMap(g, np.arange(6.0).reshape(2, 3))
    twin = RadioMap(g, truth.values + 3.0)
    err = abs_error_map(truth, twin)
    assert isinstance(err, RadioMap)
    np.testing.assert_array_equal(err.values, 3.0)
    assert np.all(abs_error_map(truth, truth).values == 0)


def test_shape_mismatch():
    for f in (mse, psnr, ssim, correlation, abs_error_map):
        with pytest.raises(DimensionMismatch):
            f(np.ones((2, 2)), np.ones((2, 3)))


def test_all_metrics_keys():
    rng = np.random.default_rng(2)
    a = rng.normal(-90, 5, (5, 5))
    assert set(all_metrics(a, a + rng.normal(size=a.shape))) == {"mse", "psnr", "ssim", "corr"}


@given(finite_maps)
def test_ssim_self_is_one(x):
    assert ssim(x, x) == pytest.approx(1.0, abs=1e-12)


@given(finite_maps, finite_maps)
def test_ssim_symmetric_with_fixed_stabilizers(x, y):
    assert ssim(x, y, 0.1, 0.9) == pytest.approx(ssim(y, x, 0.1, 0.9), rel=1e-12, abs=1e-15)


@given(finite_maps, finite_maps)
def test_ssim_matches_hand_oracle(x, y):
    c1, c2 = default_stabilizers(x)
    if c1 == 0:
        return
    assert ssim(x, y) == pytest.approx(hand_ssim(x, y, c1, c2), rel=1e-9, abs=1e-12)


@given(finite_maps, finite_maps)
def test_mse_equals_mean_squared_abs_error(x, y):
    assert mse(x, y) == pytest.approx(np.mean(abs_error_map(x, y) ** 2), rel=1e-12, abs=1e-12)


@given(finite_maps, st.floats(0.01, 100), st.floats(-50, 50))
def test_correlation_affine_invariant(x, a, b):
    if np.ptp(x) < 1e-3:
        return
    rng = np.random.default_rng(0)
    y = x + rng.normal(size=x.shape)
    assert correlation(x, a * y + b) == pytest.approx(correlation(x, y), abs=1e-12)


@given(finite_maps, st.floats(0.1, 10), st.floats(1.01, 5))
def test_psnr_decreasing_in_mse(x, scale, factor):
    noise = np.random.default_rng(3).normal(size=x.shape)
    lo, hi = x + scale * noise, x + scale * factor * noise
    assert mse(x, lo) < mse(x, hi)
    assert psnr(x, lo) > psnr(x, hi)
