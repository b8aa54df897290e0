import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.stats import norm

from artifact.smoothing import SmoothedPiecewiseLinear, hinge, hinge_slope

TENT = SmoothedPiecewiseLinear(np.array([-1.0, 0.0, 2.0]), np.array([0.0, 1.0, 0.0]), 0.3)


@pytest.mark.parametrize("t", [-2.0, -0.5, 0.0, 0.7, 1.9, 3.0])
def test_matches_numerical_convolution(t):
    integrand = lambda s: TENT.raw(t - s) * norm.pdf(s, scale=0.3)
    ref, _ = quad(integrand, -6, 6, points=[t + 1, t, t - 2], limit=200, epsabs=1e-14)
    assert TENT(t) == pytest.approx(ref, abs=1e-12)


def test_hinge_limits():
    assert hinge(40.0) == pytest.approx(40.0)
    assert hinge(-40.0) == pytest.approx(0.0, abs=1e-300)
    assert hinge(0.0) == pytest.approx(1 / np.sqrt(2 * np.pi))
    assert hinge_slope(0.0) == 0.5


def test_hinge_is_holomorphic():
    z = 0.3 + 0.2j
    h = 1e-6
    cr = (hinge(z + h) - hinge(z - h)) / (2 * h)
    ci = (hinge(z + 1j * h) - hinge(z - 1j * h)) / (2j * h)
    assert abs(cr - ci) < 1e-8
    assert abs(cr - hinge_slope(z)) < 1e-8


@given(st.floats(-5, 5), st.floats(-5, 5))
def test_lipschitz_constant_is_kept(a, b):
    if a == b:
        return
    assert abs(TENT(a) - TENT(b)) <= TENT.lipschitz * abs(a - b) * (1 + 1e-9) + 1e-15


@given(st.floats(-5, 5))
def test_error_bounded_by_kink_mass(t):
    kinks = np.abs(np.diff(TENT.slopes)).sum()
    assert abs(TENT(t) - TENT.raw(t)) <= 0.3 * kinks / np.sqrt(2 * np.pi) + 1e-15


def test_derivative_matches_difference_quotient():
    t = np.linspace(-3, 3, 61)
    fd = (TENT(t + 1e-6) - TENT(t - 1e-6)) / 2e-6
    assert np.max(np.abs(fd - TENT.derivative(t))) < 1e-7


def test_outer_slopes_continue():
    f = SmoothedPiecewiseLinear(np.array([0.0, 1.0]), np.array([0.0, 1.0]), 0.0, left_slope=2.0, right_slope=-1.0)
    assert f.raw(-1.0) == -2.0
    assert f.raw(3.0) == -1.0
    assert f.lipschitz == 2.0


def test_validation():
    with pytest.raises(ValueError):
        SmoothedPiecewiseLinear(np.array([1.0, 0.0]), np.array([0.0, 1.0]), 0.1)
    with pytest.raises(ValueError):
        SmoothedPiecewiseLinear(np.array([0.0, 1.0]), np.array([0.0, 1.0]), -1.0)
