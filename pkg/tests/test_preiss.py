import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from artifact.preiss import (
    PreissConvergenceError,
    PreissSolveConfig,
    empirical_radius,
    preiss_C,
    preiss_norm,
    preiss_norm_complex,
)

sequences = st.lists(st.floats(-1e3, 1e3, allow_subnormal=False), min_size=1, max_size=10).filter(
    lambda v: max(abs(a) for a in v) > 1e-6
)


def test_C_direct_sum():
    assert preiss_C([0.5, 0.5]) == 0.3125


def test_C_below_one_on_half_cube():
    for k in range(1, 12):
        assert preiss_C([0.5] * k) < 1
        assert preiss_C([-0.5] * k) < 1


def test_norm_quadratic_oracle():
    # u = 1/lambda^2 solves u^2 + u = 1
    u = (math.sqrt(5) - 1) / 2
    oracle = 1 / math.sqrt(u)
    assert preiss_norm([1.0, 1.0]) == pytest.approx(oracle, abs=1e-12)
    assert preiss_norm([1.0, 1.0]) == pytest.approx(1.272020, abs=1e-6)
    assert preiss_C(np.array([1.0, 1.0]) / oracle) == pytest.approx(1.0, abs=1e-14)


def test_norm_of_zero_and_single_entry():
    assert preiss_norm([0.0, 0.0]) == 0.0
    assert preiss_norm([3.0]) == pytest.approx(3.0, abs=1e-13)


@given(sequences)
def test_norm_residual_and_equivalence(x):
    x = np.array(x)
    lam = preiss_norm(x)
    assert abs(preiss_C(x / lam) - 1) <= 1e-10
    top = np.max(np.abs(x))
    assert top * (1 - 1e-12) <= lam <= 2 * top * (1 + 1e-12)


@given(sequences, st.floats(-100, 100).filter(lambda s: abs(s) > 1e-3))
def test_norm_homogeneity(x, s):
    x = np.array(x)
    assert preiss_norm(s * x) == pytest.approx(abs(s) * preiss_norm(x), rel=1e-10)


@given(sequences)
def test_norm_is_monotone_in_each_entry(x):
    x = np.array(x)
    y = x.copy()
    y[0] = 2 * x[0]
    assert preiss_norm(y) >= preiss_norm(x) * (1 - 1e-12)


def test_trailing_zeros_do_not_change_the_norm():
    assert preiss_norm([0.3, 1.2]) == preiss_norm([0.3, 1.2, 0.0, 0.0])


def test_invalid_inputs():
    with pytest.raises(ValueError):
        preiss_norm([])
    with pytest.raises(ValueError):
        preiss_norm([np.inf])
    with pytest.raises(ValueError):
        PreissSolveConfig(abs_tol=0)


def test_complex_norm_agrees_on_reals():
    x = [0.4, -1.3, 0.7]
    assert preiss_norm_complex(np.array(x, dtype=complex)) == pytest.approx(preiss_norm(x), abs=1e-12)


def test_complex_path_continuity():
    # continuation oracle: sweep y from 0 to 0.05 in steps of 1e-4
    ys = np.arange(0, 0.05 + 1e-12, 1e-4)
    mus = []
    mu_prev = preiss_norm([1.0, 1.0])
    for y in ys:
        mu_prev = preiss_norm_complex(np.array([1 + 1j * y, 1]), mu0=abs(mu_prev))
        mus.append(mu_prev)
    mus = np.array(mus)
    K = np.max(np.abs(np.diff(mus)) / 1e-4)
    assert np.all(np.abs(mus - mus[0]) <= K * ys + 1e-12)
    assert K < 10


def test_common_perturbation_radius_for_scaled_families(rng):
    dirs = rng.normal(size=(8, 4))
    dirs /= np.abs(dirs).max(axis=1, keepdims=True)
    radii = [0.005, 0.01, 0.02, 0.04]
    found = []
    for _ in range(50):
        alpha = rng.uniform(1, 1001, 4)
        found.append(empirical_radius(alpha, dirs, radii))
    assert min(found) > 0


def test_complex_drift_raises():
    with pytest.raises(PreissConvergenceError):
        preiss_norm_complex(np.array([1 + 5j, 1]), mu0=1.27, max_drift=0.01)
