import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from artifact.space import (
    SpaceConfig,
    StripViolation,
    complexification_norm,
    coverage_radius,
    eval_Q,
    eval_Q_complex,
    point_sequence,
    q_body_contains,
    separating_function,
    strip_margin,
)

SF = separating_function()
vectors = st.lists(st.floats(-50, 50), min_size=2, max_size=2).map(np.array)


def test_Q_closed_form_at_3_4():
    # (1 + 25)^(1/2) - 1
    assert eval_Q(SF, [3.0, 4.0]) == pytest.approx(math.sqrt(26) - 1, abs=1e-14)


def test_Q_small_argument_has_no_cancellation():
    x = np.array([1e-9, 0.0])
    assert eval_Q(SF, x) == pytest.approx(0.5e-18, rel=1e-12)


def test_strip_margin_is_one_sixth():
    # min over t >= 0 of (1/2 + t^2)/(1 + t)^2 is 1/3 at t = 1/2; half of it is 1/6
    t = np.linspace(0, 4, 400001)
    brute = np.min((0.5 + t**2) / (1 + t) ** 2)
    assert brute == pytest.approx(1 / 3, abs=1e-10)
    assert strip_margin(SF) == pytest.approx(1 / 6, abs=1e-10)
    assert SF.deltaQ == pytest.approx(1 / 6, abs=1e-10)


def test_higher_degree_margin_is_positive():
    from artifact.space import default_polynomial

    sf2 = separating_function(default_polynomial(2))
    assert 0 < sf2.deltaQ <= 0.5
    assert eval_Q(sf2, [3.0, 4.0]) == pytest.approx((1 + 625) ** 0.25 - 1, rel=1e-14)


@given(vectors)
def test_Q_small_implies_norm_small(x):
    if eval_Q(SF, x) < 4:
        assert np.linalg.norm(x) < 8


@given(vectors, vectors)
def test_Q_is_lipschitz(x, y):
    if np.allclose(x, y):
        return
    assert abs(eval_Q(SF, x) - eval_Q(SF, y)) <= SF.lipQ * np.linalg.norm(x - y) * (1 + 1e-12) + 1e-12


@given(vectors)
def test_Q_far_out_dominates_half_norm(x):
    if np.linalg.norm(x) >= 4:
        assert eval_Q(SF, x) >= np.linalg.norm(x) / 2


def test_complex_Q_on_strip(rng):
    x = rng.uniform(-5, 5, (1000, 2))
    d = rng.normal(size=(1000, 2))
    y = d / np.linalg.norm(d, axis=1, keepdims=True) * rng.uniform(0, 1, (1000, 1)) * SF.deltaQ * 0.999
    z = x + 1j * y
    w = 1 + np.sum(z * z, axis=1)
    assert np.min(w.real) >= 0.5 - 1e-12
    vals = eval_Q_complex(SF, x, y)
    assert np.all(np.isfinite(vals))
    assert np.max(np.abs(eval_Q_complex(SF, x, np.zeros_like(x)) - eval_Q(SF, x))) <= 1e-12


def test_complex_Q_difference_quotients_bounded(rng):
    x = rng.uniform(-5, 5, (500, 2))
    y = rng.uniform(-1, 1, (500, 2)) * SF.deltaQ * 0.6
    h = rng.normal(size=(500, 2)) * 1e-4
    a = eval_Q_complex(SF, x, y)
    b = eval_Q_complex(SF, x + h, y)
    assert np.max(np.abs(a - b) / np.linalg.norm(h, axis=1)) < 10.0


def test_complex_Q_rejects_points_off_the_strip():
    with pytest.raises(StripViolation):
        eval_Q_complex(SF, [0.0, 0.0], [0.2, 0.0])


def test_complexification_norm_orthogonal_pair():
    assert complexification_norm([2.0, 0.0], [0.0, 2.0]) == pytest.approx(2.0, abs=1e-14)


@given(vectors, vectors)
def test_complexification_norm_matches_angle_sweep(x, y):
    theta = np.linspace(0, 2 * np.pi, 10000, endpoint=False)
    sweep = np.max(np.linalg.norm(np.cos(theta)[:, None] * x - np.sin(theta)[:, None] * y, axis=1))
    exact = complexification_norm(x, y)
    scale = max(1.0, np.linalg.norm(x), np.linalg.norm(y))
    # the sweep under-estimates by at most (angular step)^2 / 2 relative to the norm
    assert sweep <= exact + 1e-12 * scale
    assert exact - sweep <= 2e-7 * scale


def test_point_sequence_prefix_is_a_grid():
    cfg = SpaceConfig.cube(2, 5.0)
    pts = point_sequence(cfg, 121)
    assert len({tuple(p) for p in pts}) == 121
    assert np.allclose(pts[0], 0.0)
    # the first 81 points are the full grid with 8 intervals per axis
    assert np.allclose(np.unique(pts[:81, 0]), np.linspace(-5, 5, 9))
    assert len({tuple(p) for p in pts[:81]}) == 81
    # the first 9 points are the level-1 grid
    assert np.allclose(np.unique(pts[:9, 0]), [-5, 0, 5])


def test_coverage_radius_is_an_upper_bound(rng):
    cfg = SpaceConfig.cube(2, 5.0)
    pts = point_sequence(cfg, 121)
    rad = coverage_radius(SF, cfg, 121)
    # finest complete level has spacing 10/8; half its diagonal
    assert rad == pytest.approx(0.5 * math.hypot(1.25, 1.25), rel=1e-12)
    X = rng.uniform(-5, 5, (5000, 2))
    nearest = np.min(eval_Q(SF, X[:, None, :] - pts[None]), axis=1)
    assert nearest.max() <= rad
    assert coverage_radius(SF, cfg, 8) == math.inf


def test_q_body_separation():
    assert not q_body_contains(SF, [0.0, 0.0], 4.0, [8.0, 0.0])
    assert q_body_contains(SF, [0.0, 0.0], 4.0, [1.0, 0.0])


def test_space_config_validation():
    with pytest.raises(ValueError):
        SpaceConfig(2, ((0, 1),))
    with pytest.raises(ValueError):
        SpaceConfig(1, ((1, 0),))
    with pytest.raises(ValueError):
        eval_Q(SF, [np.nan, 0.0])
    cfg = SpaceConfig.cube(3, 2.0)
    assert SpaceConfig.from_dict(cfg.to_dict()) == cfg
