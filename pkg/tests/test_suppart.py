import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from artifact.space import eval_Q, eval_Q_complex, point_sequence, separating_function, SpaceConfig
from artifact.suppart import (
    SupPartitionConfig,
    build_boxes,
    bump_b,
    kappa_floor,
    kernel_widths,
    local_strip_estimate,
    nu_monte_carlo,
    phi,
    phi_complex,
    phi_matrix,
    property7_radius,
    smoothed_nu,
)

SF = separating_function()


def bare_config(N=3, r=1.0, eps=0.1):
    return SupPartitionConfig(point_sequence(SpaceConfig.cube(2, 2.0), N), r, eps, SF)


def test_first_box_pair():
    box = build_boxes(bare_config(r=1.0), 1)
    assert box.inner.tolist() == [[-1.0, 3.0]]
    assert box.outer.tolist() == [[-1.0, 4.0]]


def test_second_box_last_coordinate():
    cfg = bare_config(r=2.0)
    box = build_boxes(cfg, 2)
    assert box.inner[1].tolist() == [-1.0, 6.0]
    assert box.inner[0, 0] == 6.0
    # M_n >= 8 r keeps every interval non-empty
    assert box.M >= 8 * cfg.r
    assert np.all(box.inner[:, 0] < box.inner[:, 1])


def test_bump_values():
    cfg = bare_config(N=3)
    box = build_boxes(cfg, 2)
    inside = box.inner.mean(axis=1)
    assert bump_b(box, inside, cfg.r, cfg.eps) == pytest.approx(1.1)
    outside = inside.copy()
    outside[1] = box.outer[1, 1] + 0.01
    assert bump_b(box, outside, cfg.r, cfg.eps) == 0.0


@given(st.lists(st.floats(-10, 40), min_size=2, max_size=2), st.lists(st.floats(-10, 40), min_size=2, max_size=2))
def test_bump_is_lipschitz(a, b):
    cfg = bare_config(N=3)
    box = build_boxes(cfg, 2)
    a, b = np.array(a), np.array(b)
    if np.allclose(a, b):
        return
    diff = abs(bump_b(box, a, cfg.r, cfg.eps) - bump_b(box, b, cfg.r, cfg.eps))
    assert diff <= (1 + cfg.eps) / cfg.r * np.abs(a - b).max() * (1 + 1e-12) + 1e-15


def test_kappa_floor_values():
    assert kappa_floor(1) == pytest.approx(2 * math.sqrt(2), rel=1e-14)
    assert kappa_floor(3) == pytest.approx((2 * 2**1.5 * 36) ** (1 / 3), rel=1e-14)
    assert kappa_floor(3) == pytest.approx(5.8834, abs=1e-4)


def test_kernel_widths():
    w = kernel_widths(8.0, 3)
    assert np.allclose(w, np.sqrt(2.0 ** np.arange(1, 4) / 16.0))


def test_smoothing_matches_bump_deep_inside_and_far_outside(small_partition):
    cfg = small_partition
    for n in (1, 2, 3):
        box = build_boxes(cfg, n)
        sig = kernel_widths(cfg.kappa(n), n)
        deep = box.inner.mean(axis=1)
        deep[n - 1] = -1 + 6 * sig[n - 1] + cfg.r
        deep[: n - 1] = np.clip(deep[: n - 1], box.inner[: n - 1, 0] + 6 * sig[: n - 1] + cfg.r, None)
        assert smoothed_nu(cfg, n, deep) >= 1 + cfg.eps - cfg.eps / 2
        far = deep.copy()
        far[n - 1] = 4 * cfg.r + 6 * sig[n - 1]
        assert smoothed_nu(cfg, n, far) <= cfg.eps / 2


def test_layer_cake_matches_monte_carlo(small_partition):
    cfg = small_partition
    for n, y in [(1, [3.05]), (2, [3.2, 2.9]), (3, [3.5, 5.0, 3.1])]:
        if n > cfg.N:
            continue
        mean, se = nu_monte_carlo(cfg, n, y, samples=200_000, seed=n)
        assert abs(smoothed_nu(cfg, n, y) - mean) <= 4 * se + 1e-12


def test_partition_properties_on_probes(small_partition, rng):
    cfg = small_partition
    X = rng.uniform(-2, 2, (300, 2))
    P = phi_matrix(cfg, X)
    assert P.min() >= 0 and P.max() <= 1 + cfg.eps + 1e-12
    assert np.all(P.max(axis=1) > 1)
    Qm = eval_Q(SF, X[:, None, :] - cfg.points[None])
    far = Qm >= 4 * cfg.r + 0.5
    assert P[far].max(initial=0.0) <= cfg.eps


def test_phi_matrix_agrees_with_pointwise_phi(small_partition, rng):
    cfg = small_partition
    X = rng.uniform(-2, 2, (5, 2))
    P = phi_matrix(cfg, X)
    for k in range(5):
        for n in range(1, cfg.N + 1):
            assert P[k, n - 1] == pytest.approx(phi(cfg, n, X[k]), abs=1e-15)


def test_equi_lipschitz(small_partition, rng):
    cfg = small_partition
    A = rng.uniform(-2, 2, (500, 2))
    D = rng.normal(size=(500, 2)) * 1e-3
    q = np.abs(phi_matrix(cfg, A) - phi_matrix(cfg, A + D)) / np.linalg.norm(D, axis=1)[:, None]
    assert q.max() <= 2 * SF.lipQ / cfg.r


def test_complex_extension_restricts_to_real(small_partition):
    cfg = small_partition
    x = np.array([0.3, -0.4])
    for n in range(1, 4):
        assert phi_complex(cfg, n, x, np.zeros(2)).real == pytest.approx(phi(cfg, n, x), abs=1e-12)


def test_property7_modulus_bound(small_partition, rng):
    cfg = small_partition
    for x in rng.uniform(-2, 2, (10, 2)):
        est = local_strip_estimate(cfg, x)
        rad = property7_radius(cfg, est)
        assert 0 < rad <= est.delta_x
        for _ in range(5):
            d = rng.normal(size=2)
            y = d / np.linalg.norm(d) * rad * rng.uniform(0, 0.999)
            for n in range(1, cfg.N + 1):
                assert abs(phi_complex(cfg, n, x, y, est)) <= 1 + 2 * cfg.eps


def test_decay_bound_beyond_first_hit(small_partition, rng):
    cfg = small_partition
    x = np.array([0.1, 0.1])
    est = local_strip_estimate(cfg, x)
    for n in range(est.n_x + 1, cfg.N + 1):
        y = rng.normal(size=2)
        y *= est.delta_x * 0.9 / np.linalg.norm(y)
        bound = 1 / (math.factorial(n) * est.a_x**n)
        assert abs(phi_complex(cfg, n, x, y, est)) <= bound


def test_config_validation():
    with pytest.raises(ValueError):
        SupPartitionConfig(np.zeros((2, 2)), 0.5, 0.1, SF)
    with pytest.raises(ValueError):
        SupPartitionConfig(np.zeros((2, 2)), 1.0, 1.5, SF)
    with pytest.raises(ValueError):
        bare_config().kappa(1)
    with pytest.raises(IndexError):
        build_boxes(bare_config(N=2), 3)


def test_far_gradient_probe_is_small(small_partition, rng):
    from artifact.suppart import far_gradient_probe

    cfg = small_partition
    X = rng.uniform(-2, 2, (200, 2)) * 4
    norms = far_gradient_probe(cfg, 1, X)
    assert len(norms) > 0
    assert norms.max() <= cfg.eps
