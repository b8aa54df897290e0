import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from artifact.approx_core import Approximant
from artifact.space import SpaceConfig
from artifact.tube import (
    OutsideTubeError,
    Staircase,
    TubeMapConfig,
    beta,
    beta_inverse,
    complex_spot_check,
    corner_F,
    corner_F_inv,
    glue_bounded,
    in_straight_tube,
    path_distance,
    slab_decompose,
    tube_G,
    tube_G_inverse,
    tube_G_jacobian,
    tube_H,
    tube_H_gradient,
)

CFG = TubeMapConfig(0.5, 5)


def test_path_points():
    assert beta(2.5, 3).tolist() == [1.0, 1.0, 0.5, 0.0, 0.0]
    assert beta_inverse([1.0, 1.0, 0.0, 0.0, 0.0]) == 2.0
    with pytest.raises(ValueError):
        beta_inverse([0.5, 0.5, 0.0])


@given(st.floats(0, 6), st.floats(0, 6))
def test_path_is_one_lipschitz(t, s):
    assert np.abs(beta(t, 6) - beta(s, 6)).max() <= abs(t - s) + 1e-15


def test_slab_reconstruction(rng):
    f = lambda X: 4.0 * np.abs(np.sin(X[:, 0]))
    slabs = slab_decompose(f, 4)
    X = rng.uniform(-3, 3, (200, 1))
    S = slabs(X)
    assert S.min() >= 0 and S.max() <= 1
    rebuilt = [beta_inverse(np.concatenate([row, [0, 0]]), 4) for row in S]
    assert np.allclose(rebuilt, f(X), atol=1e-12)
    assert np.allclose(slabs.component(2)(X), S[:, 1])


def test_path_inverse_is_not_lipschitz_near_corners():
    # nearest-point readout near the first corner: two points eta apart read off
    # parameters about 2s apart, so the quotient grows without bound as eta -> 0
    s = 1e-2
    ratios = []
    for eta in [1e-4, 1e-6, 1e-8]:
        u1 = np.array([1.0 - s, s - eta, 0.0])
        u2 = np.array([1.0 - s + eta, s, 0.0])
        t = path_distance(np.stack([u1, u2]), 3)[1]
        ratios.append(abs(t[0] - t[1]) / np.abs(u1 - u2).max())
    assert ratios[0] > 100
    assert ratios[-1] > 1e5
    assert ratios == sorted(ratios)


@pytest.mark.parametrize("p", [(0.5, 0.1), (1.5, 0.1), (0.2, -0.12), (1.9, 0.0), (1.0, 0.05)])
def test_corner_round_trip(p):
    assert np.allclose(corner_F_inv(corner_F(p)), p, atol=1e-12)


def test_corner_values():
    assert np.allclose(corner_F((0.5, 0.1)), (0.45, 0.1))
    assert np.allclose(corner_F((1.5, 0.1)), (0.9, 0.55))


def test_corner_derivative_bounds(rng):
    r = 0.125
    worst_fwd = worst_inv = 0.0
    for _ in range(400):
        p = np.array([rng.uniform(0.01, 1.99), rng.uniform(-r, r)])
        J = np.empty((2, 2))
        for k in range(2):
            e = np.zeros(2)
            e[k] = 1e-7
            J[:, k] = (corner_F(p + e) - corner_F(p - e)) / 2e-7
        worst_fwd = max(worst_fwd, np.linalg.norm(J, 2))
        worst_inv = max(worst_inv, np.linalg.norm(np.linalg.inv(J), 2))
    assert worst_fwd <= 2 + r
    assert worst_inv <= 2 / (1 - r) ** 2


def test_staircase_properties():
    st_ = Staircase(0.0625, 1 / (2 * (0.0625 / 16) ** 2), top=8)
    t = np.linspace(0, 6, 20001)
    assert np.max(np.abs(st_(t) - t)) <= 3 * st_.eps
    flat = np.concatenate([n + np.linspace(-1.5, 1.5, 41) * st_.eps for n in range(1, 6)])
    assert np.max(np.abs(st_.derivative(flat))) <= st_.eps / 4
    assert np.all(st_.derivative(t) >= 0)


def test_config_validation():
    with pytest.raises(ValueError):
        TubeMapConfig(0.5, 5, r=0.01)
    with pytest.raises(ValueError):
        TubeMapConfig(1.5, 5)
    assert CFG.r < CFG.eps / 64 and CFG.delta < CFG.eps / 64


def test_identity_region():
    x = np.zeros(CFG.dim)
    x[0] = 0.3
    x[1:] = 0.2 * CFG.r
    assert np.allclose(tube_G(CFG, x), x, atol=1e-12)


def test_straight_input_follows_path(rng):
    for t in rng.uniform(0, CFG.N, 200):
        if abs(t - round(t)) < 2 * CFG.eps:
            continue
        x = np.zeros(CFG.dim)
        x[0] = t
        assert np.abs(tube_G(CFG, x) - beta(t, CFG.N)).max() <= CFG.eps / 5


def test_jacobian_matches_finite_differences(rng):
    X = np.column_stack([rng.uniform(-CFG.r, CFG.N, 20), rng.uniform(-CFG.r, CFG.r, (20, CFG.dim - 1)) * 0.9])
    J = tube_G_jacobian(CFG, X)
    h = 1e-7
    for k in range(CFG.dim):
        e = np.zeros(CFG.dim)
        e[k] = h
        fd = (tube_G(CFG, X + e, check_domain=False) - tube_G(CFG, X - e, check_domain=False)) / (2 * h)
        assert np.max(np.abs(fd - J[:, :, k])) < 1e-5
    assert np.abs(J).sum(axis=2).max() <= 2 + CFG.eps


def test_inverse_round_trip(rng):
    X = np.column_stack([rng.uniform(-CFG.r, CFG.N + CFG.r, 100), rng.uniform(-CFG.r, CFG.r, (100, CFG.dim - 1))]) * 0.999
    inv = tube_G_inverse(CFG, tube_G(CFG, X))
    assert inv.converged.all()
    assert np.max(np.abs(inv.x - X)) < 1e-9
    assert in_straight_tube(CFG, X).all()


def test_readout_near_path(rng):
    ts = rng.uniform(0, CFG.N, 60)
    U = np.stack([beta(t, CFG.N) for t in ts]) + rng.uniform(-1, 1, (60, CFG.dim)) * 0.5 * CFG.r * 0.999
    assert np.max(np.abs(tube_H(CFG, U) - ts)) <= CFG.eps
    grad = tube_H_gradient(CFG, U)
    assert np.abs(grad).sum(axis=1).max() <= (1 + CFG.eps) * 1.05


def test_readout_at_integers():
    for m in range(CFG.N + 1):
        assert abs(tube_H(CFG, beta(float(m), CFG.N)) - m) <= CFG.eps


def test_far_points_are_rejected():
    u = beta(2.5, CFG.N)
    u[-1] += 10 * CFG.r
    with pytest.raises(OutsideTubeError):
        tube_H(CFG, u)
    assert np.isnan(tube_H(CFG, u, strict=False))


def test_complex_extension_spot_check():
    spot = complex_spot_check(CFG, 20, 0)
    assert spot["G_strip_deviation"] <= CFG.eps
    assert spot["H_ratio_max"] <= 1.0
    assert spot["complex_inverse_converged"] == 20


def test_gluing_exact_slabs(rng):
    box = SpaceConfig.cube(1, 1.0)
    f = lambda X: 1.5 + 1.2 * np.sin(2 * X[:, 0])
    N = 3
    slabs = slab_decompose(f, N)
    comps = [Approximant(slabs.component(n), 2.4, 0.0, box) for n in range(1, N + 1)]
    cfg = TubeMapConfig(0.5, N)
    g = glue_bounded(comps, cfg)
    X = rng.uniform(-1, 1, (300, 1))
    assert g.coverage_mask(X).all()
    assert np.max(np.abs(g(X) - f(X))) <= cfg.eps


def test_gluing_rejects_wrong_component_count():
    with pytest.raises(ValueError):
        glue_bounded([], CFG)
