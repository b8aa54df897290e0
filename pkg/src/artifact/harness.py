"""Test functions, measurement helpers and the experiment runner behind the CLI.

Every pipeline returns a list of :class:`Metric` rows.  A row with a bound
is a check; rows without one are measurements kept for the record.
Measured Lipschitz constants are lower bounds (quotients over finitely many
pairs), so comparing them with claimed upper bounds is a necessary-condition
test, never a proof.

Reports are deterministic: all randomness comes from the configured seed
and wall-clock timings go to a separate ``timings.json``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import crowns as cr
from . import lasrylions as ll
from . import tube as tb
from .approx_core import approx_bounded_core
from .space import SpaceConfig, coverage_radius, eval_Q, point_sequence, separating_function
from .suppart import build_partition, nu_monte_carlo, phi_matrix, smoothed_nu

__all__ = [
    "RegistryFunction",
    "Metric",
    "ExperimentReport",
    "ConfigError",
    "PIPELINES",
    "REGISTRY_NAMES",
    "make_function",
    "empirical_lipschitz",
    "sup_error",
    "run_pipeline",
    "run_experiment",
    "write_outputs",
]

ScalarFn = Callable[[np.ndarray], np.ndarray]


class ConfigError(ValueError):
    """Invalid experiment configuration."""


# ---------------------------------------------------------------------------
# Registry


@dataclass(frozen=True)
class RegistryFunction:
    name: str
    evaluate: ScalarFn = field(compare=False)
    exact_lip: float
    lower: float = -math.inf
    upper: float = math.inf
    notes: str = ""

    def __call__(self, X) -> np.ndarray:
        return self.evaluate(np.atleast_2d(np.asarray(X, dtype=float)))


def _verify_registry(fn: RegistryFunction, dimension: int, seed: int, pairs: int = 2000) -> None:
    rng = np.random.default_rng(seed)
    A = rng.uniform(-3.0, 3.0, (pairs, dimension))
    B = A + rng.normal(size=(pairs, dimension)) * rng.choice([1e-3, 1e-1, 1.0], size=(pairs, 1))
    q = np.abs(fn(A) - fn(B)) / np.linalg.norm(A - B, axis=1)
    if q.max() > fn.exact_lip * (1 + 1e-9):
        raise ConfigError(f"registry function {fn.name} exceeds its Lipschitz constant ({q.max()})")
    vals = np.concatenate([fn(A), fn(B)])
    if vals.min() < fn.lower or vals.max() > fn.upper:
        raise ConfigError(f"registry function {fn.name} leaves its declared range")


def make_function(name: str, dimension: int, params: dict | None = None, seed: int = 0) -> RegistryFunction:
    """Build and sample-check a registry function.

    Names: ``dist_point`` (``point``), ``dist_set`` (``points``),
    ``coord_max``, ``norm``, ``sawtooth`` (period 2 in the first coordinate),
    ``piecewise_affine`` (``pieces``; max of random linear forms, whose
    Lipschitz constant is the largest gradient norm).
    """
    params = dict(params or {})
    if name == "dist_point":
        p = np.asarray(params.pop("point", [0.0] * dimension), dtype=float)
        fn = RegistryFunction(name, lambda X: np.linalg.norm(X - p, axis=1), 1.0, 0.0, notes=f"point={p.tolist()}")
    elif name == "dist_set":
        S = np.atleast_2d(np.asarray(params.pop("points", [[0.0] * dimension, [1.0] * dimension]), dtype=float))
        fn = RegistryFunction(
            name, lambda X: np.min(np.linalg.norm(X[:, None, :] - S[None], axis=2), axis=1), 1.0, 0.0, notes=f"{len(S)} points"
        )
    elif name == "coord_max":
        fn = RegistryFunction(name, lambda X: X.max(axis=1), 1.0)
    elif name == "norm":
        fn = RegistryFunction(name, lambda X: np.linalg.norm(X, axis=1), 1.0, 0.0)
    elif name == "sawtooth":
        fn = RegistryFunction(name, lambda X: np.abs(X[:, 0] - 2.0 * np.round(X[:, 0] / 2.0)), 1.0, 0.0, 1.0)
    elif name == "piecewise_affine":
        k = int(params.pop("pieces", 5))
        G = np.random.default_rng(seed).normal(size=(k, dimension))
        fn = RegistryFunction(
            name, lambda X: (X @ G.T).max(axis=1), float(np.linalg.norm(G, axis=1).max()), notes=f"{k} pieces"
        )
    else:
        raise ConfigError(f"unknown registry function {name!r}; choose from {REGISTRY_NAMES}")
    if params:
        raise ConfigError(f"unknown parameters for {name}: {sorted(params)}")
    _verify_registry(fn, dimension, seed)
    return fn


REGISTRY_NAMES = ("dist_point", "dist_set", "coord_max", "norm", "sawtooth", "piecewise_affine")


# ---------------------------------------------------------------------------
# Measurements


def _grid_axes(region: SpaceConfig, h: float) -> list[np.ndarray]:
    return [np.linspace(lo, hi, max(2, int(round((hi - lo) / h)) + 1)) for lo, hi in region.box]


def _grid(region: SpaceConfig, h: float) -> np.ndarray:
    axes = _grid_axes(region, h)
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, region.dimension)


def empirical_lipschitz(g: ScalarFn, region: SpaceConfig, samples: int = 10000, seed: int = 0) -> float:
    """Largest difference quotient found; a lower bound on ``Lip(g)``.

    Pairs come from three sources: uniform random pairs, short random
    displacements, and steps along a finite-difference gradient estimate.
    Grid-neighbour quotients on a coarse grid are added.
    """
    if samples < 2:
        raise ValueError("need at least 2 samples")
    rng = np.random.default_rng(seed)
    d = region.dimension
    lo, hi = region.lower, region.upper
    width = float(np.min(hi - lo))
    m = max(1, samples // 3)
    A = [rng.uniform(lo, hi, (m, d))]
    B = [rng.uniform(lo, hi, (m, d))]
    base = rng.uniform(lo, hi, (m, d))
    step = rng.normal(size=(m, d))
    step *= (width * 10.0 ** rng.uniform(-4, -1, (m, 1))) / np.linalg.norm(step, axis=1, keepdims=True)
    A.append(base)
    B.append(np.clip(base + step, lo, hi))
    # gradient-direction pairs
    anchor = rng.uniform(lo, hi, (m, d))
    h = 1e-4 * width
    grad = np.stack(
        [(g(np.clip(anchor + h * e, lo, hi)) - g(np.clip(anchor - h * e, lo, hi))) / (2 * h) for e in np.eye(d)], axis=1
    )
    norm = np.linalg.norm(grad, axis=1, keepdims=True)
    direction = np.where(norm > 0, grad / np.where(norm > 0, norm, 1.0), np.eye(d)[0])
    A.append(anchor)
    B.append(np.clip(anchor + 1e-2 * width * direction, lo, hi))
    A, B = np.concatenate(A), np.concatenate(B)
    dist = np.linalg.norm(A - B, axis=1)
    keep = dist > 0
    best = float(np.max(np.abs(g(A[keep]) - g(B[keep])) / dist[keep])) if keep.any() else 0.0
    per_axis = max(2, int(round(samples ** (1.0 / d))))
    axes = _grid_axes(region, width / (per_axis - 1))
    G = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    vals = np.asarray(g(G)).reshape([len(a) for a in axes])
    for axis, a in enumerate(axes):
        diff = np.abs(np.diff(vals, axis=axis)) / (a[1] - a[0])
        best = max(best, float(diff.max()))
    return best


def sup_error(f: ScalarFn, g: ScalarFn, region: SpaceConfig, h: float, chunk: int = 65536) -> float:
    """``max |f - g|`` over the grid of spacing (about) ``h`` covering ``region``."""
    G = _grid(region, h)
    worst = 0.0
    for s in range(0, len(G), chunk):
        block = G[s : s + chunk]
        worst = max(worst, float(np.max(np.abs(np.asarray(f(block)) - np.asarray(g(block))))))
    return worst


# ---------------------------------------------------------------------------
# Reports


@dataclass
class Metric:
    stage: str
    metric: str
    value: float
    bound: float | None = None
    passed: bool | None = None

    def as_row(self) -> dict:
        return {"stage": self.stage, "metric": self.metric, "value": self.value, "bound": self.bound, "pass": self.passed}


def _le(stage: str, metric: str, value: float, bound: float) -> Metric:
    return Metric(stage, metric, float(value), float(bound), bool(value <= bound))


def _ge(stage: str, metric: str, value: float, bound: float) -> Metric:
    return Metric(stage, metric, float(value), float(bound), bool(value >= bound))


def _info(stage: str, metric: str, value: float) -> Metric:
    return Metric(stage, metric, float(value))


@dataclass
class ExperimentReport:
    pipeline: str
    config: dict
    seed: int
    metrics: list[Metric]
    error: str | None = None
    timings: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.error is None and all(m.passed is not False for m in self.metrics)

    def checks(self) -> dict[str, bool]:
        return {f"{m.stage}.{m.metric}": m.passed for m in self.metrics if m.passed is not None}

    def to_dict(self) -> dict:
        return {
            "pipeline": self.pipeline,
            "config": self.config,
            "seed": self.seed,
            "metrics": [m.as_row() for m in self.metrics],
            "checks": self.checks(),
            "passed": self.passed,
            "error": self.error,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["stage", "metric", "value", "bound", "pass"])
        for m in self.metrics:
            writer.writerow(
                [m.stage, m.metric, repr(m.value), "" if m.bound is None else repr(m.bound), "" if m.passed is None else m.passed]
            )
        return buf.getvalue()


# ---------------------------------------------------------------------------
# Pipelines

DEFAULTS: dict[str, dict[str, Any]] = {
    "suppart-check": {
        "dimension": 2,
        "half_width": 5.0,
        "N": 121,
        "r": 1.0,
        "eps": 0.1,
        "quad_points": 16,
        "probes": 2000,
        "lip_pairs": 10000,
        "mc_points": 20,
        "mc_samples": 200000,
    },
    "core-approx": {
        "dimension": 2,
        "half_width": 5.0,
        "N": 121,
        "r": 1.0,
        "eps": 0.1,
        "quad_points": 16,
        "point": [1.3, -0.7],
        "offset": 501.0,
        "constant": 37.5,
        "probes": 2000,
        "lip_pairs": 1000,
    },
    "tube-check": {"eps": 0.5, "N": 5, "samples": 200, "sandwich": 500, "roundtrip": 1000, "injectivity_pairs": 1000},
    "crowns": {
        "eps": 0.25,
        "dimension": 2,
        "half_width": 20.0,
        "function": "dist_point",
        "params": {"point": [1.3, -0.7]},
        "sample_spacing": 0.5,
        "component_sigma": 0.3,
        "probes": 2000,
        "lip_pairs": 3000,
    },
    "lasry-lions": {"half_width": 2.0, "h": 1e-3, "lam": 0.2, "mu": 0.1},
    "hilbert-e2e": {
        "dimension": 2,
        "half_width": 0.5,
        "function": "dist_point",
        "params": {"point": [0.1, -0.2]},
        "eps": 0.1,
        "h": 0.0025,
        "probes": 4000,
        "glue": False,
        "tube_eps": 0.5,
    },
}

PIPELINES = tuple(DEFAULTS)


def _merge(pipeline: str, config: dict) -> dict:
    if pipeline not in DEFAULTS:
        raise ConfigError(f"unknown pipeline {pipeline!r}; choose from {PIPELINES}")
    merged = dict(DEFAULTS[pipeline])
    unknown = set(config) - set(merged) - {"pipeline", "seed"}
    if unknown:
        raise ConfigError(f"unknown keys for {pipeline}: {sorted(unknown)}")
    for k, v in config.items():
        if k in ("pipeline", "seed"):
            continue
        default = merged[k]
        if isinstance(default, bool) and not isinstance(v, bool):
            raise ConfigError(f"{k} must be a boolean")
        if isinstance(default, (int, float)) and not isinstance(default, bool):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(f"{k} must be a number")
        merged[k] = v
    return merged


_PARTITION_CACHE: dict = {}


def cached_partition(dimension: int, half_width: float, N: int, r: float, eps: float, quad_points: int, seed: int):
    """Build (or reuse) the sup-partition on the first ``N`` points of the dyadic sequence."""
    key = (dimension, half_width, N, r, eps, quad_points, seed)
    if key not in _PARTITION_CACHE:
        sf = separating_function()
        box = SpaceConfig.cube(dimension, half_width)
        _PARTITION_CACHE[key] = build_partition(point_sequence(box, N), r, eps, sf, quad_points, seed=seed)
    return _PARTITION_CACHE[key]


def _suppart_check(c: dict, seed: int) -> list[Metric]:
    st = "suppart"
    part = cached_partition(c["dimension"], c["half_width"], c["N"], c["r"], c["eps"], c["quad_points"], seed)
    sf, box, eps, r = part.sf, SpaceConfig.cube(c["dimension"], c["half_width"]), c["eps"], c["r"]
    rng = np.random.default_rng(seed)
    X = rng.uniform(box.lower, box.upper, (c["probes"], box.dimension))
    P = phi_matrix(part, X)
    Qm = np.asarray(eval_Q(sf, X[:, None, :] - part.points[None])).reshape(len(X), part.N)
    covered = Qm.min(axis=1) < r
    out = [
        _info(st, "kappa_max", max(part.kappas)),
        _info(st, "coverage_radius", coverage_radius(sf, box, part.N)),
        _info(st, "covered_fraction", covered.mean()),
        _ge(st, "min_phi", P.min(), 0.0),
        _le(st, "max_phi", P.max(), 1.0 + eps),
        _ge(st, "hit_fraction", float((P[covered] > 1.0).any(axis=1).mean()), 1.0),
    ]
    far = Qm >= 4.0 * r
    out.append(_le(st, "decay_outside_4r", float(P[far].max()) if far.any() else 0.0, 0.101))
    m = c["lip_pairs"]
    A = rng.uniform(box.lower, box.upper, (m, box.dimension))
    D = rng.normal(size=(m, box.dimension))
    D *= 10.0 ** rng.uniform(-6, 0, (m, 1)) / np.linalg.norm(D, axis=1, keepdims=True)
    quot = np.abs(phi_matrix(part, A) - phi_matrix(part, A + D)) / np.linalg.norm(D, axis=1)[:, None]
    out.append(_le(st, "equi_lipschitz", float(quot.max()), 2.0 * sf.lipQ / r * 1.05))
    # Monte Carlo cross-check at intermediate values
    ks, ns = np.nonzero((P > 0.05) & (P < 1.0))
    picks = np.linspace(0, len(ks) - 1, min(c["mc_points"], len(ks))).astype(int) if len(ks) else []
    worst = 0.0
    for j, i in enumerate(picks):
        k, n = ks[i], ns[i] + 1
        y = Qm[k, :n]
        mean, se = nu_monte_carlo(part, n, y, c["mc_samples"], seed + 1000 + j)
        worst = max(worst, abs(smoothed_nu(part, n, y) - mean) / max(se, 1e-12))
    out.append(_le(st, "monte_carlo_sigmas", worst, 3.0))
    out.append(_info(st, "monte_carlo_points", len(picks)))
    return out


def _core_approx(c: dict, seed: int) -> list[Metric]:
    st = "core"
    part = cached_partition(c["dimension"], c["half_width"], c["N"], c["r"], c["eps"], c["quad_points"], seed)
    box = SpaceConfig.cube(c["dimension"], c["half_width"])
    p = np.asarray(c["point"], dtype=float)
    offset = float(c["offset"])

    def f(X):
        return np.clip(offset + np.linalg.norm(np.atleast_2d(X) - p, axis=1), 1.0, 1001.0)

    g = approx_bounded_core(f, 1.0 / c["r"], part, box=box)
    rng = np.random.default_rng(seed)
    X = rng.uniform(box.lower, box.upper, (c["probes"], box.dimension))
    cov = g.coverage_mask(X)
    err = np.abs(g(X) - f(X))[cov]
    const = approx_bounded_core(lambda X: np.full(len(np.atleast_2d(X)), c["constant"]), 1.0, part, box=box)
    cerr = float(np.max(np.abs(const(X[:200]) - c["constant"])))
    lip = empirical_lipschitz(g, box, c["lip_pairs"], seed)
    return [
        _info(st, "covered_fraction", cov.mean()),
        _le(st, "sup_error", float(err.max()), g.claimed_sup_error),
        _le(st, "constant_reproduction", cerr, 1e-9),
        _le(st, "empirical_lip", lip, g.claimed_lip),
    ]


def _tube_check(c: dict, seed: int) -> list[Metric]:
    st = "tube"
    cfg = tb.TubeMapConfig(c["eps"], c["N"])
    N, r, eps = cfg.N, cfg.r, cfg.eps
    rng = np.random.default_rng(seed)
    out = [_info(st, "r", r), _info(st, "delta", cfg.delta), _info(st, "kappa", cfg.kappa)]

    # exact corner round trip on [0, 2] x [-1/8, 1/8]
    pts = np.column_stack([rng.uniform(0, 2, c["roundtrip"]), rng.uniform(-0.125, 0.125, c["roundtrip"])])
    rt = max(float(np.abs(tb.corner_F_inv(tb.corner_F(p)) - p).max()) for p in pts)
    out.append(_le(st, "corner_roundtrip", rt, 1e-12))

    # readout accuracy and derivative near the path
    n = c["samples"]
    ts = rng.uniform(0, N, n)
    U = np.stack([tb.beta(t, N) for t in ts]) + rng.uniform(-1, 1, (n, cfg.dim)) * 0.5 * r * (1 - 1e-9)
    H = tb.tube_H(cfg, U, strict=False)
    out.append(_le(st, "readout_error", float(np.nanmax(np.abs(H - ts))) if np.all(np.isfinite(H)) else math.inf, eps))
    grad = tb.tube_H_gradient(cfg, U)
    out.append(_le(st, "readout_derivative", float(np.abs(grad).sum(axis=1).max()), (1 + eps) * 1.05))

    # sandwich membership
    m = c["sandwich"]
    ts = rng.uniform(0, N, m)
    inner = np.stack([tb.beta(t, N) for t in ts]) + rng.uniform(-1, 1, (m, cfg.dim)) * 0.5 * r * (1 - 1e-9)
    inside = tb.tube_G_inverse(cfg, inner).inside
    out.append(_ge(st, "inner_points_inside", int(inside.sum()), m))
    outer = []
    while len(outer) < m:
        t = rng.uniform(0, N)
        u = tb.beta(t, N) + rng.uniform(-6, 6, cfg.dim) * r
        if tb.path_distance(u[None], N)[0][0] > 2 * r:
            outer.append(u)
    flagged = ~tb.tube_G_inverse(cfg, np.array(outer)).inside
    out.append(_ge(st, "outer_points_outside", int(flagged.sum()), m))

    # bent map: derivative bound and injectivity on the straight tube
    k = c["injectivity_pairs"]
    Xa = np.column_stack([rng.uniform(-r, N + r, k) * (1 - 1e-9), rng.uniform(-r, r, (k, cfg.dim - 1)) * (1 - 1e-9)])
    J = tb.tube_G_jacobian(cfg, Xa)
    out.append(_le(st, "bent_map_derivative", float(np.abs(J).sum(axis=2).max()), 2 + eps))
    Xb = Xa + rng.uniform(-1, 1, Xa.shape) * r
    Xb[:, 1:] = np.clip(Xb[:, 1:], -r * (1 - 1e-9), r * (1 - 1e-9))
    Xb[:, 0] = np.clip(Xb[:, 0], -r * (1 - 1e-9), (N + r) * (1 - 1e-9))
    sep = np.abs(Xa - Xb).max(axis=1) >= r / 4
    gap = np.abs(tb.tube_G(cfg, Xa) - tb.tube_G(cfg, Xb)).max(axis=1)[sep]
    out.append(_info(st, "injectivity_pairs", int(sep.sum())))
    out.append(_ge(st, "injectivity_margin", float(gap.min()) if gap.size else math.inf, 1e-12))

    # staircase
    st_ = cfg.staircase
    tt = rng.uniform(0, N, 5000)
    out.append(_le(st, "staircase_deviation", float(np.abs(st_(tt) - tt).max()), 3 * st_.eps))
    near = np.round(tt) + rng.uniform(-1.5, 1.5, 5000) * st_.eps
    out.append(_le(st, "staircase_flat_slope", float(np.abs(st_.derivative(near)).max()), st_.eps / 4))

    # holomorphic extension spot checks
    spot = tb.complex_spot_check(cfg, 50, seed)
    out.append(_le(st, "complex_G_deviation", spot["G_strip_deviation"], eps))
    out.append(_le(st, "complex_H_ratio", spot["H_ratio_max"], 1.0))
    out.append(_ge(st, "complex_inverse_converged", spot["complex_inverse_converged"], spot["samples"]))
    return out


def _crowns(c: dict, seed: int) -> list[Metric]:
    st = "crowns"
    eps, d = c["eps"], c["dimension"]
    sf = separating_function()
    box = SpaceConfig.cube(d, c["half_width"])
    f = make_function(c["function"], d, c["params"], seed)
    cover = cr.crown_cover(eps, sf, box, seed=seed)
    samples = [cr.crown_samples(cover, n, box, c["sample_spacing"]) for n in range(1, cover.n_max + 1)]
    exts = [cr.bounded_extension(f, n, cover, s) for n, s in zip(range(1, cover.n_max + 1), samples)]
    comps = [cr.gaussian_average(e, c["component_sigma"], d) for e in exts]
    part = cr.crown_partition(cover, [e.bound + comps[0].claimed_sup_error for e in exts])
    rng = np.random.default_rng(seed)
    t = rng.uniform(0, 2.0**cover.n_max / eps, 20000)
    raw = part.raw(t)
    out = [
        _info(st, "crowns", cover.n_max),
        _le(st, "raw_partition_defect", float(np.abs(raw.sum(axis=1) - 1.0).max()), 0.0),
        _le(st, "lipschitz_ledger", part.lipschitz_ledger(), 3 * eps),
    ]
    for cond in part.conditions:
        n = cond["n"]
        out.append(_le(st, f"kappa{n}_exp", cond["exp_minus_kappa"], cond["target"]))
        out.append(_le(st, f"kappa{n}_value_gap", cond["value_gap_bound"], cond["target"]))
        out.append(_info(st, f"kappa{n}_derivative_gap", cond["derivative_gap"]))
    smooth = part(t)
    measured = np.abs(smooth - raw).max(axis=0)
    for n, cond in enumerate(part.conditions, start=1):
        out.append(_le(st, f"theta{n}_measured_gap", float(measured[n - 1]), cond["target"]))
    out.append(_le(st, "max_terms_active", int((smooth > 1e-9).sum(axis=1).max()), 3))
    g = cr.assemble_unbounded(f, comps, part, sf, certify=samples)
    X = rng.uniform(box.lower, box.upper, (c["probes"], d))
    out.append(_info(st, "component_error_claim", comps[0].claimed_sup_error))
    out.append(_le(st, "sup_error", float(np.abs(g(X) - f(X)).max()), 2.0))
    out.append(_le(st, "empirical_lip", empirical_lipschitz(g, box, c["lip_pairs"], seed), g.claimed_lip))
    return out


def _lasry_lions(c: dict, seed: int) -> list[Metric]:
    st = "lasry_lions"
    hw, h = c["half_width"], c["h"]
    box = SpaceConfig.cube(1, hw)
    grid = ll.GridFunction.sample(lambda X: np.abs(X[:, 0]), box, h)
    lam, mu = c["lam"], c["mu"]
    params = ll.LasryParams(lam, mu)
    inf = ll.moreau_inf(grid, lam)
    g = ll.moreau_sup(inf, mu)
    x = grid.axes[0]
    # quadratic-cost brute force over all node pairs
    brute = np.empty_like(x)
    for s in range(0, len(x), 1024):
        blk = x[s : s + 1024]
        brute[s : s + 1024] = np.min(grid.values[None, :] + (blk[:, None] - x[None, :]) ** 2 / (2 * lam), axis=1)

    def at(v):
        return float(inf.values[int(round((v - x[0]) / h))])

    lo, hi = ll.second_differences(g)
    return [
        _le(st, "brute_force_gap", float(np.abs(brute - inf.values).max()), 1e-12),
        _le(st, "huber_at_0.1", abs(at(0.1) - 0.025), 1e-9),
        _le(st, "huber_at_1", abs(at(1.0) - 0.9), 1e-9),
        _le(st, "grid_lip", ll.grid_lipschitz(g), 1 + 1e-9),
        _le(st, "second_difference_max", max(abs(lo), abs(hi)), params.curvature_bound * (1 + 1e-3)),
    ]


def _hilbert_e2e(c: dict, seed: int) -> list[Metric]:
    st = "hilbert"
    d, eps, h = c["dimension"], c["eps"], c["h"]
    box = SpaceConfig.cube(d, c["half_width"])
    f = make_function(c["function"], d, c["params"], seed)
    hook = tb.slab_gluing_hook(c["tube_eps"], f.exact_lip) if c["glue"] else None
    g = ll.hilbert_pipeline(f, f.exact_lip, eps, box, h, hook=hook)
    grid = g.meta["grid"]
    out = []
    sup_bound = g.claimed_sup_error
    if not c["glue"]:
        out.append(_le(st, "grid_sup_error", float(np.abs(grid.values - f(grid.points()).reshape(grid.values.shape)).max()), eps))
        out.append(_le(st, "grid_lip", ll.grid_lipschitz(grid), f.exact_lip + eps))
        lo, hi = ll.second_differences(grid)
        bound = ll.LasryParams(g.meta["lambda"], g.meta["mu"]).curvature_bound
        out.append(_le(st, "second_difference_max", max(abs(lo), abs(hi)), bound * (1 + 1e-3)))
    rng = np.random.default_rng(seed)
    X = rng.uniform(box.lower, box.upper, (c["probes"], d))
    vals = g(X)
    cov = g.coverage_mask(X)
    out.append(_ge(st, "covered_fraction", float(cov.mean()), 1.0))
    out.append(_le(st, "probe_sup_error", float(np.nanmax(np.abs(vals - f(X)))), sup_bound))
    lip = empirical_lipschitz(g, box, 3000 if c["glue"] else 10000, seed)
    lip_bound = (1 + c["tube_eps"]) ** 2 * f.exact_lip * 1.05 if c["glue"] else f.exact_lip + eps
    out.append(_le(st, "empirical_lip", lip, lip_bound))
    return out


_RUNNERS: dict[str, Callable[[dict, int], list[Metric]]] = {
    "suppart-check": _suppart_check,
    "core-approx": _core_approx,
    "tube-check": _tube_check,
    "crowns": _crowns,
    "lasry-lions": _lasry_lions,
    "hilbert-e2e": _hilbert_e2e,
}


def run_pipeline(pipeline: str, config: dict | None = None, seed: int | None = None) -> ExperimentReport:
    """Run one pipeline; configuration errors raise, precondition failures are recorded."""
    config = dict(config or {})
    if seed is None:
        seed = int(config.get("seed", 0))
    if not 0 <= seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    merged = _merge(pipeline, config)
    t0 = time.perf_counter()
    try:
        metrics = _RUNNERS[pipeline](merged, seed)
        error = None
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        metrics, error = [], f"{type(exc).__name__}: {exc}"
    return ExperimentReport(pipeline, merged, seed, metrics, error, {"total_seconds": time.perf_counter() - t0})


def write_outputs(report: ExperimentReport, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "metrics.csv").write_text(report.to_csv())
    (out / "report.json").write_text(report.to_json() + "\n")
    (out / "timings.json").write_text(json.dumps(report.timings, indent=2, sort_keys=True) + "\n")
    return out


def run_experiment(config_path: str | Path, out_dir: str | Path | None = None, seed: int | None = None) -> ExperimentReport:
    """Load a JSON config naming a ``pipeline``, run it and write ``metrics.csv`` and ``report.json``."""
    try:
        config = json.loads(Path(config_path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(config, dict) or "pipeline" not in config:
        raise ConfigError("config must be a JSON object with a 'pipeline' key")
    report = run_pipeline(config["pipeline"], config, seed)
    if out_dir is not None:
        write_outputs(report, out_dir)
    return report
