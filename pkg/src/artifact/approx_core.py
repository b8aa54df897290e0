"""Bounded core approximant built from a sup-partition and the Preiss norm.

Given ``f`` with values in ``[1, B]`` and Lipschitz constant ``L <= 1``, and a
sup-partition ``{phi_j}`` at scale ``r = 1/L``, the approximant is

    g(x) = lambda({f(x_j) phi_j(x)}_j) / lambda({phi_j(x)}_j)

where ``lambda`` is the Preiss norm.  Absolute homogeneity of ``lambda``
makes ``g`` reproduce constants exactly.  Two affine wrappers turn it into
approximants of ``[0, 1]``-valued functions with error ``eta`` and into
``eps``-accurate approximants of arbitrary Lipschitz functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .preiss import PreissSolveConfig, preiss_norm
from .space import SeparatingFunction, SpaceConfig, coverage_radius, point_sequence
from .suppart import SupPartitionConfig, build_partition, phi_matrix

__all__ = [
    "Approximant",
    "CORE_RANGE",
    "CORE_SUP_ERROR",
    "CORE_LIP_FACTOR",
    "approx_bounded_core",
    "approx_unit",
    "covering_partition",
    "rescale",
]

CORE_RANGE = 1001.0
CORE_SUP_ERROR = 8.0
CORE_LIP_FACTOR = 8020012.0

ScalarFn = Callable[[np.ndarray], np.ndarray]


@dataclass
class Approximant:
    """An evaluable scalar function with its claimed bounds.

    ``evaluate`` maps a batch ``(P, d)`` to ``(P,)``.  ``covered`` (optional)
    maps a batch to a boolean mask of points where the construction's
    guarantees apply.  Claimed bounds are never trusted by the harness.
    """

    evaluate: ScalarFn
    claimed_lip: float
    claimed_sup_error: float
    box: SpaceConfig | None = None
    covered: Callable[[np.ndarray], np.ndarray] | None = None
    meta: dict = field(default_factory=dict)

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.asarray(self.evaluate(X), dtype=float)

    def coverage_mask(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.covered is None:
            return np.ones(len(X), dtype=bool)
        return np.asarray(self.covered(X), dtype=bool)


class _CoreEvaluator:
    def __init__(self, part: SupPartitionConfig, values: np.ndarray, solve: PreissSolveConfig):
        self.part = part
        self.values = values
        self.solve = solve
        self._cache_key: bytes | None = None
        self._cache: tuple[np.ndarray, np.ndarray] | None = None

    def _num_den(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        key = X.tobytes()
        if self._cache_key == key and self._cache is not None:
            return self._cache
        Phi = phi_matrix(self.part, X)
        num = np.empty(len(X))
        den = np.empty(len(X))
        for k, row in enumerate(Phi):
            nz = np.nonzero(row)[0]
            if nz.size == 0:
                num[k] = den[k] = 0.0
                continue
            # trailing zeros do not change the norm; leading ones must stay to keep exponents
            tail = nz[-1] + 1
            den[k] = preiss_norm(row[:tail], self.solve)
            num[k] = preiss_norm(self.values[:tail] * row[:tail], self.solve)
        self._cache_key, self._cache = key, (num, den)
        return num, den

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        num, den = self._num_den(X)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(den > 0, num / np.where(den > 0, den, 1.0), np.nan)

    def covered(self, X: np.ndarray) -> np.ndarray:
        _, den = self._num_den(X)
        return den >= 1.0


def approx_bounded_core(
    f: ScalarFn,
    L: float,
    part: SupPartitionConfig,
    B: float = CORE_RANGE,
    solve: PreissSolveConfig | None = None,
    box: SpaceConfig | None = None,
) -> Approximant:
    """Preiss-ratio approximant of an ``L``-Lipschitz ``f`` with values in ``[1, B]``.

    Parameters
    ----------
    f
        Batch evaluator ``(P, d) -> (P,)``.
    L
        Declared Lipschitz constant, ``0 < L <= 1``.
    part
        Sup-partition with ``r <= 1/L``.
    B
        Upper end of the admissible range.

    Returns
    -------
    Approximant
        Claims ``|g - f| <= 8`` and ``Lip(g) <= 8020012 lipQ L`` where the
        denominator is at least 1; ``covered`` reports that region.
    """
    if not 0 < L <= 1:
        raise ValueError("Lipschitz constant must lie in (0, 1]")
    if part.r * L > 1.0 + 1e-12:
        raise ValueError(f"partition scale r={part.r} exceeds 1/L={1 / L}")
    values = np.asarray(f(part.points), dtype=float)
    if np.any(values < 1.0) or np.any(values > B):
        raise ValueError(f"f must take values in [1, {B}] at the partition points")
    ev = _CoreEvaluator(part, values, solve or PreissSolveConfig())
    return Approximant(
        evaluate=ev.evaluate,
        claimed_lip=CORE_LIP_FACTOR * part.sf.lipQ * L,
        claimed_sup_error=CORE_SUP_ERROR,
        box=box,
        covered=ev.covered,
        meta={"N": part.N, "r": part.r, "eps": part.eps, "kappas": list(part.kappas or ())},
    )


def covering_partition(
    sf: SeparatingFunction,
    box: SpaceConfig,
    r: float = 1.0,
    eps: float = 0.1,
    quad_points: int = 16,
    seed: int = 0,
    max_points: int = 200,
) -> SupPartitionConfig:
    """Sup-partition on the smallest complete dyadic grid whose Q-coverage radius is below ``r / 2``."""
    level = 1
    while True:
        n_pts = (2**level + 1) ** box.dimension
        if n_pts > max_points:
            raise ValueError(f"covering the box at scale r={r} needs more than {max_points} points")
        if coverage_radius(sf, box, n_pts) < 0.5 * r:
            break
        level += 1
    return build_partition(point_sequence(box, n_pts), r, eps, sf, quad_points, seed=seed)


def _scaled_box(box: SpaceConfig, factor: float) -> SpaceConfig:
    return SpaceConfig(box.dimension, tuple((lo * factor, hi * factor) for lo, hi in box.box), box.degree)


def approx_unit(
    f: ScalarFn,
    eta: float,
    box: SpaceConfig,
    sf: SeparatingFunction,
    B: float = CORE_RANGE,
    eps: float = 0.1,
    quad_points: int = 16,
    seed: int = 0,
    max_points: int = 200,
) -> Approximant:
    """Approximate a 1-Lipschitz ``f`` into ``[0, 1]`` within ``eta``.

    Applies the core to ``F(x) = 1 + (8/eta) f(eta x / 8)`` on the box scaled
    by ``8/eta`` and returns ``g(x) = (G(8x/eta) - 1) eta / 8``.

    Raises
    ------
    ValueError
        If ``eta < 8 / (B - 1)``; the message reports that floor.
    """
    floor = 8.0 / (B - 1.0)
    if eta < floor:
        raise ValueError(f"eta={eta} is below the representable floor 8/(B-1)={floor}")
    s = 8.0 / eta

    def F(X: np.ndarray) -> np.ndarray:
        return 1.0 + s * np.asarray(f(np.asarray(X) / s), dtype=float)

    big_box = _scaled_box(box, s)
    part = covering_partition(sf, big_box, 1.0, eps, quad_points, seed, max_points)
    core = approx_bounded_core(F, 1.0, part, B, box=big_box)

    def g(X: np.ndarray) -> np.ndarray:
        return (core(np.asarray(X) * s) - 1.0) / s

    return Approximant(
        evaluate=g,
        claimed_lip=core.claimed_lip,
        claimed_sup_error=eta,
        box=box,
        covered=lambda X: core.coverage_mask(np.asarray(X) * s),
        meta={**core.meta, "eta": eta, "scale": s},
    )


def rescale(
    inner: Callable[[ScalarFn, SpaceConfig], Approximant],
    f: ScalarFn,
    L: float,
    eps: float,
    box: SpaceConfig,
) -> Approximant:
    """Transfer an error-2 approximation scheme for 1-Lipschitz functions to ``f``.

    ``inner(F, big_box)`` must approximate ``F(x) = (2/eps) f(eps x / (2L))``
    within 2 on ``big_box``; the result ``g(x) = (eps/2) G(2Lx/eps)`` then has
    ``|g - f| <= eps`` and ``Lip(g) = L Lip(G)``.
    """
    if L <= 0:
        raise ValueError("L must be positive")
    if not 0 < eps <= 2:
        raise ValueError("eps must lie in (0, 2]")
    s = 2.0 * L / eps

    def F(X: np.ndarray) -> np.ndarray:
        return (2.0 / eps) * np.asarray(f(np.asarray(X) / s), dtype=float)

    G = inner(F, _scaled_box(box, s))

    def g(X: np.ndarray) -> np.ndarray:
        return 0.5 * eps * G(np.asarray(X) * s)

    return Approximant(
        evaluate=g,
        claimed_lip=G.claimed_lip * L,
        claimed_sup_error=0.5 * eps * G.claimed_sup_error,
        box=box,
        covered=lambda X: G.coverage_mask(np.asarray(X) * s),
        meta={**G.meta, "rescale_factor": s},
    )
