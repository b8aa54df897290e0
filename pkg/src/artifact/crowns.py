"""From bounded to unbounded functions: dyadic crowns in the level sets of ``Q``.

Crown ``C_1 = {Q <= 4/eps}`` and ``C_n = {2^(n-1)/eps <= Q <= 2^(n+1)/eps}``.
On each crown the function is replaced by a bounded 1-Lipschitz extension,
approximated separately, and the pieces are blended by a partition of unity
``theta_n(Q(x))`` whose bumps get flatter as ``n`` grows, so their Lipschitz
constants sum to at most ``3 eps``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .approx_core import Approximant
from .smoothing import SmoothedPiecewiseLinear
from .space import SeparatingFunction, SpaceConfig, eval_Q

__all__ = [
    "CrownCover",
    "CrownPartition",
    "BoundedExtension",
    "crown_cover",
    "crown_samples",
    "bounded_extension",
    "crown_bump",
    "crown_partition",
    "gaussian_average",
    "assemble_unbounded",
]

ScalarFn = Callable[[np.ndarray], np.ndarray]

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class CrownCover:
    eps: float
    sf: SeparatingFunction
    n_max: int

    def interval(self, n: int) -> tuple[float, float]:
        """``Q``-range of crown ``n`` (crown 1 starts at 0)."""
        if n < 1:
            raise ValueError("crowns are numbered from 1")
        if n == 1:
            return 0.0, 4.0 / self.eps
        return 2.0 ** (n - 1) / self.eps, 2.0 ** (n + 1) / self.eps

    @property
    def boundaries(self) -> list[tuple[float, float]]:
        return [self.interval(n) for n in range(1, self.n_max + 1)]

    def membership(self, X) -> np.ndarray:
        """Boolean ``(P, n_max)``: row ``p`` is in crown ``n`` at column ``n - 1``."""
        q = np.atleast_1d(eval_Q(self.sf, np.atleast_2d(X)))
        cols = [(q >= lo) & (q <= hi) for lo, hi in self.boundaries]
        return np.stack(cols, axis=1)

    def index(self, X) -> np.ndarray:
        """Smallest crown containing each row."""
        return np.argmax(self.membership(X), axis=1) + 1


def _box_qmax(sf: SeparatingFunction, box: SpaceConfig, samples: int, seed: int) -> float:
    corners = np.array(np.meshgrid(*[[lo, hi] for lo, hi in box.box], indexing="ij")).reshape(box.dimension, -1).T
    rng = np.random.default_rng(seed)
    pts = rng.uniform(box.lower, box.upper, (samples, box.dimension))
    return float(max(np.max(eval_Q(sf, corners)), np.max(eval_Q(sf, pts))))


def crown_cover(eps: float, sf: SeparatingFunction, box: SpaceConfig, samples: int = 4096, seed: int = 0) -> CrownCover:
    """Crowns up to the last one meeting ``box``.

    The largest ``Q`` on the box is taken over its corners and a seeded
    sample; crown ``n`` meets the box when ``2^(n-1)/eps`` does not exceed it.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    qmax = _box_qmax(sf, box, samples, seed)
    n_max = 1
    while 2.0**n_max / eps <= qmax:
        n_max += 1
    return CrownCover(eps, sf, n_max)


def crown_samples(cover: CrownCover, n: int, box: SpaceConfig, spacing: float) -> np.ndarray:
    """Grid points of spacing ``spacing`` in ``box`` that lie in crown ``n``."""
    axes = [np.arange(lo, hi + 0.5 * spacing, spacing) for lo, hi in box.box]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, box.dimension)
    lo, hi = cover.interval(n)
    q = eval_Q(cover.sf, pts)
    return pts[(q >= lo) & (q <= hi)]


@dataclass(frozen=True)
class BoundedExtension:
    """``x -> clamp(min_y f(y) + |x - y|, -M, M)`` over a finite sample of a crown."""

    samples: np.ndarray
    values: np.ndarray
    bound: float
    chunk: int = 2048

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.empty(len(X))
        for start in range(0, len(X), self.chunk):
            block = X[start : start + self.chunk]
            dist = np.sqrt(((block[:, None, :] - self.samples[None, :, :]) ** 2).sum(axis=-1))
            out[start : start + self.chunk] = np.min(self.values[None, :] + dist, axis=1)
        return np.clip(out, -self.bound, self.bound)


def bounded_extension(f: ScalarFn, crown: int, cover: CrownCover, sample_set) -> BoundedExtension:
    """Bounded 1-Lipschitz extension of ``f`` restricted to the samples of crown ``crown``."""
    S = np.atleast_2d(np.asarray(sample_set, dtype=float))
    if S.size == 0:
        raise ValueError(f"crown {crown} has no samples")
    vals = np.asarray(f(S), dtype=float)
    return BoundedExtension(S, vals, float(np.max(np.abs(vals))))


def crown_bump(eps: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Breakpoints and values of the piecewise-affine bump for crown ``n``."""
    if n == 1:
        return np.array([-1.0 / eps, 0.0, 2.0 / eps, 4.0 / eps]), np.array([0.0, 1.0, 1.0, 0.0])
    return np.array([2.0 ** (n - 1), 2.0**n, 2.0 ** (n + 1)]) / eps, np.array([0.0, 1.0, 0.0])


@dataclass(frozen=True)
class CrownPartition:
    cover: CrownCover
    bounds: tuple[float, ...]
    kappas: tuple[float, ...]
    smooth: tuple[SmoothedPiecewiseLinear, ...]
    conditions: tuple[dict, ...] = field(default_factory=tuple)

    @property
    def count(self) -> int:
        return len(self.smooth)

    def _falling(self, n: int, t: np.ndarray) -> np.ndarray:
        eps = self.cover.eps
        top, end = (2.0 / eps, 4.0 / eps) if n == 1 else (2.0**n / eps, 2.0 ** (n + 1) / eps)
        return (end - t) / (end - top)

    def raw(self, t) -> np.ndarray:
        """Unsmoothed bumps at ``t``; shape ``(P, count)``.

        The rising side of bump ``n`` is written as one minus the falling side
        of bump ``n - 1``, so the bumps sum to 1 on ``[0, 2^count/eps]``.
        """
        t = np.atleast_1d(np.asarray(t, dtype=float))
        eps = self.cover.eps
        out = np.zeros((len(t), self.count))
        for n in range(1, self.count + 1):
            col = np.zeros(len(t))
            if n == 1:
                left, top, end = -1.0 / eps, 2.0 / eps, 4.0 / eps
                rising = (t > left) & (t < 0.0)
                col[rising] = (t[rising] - left) * eps
                col[(t >= 0.0) & (t <= top)] = 1.0
            else:
                left, peak, end = 2.0 ** (n - 1) / eps, 2.0**n / eps, 2.0 ** (n + 1) / eps
                rising = (t > left) & (t < peak)
                col[rising] = 1.0 - self._falling(n - 1, t[rising])
                top = peak
            falling = (t > top) & (t < end)
            col[falling] = self._falling(n, t[falling])
            if n > 1:
                col[t == top] = 1.0
            out[:, n - 1] = col
        return out

    def __call__(self, t) -> np.ndarray:
        """Smoothed bumps at ``t`` (real or complex); shape ``(P, count)``."""
        t = np.atleast_1d(np.asarray(t))
        return np.stack([s(t) for s in self.smooth], axis=1)

    def derivative(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t))
        return np.stack([s.derivative(t) for s in self.smooth], axis=1)

    def lipschitz(self) -> list[float]:
        return [s.lipschitz for s in self.smooth]

    def lipschitz_ledger(self) -> float:
        """Sum of bump Lipschitz constants, with the dropped crowns' ``eps/2^(n-1)`` added in closed form."""
        return math.fsum(self.lipschitz()) + self.cover.eps / 2.0 ** (self.count - 1)


def _kappa_for(kinks_abs: float, target: float) -> float:
    # condition (1): exp(-kappa) <= target
    k1 = math.log(1.0 / target)
    # condition (2): smoothing error <= sigma * sum|kinks| / sqrt(2 pi) <= target
    sigma = target * _SQRT_2PI / kinks_abs
    k2 = 0.5 / (sigma * sigma)
    # the relative margin absorbs rounding in the kappa -> sigma round trip
    return max(k1, k2, 1.0) * (1.0 + 1e-9)


def crown_partition(cover: CrownCover, bound_seq: Sequence[float]) -> CrownPartition:
    """Smoothed crown bumps with kernel strengths chosen per crown.

    ``kappa_n`` is the smallest value meeting ``exp(-kappa_n) <= t_n`` and
    ``|theta_n - raw_n| <= t_n`` with ``t_n = eps / (2^(n+3) (1 + bound_n))``.
    The second uses the exact bound ``sigma * sum |slope jumps| / sqrt(2 pi)``
    for Gaussian smoothing of a piecewise-affine function.  For the
    derivative closeness condition the achieved gap is recorded: it equals
    half the largest slope jump, because the raw bumps have corners.
    """
    if len(bound_seq) != cover.n_max:
        raise ValueError(f"need {cover.n_max} bounds, got {len(bound_seq)}")
    eps = cover.eps
    smooth, kappas, conds = [], [], []
    for n, bound in enumerate(bound_seq, start=1):
        breaks, values = crown_bump(eps, n)
        raw = SmoothedPiecewiseLinear(breaks, values, 0.0)
        jumps = np.abs(np.diff(raw.slopes))
        target = eps / (2.0 ** (n + 3) * (1.0 + float(bound)))
        kappa = _kappa_for(float(jumps.sum()), target)
        sigma = 1.0 / math.sqrt(2.0 * kappa)
        smooth.append(SmoothedPiecewiseLinear(breaks, values, sigma))
        kappas.append(kappa)
        conds.append(
            {
                "n": n,
                "target": target,
                "exp_minus_kappa": math.exp(-kappa),
                "value_gap_bound": sigma * float(jumps.sum()) / _SQRT_2PI,
                "derivative_gap": 0.5 * float(jumps.max()),
                "derivative_target": target / cover.sf.lipQ,
            }
        )
    return CrownPartition(cover, tuple(float(b) for b in bound_seq), tuple(kappas), tuple(smooth), tuple(conds))


def gaussian_average(fn: ScalarFn, sigma: float, dimension: int, order: int = 2, lip: float = 1.0) -> Approximant:
    """Average of ``fn`` over a tensor Gauss-Hermite stencil of width ``sigma``.

    A convex combination of translates keeps the Lipschitz constant ``lip``
    of ``fn``; the error is at most ``sum_k w_k |offset_k|``, which is the
    claimed bound.
    """
    nodes, weights = np.polynomial.hermite.hermgauss(order)
    nodes = nodes * math.sqrt(2.0) * sigma
    weights = weights / math.sqrt(math.pi)
    grids = np.meshgrid(*([nodes] * dimension), indexing="ij")
    offsets = np.stack([g.ravel() for g in grids], axis=1)
    w = np.prod(np.stack(np.meshgrid(*([weights] * dimension), indexing="ij")).reshape(dimension, -1), axis=0)
    err = float(np.sum(w * np.linalg.norm(offsets, axis=1)))

    def evaluate(X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        shifted = (X[:, None, :] + offsets[None, :, :]).reshape(-1, dimension)
        return (np.asarray(fn(shifted)).reshape(len(X), -1) * w).sum(axis=1)

    return Approximant(evaluate=evaluate, claimed_lip=lip, claimed_sup_error=err, meta={"sigma": sigma, "order": order})


def assemble_unbounded(
    f: ScalarFn,
    components: Sequence[Approximant],
    part: CrownPartition,
    sf: SeparatingFunction,
    certify: Sequence[np.ndarray] | None = None,
    tolerance: float = 1.0,
) -> Approximant:
    """``g(x) = sum_n theta_n(Q(x)) g_n(x)``.

    Parameters
    ----------
    components
        One approximant per crown, each claiming error at most ``tolerance``
        against the crown's extension.
    certify
        Per-crown sample sets on which ``|g_n - f| <= tolerance`` is checked
        before assembly.

    Raises
    ------
    ValueError
        If a component's claim exceeds ``tolerance`` or fails on its samples.
    """
    if len(components) != part.count:
        raise ValueError(f"expected {part.count} components, got {len(components)}")
    certificates = []
    for n, g in enumerate(components, start=1):
        if g.claimed_sup_error > tolerance:
            raise ValueError(f"component {n} claims error {g.claimed_sup_error} > {tolerance}")
        if certify is not None:
            S = np.atleast_2d(certify[n - 1])
            gap = float(np.max(np.abs(g(S) - np.asarray(f(S), dtype=float)))) if len(S) else 0.0
            if gap > tolerance:
                raise ValueError(f"component {n} misses f by {gap:.3g} > {tolerance} on crown samples")
            certificates.append(gap)

    def evaluate(X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        W = part(eval_Q(sf, X))
        out = np.zeros(len(X))
        for n, g in enumerate(components):
            rows = W[:, n] > 0
            if rows.any():
                out[rows] += W[rows, n] * g(X[rows])
        return out

    C = max(float(g.claimed_lip) for g in components)
    return Approximant(
        evaluate=evaluate,
        claimed_lip=C + 4.0 * part.cover.eps * sf.lipQ,
        claimed_sup_error=2.0,
        meta={
            "crowns": part.count,
            "eps": part.cover.eps,
            "kappas": list(part.kappas),
            "component_lip": C,
            "certified_gaps": certificates,
        },
    )
