"""Ambient space: Euclidean R^d with a separating polynomial and function.

The default instantiation is Hilbertian: ``q(x) = |x|^(2n)`` with
equivalence constant ``K = 1`` and multilinear-form norm ``|A| = 1``.  For
``n = 1`` this gives ``Q(x) = sqrt(1 + |x|^2) - 1`` with Lipschitz bound 1.

All evaluators accept either a single vector of shape ``(d,)`` or a batch of
shape ``(..., d)`` and reduce over the last axis.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np
from scipy.optimize import minimize_scalar

__all__ = [
    "SpaceConfig",
    "SeparatingPolynomial",
    "SeparatingFunction",
    "StripViolation",
    "default_polynomial",
    "separating_function",
    "eval_q",
    "eval_q_complex",
    "eval_Q",
    "eval_Q_complex",
    "strip_margin",
    "complexification_norm",
    "point_sequence",
    "coverage_radius",
    "q_body_contains",
]


class StripViolation(ValueError):
    """Raised when a complex point leaves the strip where the extension is holomorphic."""


@dataclass(frozen=True)
class SpaceConfig:
    """Working box in R^d and the half-degree ``n`` of the separating polynomial.

    Parameters
    ----------
    dimension
        Ambient dimension ``d >= 1``.
    box
        Sequence of ``d`` closed intervals ``(lo, hi)`` with ``lo < hi``.
    degree
        Half-degree ``n >= 1``; the polynomial is homogeneous of degree ``2n``.
    """

    dimension: int
    box: tuple[tuple[float, float], ...]
    degree: int = 1

    def __post_init__(self) -> None:
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if self.degree < 1:
            raise ValueError("degree must be >= 1")
        box = tuple((float(lo), float(hi)) for lo, hi in self.box)
        if len(box) != self.dimension:
            raise ValueError("box must have one interval per coordinate")
        for lo, hi in box:
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ValueError(f"invalid box interval ({lo}, {hi})")
        object.__setattr__(self, "box", box)

    @classmethod
    def cube(cls, dimension: int, half_width: float, degree: int = 1) -> "SpaceConfig":
        """Symmetric cube ``[-half_width, half_width]^d``."""
        return cls(dimension, tuple((-half_width, half_width) for _ in range(dimension)), degree)

    @property
    def lower(self) -> np.ndarray:
        return np.array([lo for lo, _ in self.box])

    @property
    def upper(self) -> np.ndarray:
        return np.array([hi for _, hi in self.box])

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def to_dict(self) -> dict:
        return {"dimension": self.dimension, "box": [list(b) for b in self.box], "degree": self.degree}

    @classmethod
    def from_dict(cls, data: dict) -> "SpaceConfig":
        return cls(int(data["dimension"]), tuple(tuple(b) for b in data["box"]), int(data.get("degree", 1)))


def _power_of_square_norm(x: np.ndarray, n: int) -> np.ndarray:
    return np.sum(x * x, axis=-1) ** n


@dataclass(frozen=True)
class SeparatingPolynomial:
    """A ``2n``-homogeneous polynomial ``q`` with ``|x|^(2n) <= q(x) <= K |x|^(2n)``.

    ``evaluate`` maps real arrays ``(..., d)`` to ``(...)``; ``evaluate_complex``
    is its complex-bilinear extension on ``(..., d)`` complex arrays.
    """

    degree: int
    evaluate: Callable[[np.ndarray], np.ndarray] = field(compare=False)
    evaluate_complex: Callable[[np.ndarray], np.ndarray] = field(compare=False)
    K: float = 1.0
    normA: float = 1.0

    def __post_init__(self) -> None:
        if self.degree < 1:
            raise ValueError("degree must be >= 1")
        if self.K < 1.0:
            raise ValueError("equivalence constant K must be >= 1")
        if self.normA <= 0.0:
            raise ValueError("normA must be positive")


def default_polynomial(degree: int = 1) -> SeparatingPolynomial:
    """The Hilbertian polynomial ``q(x) = (sum x_j^2)^n`` and its complex extension ``(sum z_j^2)^n``."""
    return SeparatingPolynomial(
        degree=degree,
        evaluate=lambda x: _power_of_square_norm(x, degree),
        evaluate_complex=lambda z: np.sum(z * z, axis=-1) ** degree,
        K=1.0,
        normA=1.0,
    )


@dataclass(frozen=True)
class SeparatingFunction:
    """``Q(x) = (1 + q(x))^(1/2n) - 1`` with a certified Lipschitz bound and strip margin."""

    poly: SeparatingPolynomial
    lipQ: float
    deltaQ: float

    @property
    def degree(self) -> int:
        return self.poly.degree

    def __call__(self, x) -> np.ndarray:
        return eval_Q(self, x)


def _check_finite(x: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(x)):
        raise ValueError("input contains non-finite values")
    return x


def eval_q(poly: SeparatingPolynomial, x) -> np.ndarray | float:
    """Evaluate ``q`` on a vector or a batch of vectors."""
    x = _check_finite(np.asarray(x, dtype=float))
    out = poly.evaluate(x)
    return float(out) if np.ndim(out) == 0 else out


def eval_q_complex(poly: SeparatingPolynomial, z) -> np.ndarray | complex:
    """Evaluate the complex extension of ``q`` on complex input."""
    z = np.asarray(z, dtype=complex)
    if not np.all(np.isfinite(z)):
        raise ValueError("input contains non-finite values")
    out = poly.evaluate_complex(z)
    return complex(out) if np.ndim(out) == 0 else out


def eval_Q(sf: SeparatingFunction, x) -> np.ndarray | float:
    """Evaluate the separating function ``Q`` on a vector or batch of vectors."""
    q = np.asarray(eval_q(sf.poly, x))
    n = sf.degree
    if n == 1:
        # sqrt(1+q) - 1 written without cancellation near zero
        out = q / (np.sqrt(1.0 + q) + 1.0)
    else:
        out = np.expm1(np.log1p(q) / (2 * n))
    return float(out) if out.ndim == 0 else out


def eval_Q_complex(sf: SeparatingFunction, x, y=None) -> np.ndarray | complex:
    """Evaluate the holomorphic extension of ``Q`` at ``x + i y``.

    Parameters
    ----------
    sf
        Separating function.
    x, y
        Real and imaginary parts, shape ``(..., d)``.  If ``y`` is omitted,
        ``x`` is interpreted as a complex array.

    Returns
    -------
    complex or ndarray
        ``(1 + q(z))^(1/2n) - 1`` on the principal branch.

    Raises
    ------
    StripViolation
        If any imaginary part has norm ``>= deltaQ``.
    """
    if y is None:
        z = np.asarray(x, dtype=complex)
        y_arr = z.imag
    else:
        x = np.asarray(x, dtype=float)
        y_arr = np.asarray(y, dtype=float)
        z = x + 1j * y_arr
    ynorm = np.sqrt(np.sum(y_arr * y_arr, axis=-1))
    if np.any(ynorm >= sf.deltaQ):
        raise StripViolation(f"imaginary part norm {np.max(ynorm):.6g} >= strip margin {sf.deltaQ:.6g}")
    w = 1.0 + np.asarray(eval_q_complex(sf.poly, z))
    n = sf.degree
    if n == 1:
        out = np.sqrt(w) - 1.0
        real_axis = np.all(y_arr == 0, axis=-1)
        if np.any(real_axis):
            out = np.where(real_axis, eval_Q(sf, z.real), out)
    else:
        out = np.expm1(np.log(w) / (2 * n))
    return complex(out) if np.ndim(out) == 0 else out


def _alpha_min(degree: int) -> float:
    two_n = 2 * degree

    def objective(t: float) -> float:
        return (0.5 + t**two_n) / (1.0 + abs(t)) ** two_n

    # The objective is even and tends to 1 at infinity; the minimiser lies in (0, 1].
    res = minimize_scalar(objective, bounds=(0.0, 4.0), method="bounded", options={"xatol": 1e-12})
    if not res.success:
        raise RuntimeError(f"strip-margin minimisation failed: {res.message}")
    return float(min(res.fun, objective(0.0), objective(4.0)))


def strip_margin(sf_or_poly: SeparatingFunction | SeparatingPolynomial) -> float:
    """Half of ``min(1, alpha / |A|)`` where ``alpha = min_t (1/2 + t^(2n)) / (1 + |t|)^(2n)``."""
    poly = sf_or_poly.poly if isinstance(sf_or_poly, SeparatingFunction) else sf_or_poly
    alpha = _alpha_min(poly.degree)
    return 0.5 * min(1.0, alpha / poly.normA)


def separating_function(poly: SeparatingPolynomial | None = None) -> SeparatingFunction:
    """Build ``Q`` from ``q``.

    The Lipschitz bound is ``|A|``: along any direction the derivative of ``Q``
    is at most ``|A| (q/(1+q))^((2n-1)/2n) <= |A|`` using ``q >= |x|^(2n)``.
    """
    poly = poly if poly is not None else default_polynomial()
    return SeparatingFunction(poly=poly, lipQ=float(poly.normA), deltaQ=strip_margin(poly))


def complexification_norm(x, y) -> np.ndarray | float:
    """Norm of ``x + i y`` in the complexified Euclidean space.

    This is ``sup_theta |cos(theta) x - sin(theta) y|``, the largest singular
    value of the ``d x 2`` matrix ``[x, y]``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    a = np.sum(x * x, axis=-1)
    b = np.sum(y * y, axis=-1)
    c = np.sum(x * y, axis=-1)
    out = np.sqrt(0.5 * (a + b) + np.hypot(0.5 * (a - b), c))
    return float(out) if out.ndim == 0 else out


def _levels(cfg: SpaceConfig, max_level: int) -> Iterator[np.ndarray]:
    yield cfg.center
    lo, hi = cfg.lower, cfg.upper
    for level in range(1, max_level + 1):
        m = 2**level
        for idx in itertools.product(range(m + 1), repeat=cfg.dimension):
            idx_arr = np.array(idx)
            # points already emitted at a coarser level have all indices even
            if level > 1 and np.all(idx_arr % 2 == 0):
                continue
            if level == 1 and np.all(idx_arr == 1):
                continue
            yield lo + (hi - lo) * idx_arr / m


def point_sequence(cfg: SpaceConfig, N: int, max_level: int = 12) -> np.ndarray:
    """First ``N`` points of a nested dyadic enumeration of the box.

    Level 0 is the box center.  Level ``k >= 1`` adds, in row-major index
    order, the vertices of the uniform grid with ``2^k`` intervals per axis
    that were not produced at coarser levels.  Every prefix ending at a
    complete level is a full uniform grid.

    Returns
    -------
    ndarray of shape ``(N, d)``
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    capacity = (2**max_level + 1) ** cfg.dimension
    if N > capacity:
        raise ValueError(f"N={N} exceeds the {capacity} points available at refinement level {max_level}")
    pts = np.empty((N, cfg.dimension))
    for i, p in enumerate(_levels(cfg, max_level)):
        if i >= N:
            break
        pts[i] = p
    return pts


def coverage_radius(sf: SeparatingFunction, cfg: SpaceConfig, N: int) -> float:
    """Upper bound on ``sup_{x in box} min_j Q(x - x_j)`` for the first ``N`` sequence points.

    Uses the finest complete grid level in the prefix: every box point is within
    half a cell diagonal of a vertex, and ``Q(v) <= lipQ |v|``.  Returns ``inf``
    when the prefix does not yet contain the level-1 grid.
    """
    d = cfg.dimension
    level = 0
    while (2 ** (level + 1) + 1) ** d <= N:
        level += 1
    if level == 0:
        return math.inf
    spacing = (cfg.upper - cfg.lower) / 2**level
    return sf.lipQ * 0.5 * float(np.linalg.norm(spacing))


def q_body_contains(sf: SeparatingFunction, center, r: float, x) -> np.ndarray | bool:
    """Membership ``Q(x - center) < r`` in the open Q-body of radius ``r``."""
    if r <= 0:
        raise ValueError("r must be positive")
    val = np.asarray(eval_Q(sf, np.asarray(x, dtype=float) - np.asarray(center, dtype=float)))
    out = val < r
    return bool(out) if out.ndim == 0 else out
