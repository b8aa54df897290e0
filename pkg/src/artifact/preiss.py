"""The Preiss norm on finite sequences and its complex continuation.

For a finite real sequence ``x = (x_1, ..., x_m)`` (padded with zeros in
``c_0``) define ``C(x) = sum_j x_j^(2j)``.  The Preiss norm ``lambda(x)`` is
the Minkowski functional of ``{C <= 1}``, i.e. the unique ``lambda > 0`` with
``C(x / lambda) = 1``.  It satisfies ``|x|_inf <= lambda(x) <= 2 |x|_inf``.

The complex continuation solves ``sum_j (z_j / mu)^(2j) = 1`` by Newton's
method started at the real norm of ``Re z``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "PreissSolveConfig",
    "PreissConvergenceError",
    "preiss_C",
    "preiss_norm",
    "preiss_norm_complex",
    "empirical_radius",
]


class PreissConvergenceError(RuntimeError):
    """Raised when a Preiss root solve does not reach the residual tolerance."""


@dataclass(frozen=True)
class PreissSolveConfig:
    abs_tol: float = 1e-12
    max_iter: int = 200

    def __post_init__(self) -> None:
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


_DEFAULT = PreissSolveConfig()


def _as_seq(x: Sequence[float]) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("expected a non-empty one-dimensional sequence")
    if not np.all(np.isfinite(arr)):
        raise ValueError("sequence contains non-finite values")
    return arr


def preiss_C(x: Sequence[float]) -> float:
    """``sum_j x_j^(2j)`` (``j`` from 1) with compensated summation.

    Raises
    ------
    OverflowError
        If a term overflows; rescale the sequence first.
    """
    arr = _as_seq(x)
    exps = np.arange(2, 2 * arr.size + 1, 2)
    with np.errstate(over="ignore"):
        terms = np.abs(arr) ** exps
    if not np.all(np.isfinite(terms)):
        raise OverflowError("term of C overflows; rescale the input")
    return math.fsum(terms)


def _residual_and_slope(y: np.ndarray, exps: np.ndarray, s: float) -> tuple[float, float]:
    # f(s) = C(y/s) - 1 and f'(s) = -sum 2j (y_j/s)^(2j) / s
    terms = (y / s) ** exps
    return math.fsum(terms) - 1.0, -math.fsum(exps * terms) / s


def preiss_norm(x: Sequence[float], cfg: PreissSolveConfig = _DEFAULT) -> float:
    """Solve ``C(x / lambda) = 1`` for ``lambda``; returns 0 for the zero sequence.

    The input is normalised by ``|x|_inf`` so the root lies in ``[1, 2]``,
    where ``s -> C(y/s)`` is strictly decreasing.  Newton steps are taken
    inside a shrinking bisection bracket and replaced by bisection whenever
    they leave it.
    """
    arr = _as_seq(x)
    m = float(np.max(np.abs(arr)))
    if m == 0.0:
        return 0.0
    y = np.abs(arr) / m
    exps = np.arange(2, 2 * y.size + 1, 2)
    lo, hi = 1.0, 2.0
    s = 1.0
    f, df = _residual_and_slope(y, exps, s)
    if f <= cfg.abs_tol:
        return m * s
    for _ in range(cfg.max_iter):
        if f > 0:
            lo = s
        else:
            hi = s
        step = f / df if df != 0 else math.inf
        cand = s - step
        if not (lo < cand < hi):
            cand = 0.5 * (lo + hi)
        if cand == s:
            break
        s = cand
        f, df = _residual_and_slope(y, exps, s)
        if abs(f) <= cfg.abs_tol and abs(step) <= 4 * np.finfo(float).eps * s:
            return m * s
        if hi - lo <= 4 * np.finfo(float).eps * s:
            break
    if abs(f) <= cfg.abs_tol:
        return m * s
    raise PreissConvergenceError(f"residual {f:.3e} after {cfg.max_iter} iterations")


def preiss_norm_complex(
    z: Sequence[complex],
    mu0: float | None = None,
    cfg: PreissSolveConfig = _DEFAULT,
    max_drift: float = 0.5,
) -> complex:
    """Complex Newton solve of ``sum_j (z_j / mu)^(2j) = 1`` started at ``mu0``.

    Parameters
    ----------
    z
        Complex sequence.
    mu0
        Starting value; defaults to the real Preiss norm of ``Re z``.
    cfg
        Tolerance and iteration cap.
    max_drift
        Newton iterates farther than ``max_drift * mu0`` from the start are
        treated as having left the neighbourhood of the real branch.

    Raises
    ------
    PreissConvergenceError
        On non-convergence or drift; no damping or restart is attempted.
    """
    arr = np.atleast_1d(np.asarray(z, dtype=complex))
    if arr.ndim != 1 or arr.size == 0 or not np.all(np.isfinite(arr)):
        raise ValueError("expected a finite non-empty one-dimensional complex sequence")
    if mu0 is None:
        mu0 = preiss_norm(arr.real, cfg)
    if mu0 <= 0:
        raise ValueError("mu0 must be positive")
    exps = np.arange(2, 2 * arr.size + 1, 2)
    mu = complex(mu0)
    for _ in range(cfg.max_iter):
        terms = (arr / mu) ** exps
        psi = complex(math.fsum(terms.real), math.fsum(terms.imag)) - 1.0
        if not np.isfinite(psi):
            break
        if abs(psi) <= cfg.abs_tol:
            return mu
        slope = -np.sum(exps * terms) / mu
        if slope == 0:
            break
        mu = mu - psi / slope
        if not np.isfinite(mu) or abs(mu - mu0) > max_drift * mu0:
            break
    raise PreissConvergenceError(f"complex Newton did not converge from mu0={mu0:.6g} (last mu={mu})")


def empirical_radius(
    x: Sequence[float],
    directions: np.ndarray,
    radii: Sequence[float],
    cfg: PreissSolveConfig = _DEFAULT,
) -> float:
    """Largest radius ``s`` in the increasing list ``radii`` such that the complex
    solve converges at ``x + i t |x|_inf v`` for every direction ``v`` and every
    listed ``t <= s``.  Returns 0 if even the smallest radius fails.
    """
    base = _as_seq(x)
    scale = float(np.max(np.abs(base)))
    mu0 = preiss_norm(base, cfg)
    best = 0.0
    for t in sorted(radii):
        try:
            for v in np.atleast_2d(directions):
                preiss_norm_complex(base + 1j * t * scale * v, mu0, cfg)
        except PreissConvergenceError:
            break
        best = t
    return best
