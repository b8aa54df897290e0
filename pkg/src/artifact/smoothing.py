"""Closed-form Gaussian smoothing of continuous piecewise-linear functions.

A continuous piecewise-linear function with breakpoints ``p_k`` is written as
``A + B t + sum_k c_k (t - p_k)_+``.  Convolving ``(t - p)_+`` with a centred
normal density of width ``sigma`` gives ``sigma * hinge((t - p) / sigma)`` with
``hinge(z) = z Phi(z) + phi(z)``, an entire function.  The smoothed function
therefore has the same Lipschitz constant and extends holomorphically; the
same formulas are evaluated for complex ``t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

__all__ = ["hinge", "hinge_slope", "SmoothedPiecewiseLinear"]

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def hinge(z):
    """Gaussian smoothing of ``max(z, 0)`` with unit width; accepts complex input."""
    z = np.asarray(z)
    return z * ndtr(z) + _INV_SQRT_2PI * np.exp(-0.5 * z * z)


def hinge_slope(z):
    """Derivative of :func:`hinge`, the standard normal CDF."""
    return ndtr(np.asarray(z))


@dataclass(frozen=True)
class SmoothedPiecewiseLinear:
    """Piecewise-linear interpolant of ``(breaks, values)`` and its Gaussian smoothing.

    Outside ``[breaks[0], breaks[-1]]`` the function continues with slopes
    ``left_slope`` and ``right_slope``.  ``sigma = 0`` gives the unsmoothed
    function.
    """

    breaks: np.ndarray
    values: np.ndarray
    sigma: float
    left_slope: float = 0.0
    right_slope: float = 0.0

    def __post_init__(self) -> None:
        p = np.asarray(self.breaks, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if p.ndim != 1 or p.shape != v.shape or p.size < 1:
            raise ValueError("breaks and values must be equal-length 1D arrays")
        if np.any(np.diff(p) <= 0):
            raise ValueError("breaks must be strictly increasing")
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        object.__setattr__(self, "breaks", p)
        object.__setattr__(self, "values", v)
        slopes = np.concatenate(([self.left_slope], np.diff(v) / np.diff(p), [self.right_slope]))
        object.__setattr__(self, "_kinks", np.diff(slopes))
        object.__setattr__(self, "_intercept", v[0] - self.left_slope * p[0])

    @property
    def slopes(self) -> np.ndarray:
        return np.concatenate(([self.left_slope], np.diff(self.values) / np.diff(self.breaks), [self.right_slope]))

    @property
    def lipschitz(self) -> float:
        """Exact Lipschitz constant of the unsmoothed (and hence the smoothed) function."""
        return float(np.max(np.abs(self.slopes)))

    def raw(self, t):
        """The unsmoothed piecewise-linear function."""
        t = np.asarray(t, dtype=float)
        out = self._intercept + self.left_slope * t
        return out + np.sum(self._kinks * np.maximum(t[..., None] - self.breaks, 0.0), axis=-1)

    def __call__(self, t):
        if self.sigma == 0:
            return self.raw(t)
        t = np.asarray(t)
        z = (t[..., None] - self.breaks) / self.sigma
        return self._intercept + self.left_slope * t + self.sigma * np.sum(self._kinks * hinge(z), axis=-1)

    def derivative(self, t):
        t = np.asarray(t)
        if self.sigma == 0:
            z = np.where(np.real(t[..., None]) > self.breaks, 1.0, 0.0)
        else:
            z = hinge_slope((t[..., None] - self.breaks) / self.sigma)
        return self.left_slope + np.sum(self._kinks * z, axis=-1)
