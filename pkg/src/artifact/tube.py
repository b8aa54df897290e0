"""Gluing unit slabs back together through a smoothed tube around a staircase path.

A function ``0 <= f <= N`` is cut into slabs ``f_n = clamp(f - n + 1, 0, 1)``.
The slab vector of ``f(x)`` is the point ``beta(f(x))`` of the polygonal path

    beta(t) = (1, ..., 1, t - n + 1, 0, ...),   n = ceil(t),

which climbs one coordinate at a time.  The path has no Lipschitz inverse at
its corners, so it is thickened into a tube.  A straight tube ``S`` (first
coordinate free, the others small) is bent onto the path by a map ``G`` built
from one corner map per corner, blended by a smooth partition in the first
coordinate.  ``H(u) = alpha(first coordinate of G^{-1}(u))`` then reads off
the path parameter, with a staircase ``alpha`` that freezes at the integers so
the badly conditioned corner regions contribute almost no derivative.

Everything is in closed form: every smoothed object is a Gaussian convolution
of a continuous piecewise-linear function (see :mod:`artifact.smoothing`), so
the same formulas evaluate the holomorphic extensions at complex arguments.

Parameter bookkeeping.  For a target tolerance ``eps`` the construction runs
at an internal tolerance ``eps / 8``: the staircase plateaus, the corner
half-width and the derivative budget ``1 / (1 - 4 eps')`` are all sized by it,
which keeps ``|H - t| <= eps`` and ``|DH| <= 1 + eps``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .approx_core import Approximant
from .smoothing import SmoothedPiecewiseLinear, hinge, hinge_slope

__all__ = [
    "SlabDecomposition",
    "TubeMapConfig",
    "Staircase",
    "OutsideTubeError",
    "slab_decompose",
    "beta",
    "beta_inverse",
    "path_distance",
    "corner_F",
    "corner_F_inv",
    "staircase_alpha",
    "tube_G",
    "tube_G_jacobian",
    "tube_G_inverse",
    "tube_H",
    "tube_H_gradient",
    "in_straight_tube",
    "glue_bounded",
    "complex_spot_check",
    "slab_gluing_hook",
]

# Internal tolerance is the target divided by this factor.
INNER_EPS_FACTOR = 8.0
# Default tube radius as a fraction of the corner half-width.
RADIUS_FRACTION = 1.0 / 32.0


class OutsideTubeError(ValueError):
    """Raised when a point cannot be pulled back into the straight tube."""


# ---------------------------------------------------------------------------
# Slabs and the path


@dataclass(frozen=True)
class SlabDecomposition:
    """The slabs ``f_n = clamp(f - n + 1, 0, 1)``, ``n = 1..N``, of ``0 <= f <= N``."""

    f: Callable[[np.ndarray], np.ndarray]
    N: int

    def __call__(self, X) -> np.ndarray:
        """Slab values as an array of shape ``(P, N)``."""
        vals = np.asarray(self.f(X), dtype=float).reshape(-1)
        return slab_values(vals, self.N)

    def component(self, n: int) -> Callable[[np.ndarray], np.ndarray]:
        if not 1 <= n <= self.N:
            raise IndexError(f"slab index {n} outside 1..{self.N}")
        return lambda X: np.clip(np.asarray(self.f(X), dtype=float) - n + 1.0, 0.0, 1.0)


def slab_values(values: np.ndarray, N: int) -> np.ndarray:
    values = np.asarray(values, dtype=float).reshape(-1)
    return np.clip(values[:, None] - np.arange(N)[None, :], 0.0, 1.0)


def slab_decompose(f: Callable[[np.ndarray], np.ndarray], N: int) -> SlabDecomposition:
    if N < 1:
        raise ValueError("need at least one slab")
    return SlabDecomposition(f, int(N))


def beta(t: float, N: int) -> np.ndarray:
    """The path point ``beta(t)`` for ``0 <= t <= N`` with ``N + 2`` coordinates."""
    if not 0.0 <= t <= N:
        raise ValueError(f"path parameter {t} outside [0, {N}]")
    out = np.zeros(N + 2)
    out[:N] = slab_values(np.array([t]), N)[0]
    return out


def path_distance(U: np.ndarray, N: int) -> tuple[np.ndarray, np.ndarray]:
    """Sup-norm distance from each row of ``U`` to ``beta([0, N])`` and the nearest parameter.

    Returns ``(distance, t)`` where ``t`` minimises ``|U - beta(t)|_inf``.
    """
    U = np.atleast_2d(np.asarray(U, dtype=float))
    if U.shape[1] < N:
        raise ValueError("points need at least N coordinates")
    best = np.full(len(U), np.inf)
    best_t = np.zeros(len(U))
    tail = np.abs(U[:, N:]).max(axis=1) if U.shape[1] > N else np.zeros(len(U))
    for m in range(1, N + 1):
        # segment m moves coordinate m (1-based) from 0 to 1
        before = np.abs(U[:, : m - 1] - 1.0).max(axis=1) if m > 1 else np.zeros(len(U))
        after = np.abs(U[:, m:N]).max(axis=1) if m < N else np.zeros(len(U))
        s = np.clip(U[:, m - 1], 0.0, 1.0)
        d = np.maximum.reduce([before, np.abs(U[:, m - 1] - s), after, tail])
        better = d < best
        best = np.where(better, d, best)
        best_t = np.where(better, m - 1 + s, best_t)
    return best, best_t


def beta_inverse(y: Sequence[float], N: int | None = None, tol: float = 1e-9) -> float:
    """The parameter ``t`` with ``beta(t) = y`` for ``y`` on the path (within ``tol``)."""
    y = np.asarray(y, dtype=float)
    N = len(y) if N is None else N
    dist, t = path_distance(y[None, :], N)
    if dist[0] > tol:
        raise ValueError(f"point is {dist[0]:.3e} away from the path (tolerance {tol})")
    return float(t[0])


# ---------------------------------------------------------------------------
# Exact corner map


def corner_F(p: Sequence[float], r: float = 0.125) -> np.ndarray:
    """Bend the strip ``[0, 2] x [-r, r]`` around the corner at ``(1, 0)``."""
    x, y = (float(c) for c in p)
    if not (0.0 <= x <= 2.0 and abs(y) <= r):
        raise ValueError(f"({x}, {y}) outside [0, 2] x [-{r}, {r}]")
    if x <= 1.0:
        return np.array([x - y * x, y])
    return np.array([1.0 - y, x - 1.0 + y * (2.0 - x)])


def corner_F_inv(p: Sequence[float], r: float = 0.125) -> np.ndarray:
    """Inverse of :func:`corner_F` on the bent strip."""
    u, v = (float(c) for c in p)
    lower = 0.0 <= u <= 1.0 + r and abs(v) <= r and u + v <= 1.0
    upper = abs(u - 1.0) <= r and -r <= v <= 1.0 and u + v >= 1.0
    if lower:
        return np.array([u / (1.0 - v), v])
    if upper:
        return np.array([(2.0 * u + v - 1.0) / u, 1.0 - u])
    raise ValueError(f"({u}, {v}) outside the bent strip of half-width {r}")


# ---------------------------------------------------------------------------
# Staircase


@dataclass(frozen=True)
class Staircase:
    """Piecewise-affine staircase frozen on ``[n - 2 eps, n + 2 eps]`` and its smoothing.

    ``kappa`` is the Gaussian kernel strength ``exp(-kappa s^2)``; the width is
    ``1 / sqrt(2 kappa)``.  Steps are laid out up to ``top``.
    """

    eps: float
    kappa: float
    top: int = 64

    def __post_init__(self) -> None:
        if not 0 < self.eps < 0.25:
            raise ValueError("staircase tolerance must lie in (0, 1/4)")
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")

    @property
    def sigma(self) -> float:
        return 1.0 / math.sqrt(2.0 * self.kappa)

    @property
    def slope(self) -> float:
        return 1.0 / (1.0 - 4.0 * self.eps)

    @cached_property
    def _pl(self) -> SmoothedPiecewiseLinear:
        e = self.eps
        breaks = [2 * e]
        values = [0.0]
        for n in range(1, self.top + 1):
            breaks += [n - 2 * e, n + 2 * e]
            values += [float(n), float(n)]
        return SmoothedPiecewiseLinear(np.array(breaks), np.array(values), self.sigma)

    def raw(self, t):
        return self._pl.raw(t)

    def __call__(self, t):
        return self._pl(t)

    def derivative(self, t):
        return self._pl.derivative(t)


def staircase_alpha(st: Staircase, t):
    """The smoothed staircase at ``t`` (real or complex)."""
    return st(t)


# ---------------------------------------------------------------------------
# Tube configuration and the bent map


@dataclass(frozen=True)
class TubeMapConfig:
    """Tube around ``beta([0, N])`` for target tolerance ``eps``.

    Parameters
    ----------
    eps
        Target tolerance in ``(0, 1]``.
    N
        Number of slabs; sequences carry ``N + 2`` coordinates.
    r
        Tube radius; defaults to ``eps / 256``.  Must be below ``eps / 64``
        and at most a sixteenth of the corner half-width ``eps / 8``.
    delta
        Imaginary half-width for the complex spot checks; defaults to ``r / 4``.
    kappa
        Corner smoothing strength; defaults to a Gaussian of width ``r / 8``.
    """

    eps: float
    N: int
    r: float | None = None
    delta: float | None = None
    kappa: float | None = None
    newton_tol: float = 1e-13
    newton_max_iter: int = 60

    def __post_init__(self) -> None:
        if not 0 < self.eps <= 1:
            raise ValueError("eps must lie in (0, 1]")
        if self.N < 1:
            raise ValueError("N must be at least 1")
        r = self.eps / 256.0 if self.r is None else float(self.r)
        delta = r / 4.0 if self.delta is None else float(self.delta)
        kappa = 32.0 / (r * r) if self.kappa is None else float(self.kappa)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "kappa", kappa)
        if not (0 < r < self.eps / 64 and 0 < delta < self.eps / 64):
            raise ValueError("need 0 < r, delta < eps/64")
        if r > self.corner_halfwidth / 16:
            raise ValueError("tube radius exceeds a sixteenth of the corner half-width")
        if self.corner_sigma > r / 4:
            raise ValueError("corner smoothing wider than r/4; raise kappa")

    @property
    def inner_eps(self) -> float:
        return self.eps / INNER_EPS_FACTOR

    @property
    def corner_halfwidth(self) -> float:
        return self.inner_eps

    @property
    def corner_sigma(self) -> float:
        return 1.0 / math.sqrt(2.0 * self.kappa)

    @property
    def blend_sigma(self) -> float:
        return 1.0 / 64.0

    @property
    def dim(self) -> int:
        return self.N + 2

    @cached_property
    def staircase(self) -> Staircase:
        sigma = self.inner_eps / 16.0
        return Staircase(self.inner_eps, 1.0 / (2.0 * sigma * sigma), top=self.N + 2)

    @cached_property
    def _blend(self) -> tuple[SmoothedPiecewiseLinear, SmoothedPiecewiseLinear, SmoothedPiecewiseLinear]:
        s = self.blend_sigma
        bump = SmoothedPiecewiseLinear(np.array([-0.5, -0.25, 0.5, 0.75]), np.array([0.0, 1.0, 1.0, 0.0]), s)
        first = SmoothedPiecewiseLinear(np.array([0.5, 0.75]), np.array([1.0, 0.0]), s)
        last = SmoothedPiecewiseLinear(np.array([-0.5, -0.25]), np.array([0.0, 1.0]), s)
        return first, bump, last

    def to_dict(self) -> dict:
        return {"eps": self.eps, "N": self.N, "r": self.r, "delta": self.delta, "kappa": self.kappa}


def _corner(cfg: TubeMapConfig, xl, y, jac: bool):
    """Smoothed corner map in local coordinates (corner at ``xl = 1``) and its partials.

    The unsmoothed map is the identity for ``xl <= 1 - a``, the scaled exact
    corner on ``[1 - a, 1 + a]`` and the quarter turn ``(1 - y, xl - 1)``
    beyond.  For fixed ``y`` each component is piecewise linear in ``xl`` with
    kinks at ``1 - a, 1, 1 + a`` whose sizes are affine in ``y``; convolving
    with an isotropic Gaussian therefore only smooths the kinks.
    """
    a = cfg.corner_halfwidth
    s = cfg.corner_sigma
    ya = y / a
    z0 = (xl - (1.0 - a)) / s
    z1 = (xl - 1.0) / s
    z2 = (xl - (1.0 + a)) / s
    h0, h1, h2 = hinge(z0), hinge(z1), hinge(z2)
    phi = xl + s * (-ya * h0 - (1.0 - ya) * h1)
    psi = y + s * ((1.0 - ya) * h1 + ya * h2)
    if not jac:
        return phi, psi, None
    c0, c1, c2 = hinge_slope(z0), hinge_slope(z1), hinge_slope(z2)
    phi_x = 1.0 - ya * c0 - (1.0 - ya) * c1
    phi_y = (s / a) * (h1 - h0)
    psi_x = (1.0 - ya) * c1 + ya * c2
    psi_y = 1.0 + (s / a) * (h2 - h1)
    return phi, psi, (phi_x, phi_y, psi_x, psi_y)


def _weights(cfg: TubeMapConfig, x1, deriv: bool):
    first, bump, last = cfg._blend
    N = cfg.N
    ws, dws = [], []
    for n in range(N + 1):
        if n == 0:
            fn, arg = first, x1 - 1.0
        elif n == N:
            fn, arg = last, x1 - N - 1.0
        else:
            fn, arg = bump, x1 - n - 1.0
        ws.append(fn(arg))
        if deriv:
            dws.append(fn.derivative(arg))
    return ws, dws


def _G_batch(cfg: TubeMapConfig, X: np.ndarray, jac: bool):
    P, D = X.shape
    dtype = np.result_type(X.dtype, float)
    out = np.zeros((P, D), dtype=dtype)
    J = np.zeros((P, D, D), dtype=dtype) if jac else None
    x1 = X[:, 0]
    ws, dws = _weights(cfg, x1, jac)
    rows = np.arange(P)
    for n in range(cfg.N + 1):
        w = ws[n]
        phi, psi, d = _corner(cfg, x1 - n, X[:, n + 1], jac)
        term = np.empty((P, D), dtype=dtype)
        term[:, :n] = 1.0 - X[:, 1 : n + 1]
        term[:, n] = phi
        term[:, n + 1] = psi
        term[:, n + 2 :] = X[:, n + 2 :]
        out += w[:, None] * term
        if jac:
            for j in range(n):
                J[rows, j, j + 1] -= w
            phi_x, phi_y, psi_x, psi_y = d
            J[:, n, 0] += w * phi_x
            J[:, n, n + 1] += w * phi_y
            J[:, n + 1, 0] += w * psi_x
            J[:, n + 1, n + 1] += w * psi_y
            for k in range(n + 2, D):
                J[rows, k, k] += w
            J[:, :, 0] += dws[n][:, None] * term
    return out, J


def _as_batch(cfg: TubeMapConfig, X) -> tuple[np.ndarray, bool]:
    X = np.asarray(X)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != cfg.dim:
        raise ValueError(f"expected {cfg.dim} coordinates, got {X.shape[1]}")
    if not np.iscomplexobj(X):
        X = X.astype(float)
    return X, single


def in_straight_tube(cfg: TubeMapConfig, X) -> np.ndarray:
    """Membership in ``S = {-r < x_1 < N + r, |x_j| < r for j >= 2}`` (real parts)."""
    X = np.real(np.atleast_2d(np.asarray(X)))
    r = cfg.r
    return (X[:, 0] > -r) & (X[:, 0] < cfg.N + r) & np.all(np.abs(X[:, 1:]) < r, axis=1)


def tube_G(cfg: TubeMapConfig, X, check_domain: bool = True):
    """Bent map ``G`` on rows of ``X`` (``N + 2`` coordinates, real or complex)."""
    Xb, single = _as_batch(cfg, X)
    if check_domain and not np.all(in_straight_tube(cfg, Xb)):
        raise ValueError("point outside the straight tube")
    out, _ = _G_batch(cfg, Xb, jac=False)
    return out[0] if single else out


def tube_G_jacobian(cfg: TubeMapConfig, X):
    """Analytic Jacobian of ``G`` with shape ``(P, N + 2, N + 2)``."""
    Xb, single = _as_batch(cfg, X)
    _, J = _G_batch(cfg, Xb, jac=True)
    return J[0] if single else J


def _initial_guess(cfg: TubeMapConfig, U: np.ndarray) -> np.ndarray:
    """Pull back through the flat piece of the nearest path segment."""
    N = cfg.N
    _, t = path_distance(np.real(U), N)
    m = np.clip(np.ceil(t).astype(int), 1, N)
    X = np.array(U, copy=True)
    for k in range(len(U)):
        mk = m[k]
        x = np.empty(cfg.dim, dtype=U.dtype)
        x[0] = mk - 1 + U[k, mk - 1]
        x[1:mk] = 1.0 - U[k, : mk - 1]
        x[mk:] = U[k, mk:]
        X[k] = x
    return X


@dataclass
class InverseResult:
    x: np.ndarray
    converged: np.ndarray
    residual: np.ndarray
    inside: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))


def tube_G_inverse(cfg: TubeMapConfig, U, X0=None) -> InverseResult:
    """Damped Newton solve of ``G(x) = u`` for every row of ``U``.

    The start is the nearest-segment pull-back unless ``X0`` is given.  A
    step is halved until the sup-norm residual decreases; a point whose
    residual cannot be decreased, or that exceeds the iteration cap, is
    reported as not converged.  ``inside`` marks converged solutions that
    lie in the straight tube; that is the tube membership test.
    """
    U, _ = _as_batch(cfg, U)
    X = _initial_guess(cfg, U) if X0 is None else np.array(np.atleast_2d(X0), dtype=U.dtype)
    scale = np.maximum(1.0, np.abs(U).max(axis=1))
    active = np.ones(len(U), dtype=bool)
    converged = np.zeros(len(U), dtype=bool)
    G, J = _G_batch(cfg, X, jac=True)
    R = G - U
    res = np.abs(R).max(axis=1)
    for _ in range(cfg.newton_max_iter):
        done = active & (res <= cfg.newton_tol * scale)
        converged |= done
        active &= ~done
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        try:
            step = np.linalg.solve(J[idx], R[idx][..., None])[..., 0]
        except np.linalg.LinAlgError:
            step = np.stack([np.linalg.lstsq(J[i], R[i], rcond=None)[0] for i in idx])
        lam = np.ones(len(idx))
        pending = np.ones(len(idx), dtype=bool)
        newX = X[idx].copy()
        newR = R[idx].copy()
        newres = res[idx].copy()
        for _half in range(40):
            cand = X[idx][pending] - lam[pending, None] * step[pending]
            Gc, _ = _G_batch(cfg, cand, jac=False)
            rc = Gc - U[idx][pending]
            rres = np.abs(rc).max(axis=1)
            ok = np.isfinite(rres) & (rres < res[idx][pending])
            sub = np.nonzero(pending)[0]
            acc = sub[ok]
            newX[acc] = cand[ok]
            newR[acc] = rc[ok]
            newres[acc] = rres[ok]
            pending[acc] = False
            lam[pending] *= 0.5
            if not pending.any():
                break
        # points whose residual could not be reduced have stalled
        stalled = idx[pending]
        active[stalled] = False
        moved = idx[~pending]
        X[moved] = newX[~pending]
        R[moved] = newR[~pending]
        res[moved] = newres[~pending]
        if moved.size:
            _, Jm = _G_batch(cfg, X[moved], jac=True)
            J[moved] = Jm
    converged |= active & (res <= cfg.newton_tol * scale)
    inside = converged & in_straight_tube(cfg, X)
    return InverseResult(X, converged, res, inside)


def tube_H(cfg: TubeMapConfig, U, strict: bool = True):
    """``H(u) = alpha(first coordinate of G^{-1}(u))`` for rows of ``U``.

    Raises
    ------
    OutsideTubeError
        If ``strict`` and some row is not in the bent tube; otherwise those
        rows are NaN.
    """
    Ub, single = _as_batch(cfg, U)
    inv = tube_G_inverse(cfg, Ub)
    if strict and not inv.inside.all():
        bad = int(np.argmin(inv.inside))
        raise OutsideTubeError(
            f"row {bad} is outside the tube (converged={bool(inv.converged[bad])}, residual={inv.residual[bad]:.2e})"
        )
    vals = cfg.staircase(inv.x[:, 0])
    vals = np.where(inv.inside, vals, np.nan)
    return vals[0] if single else vals


def tube_H_gradient(cfg: TubeMapConfig, U, step: float = 1e-6) -> np.ndarray:
    """Central finite-difference gradient of ``H`` at each row of ``U``; shape ``(P, N + 2)``."""
    U = np.atleast_2d(np.asarray(U, dtype=float))
    P, D = U.shape
    stacked = []
    for k in range(D):
        e = np.zeros(D)
        e[k] = step
        stacked.append(U + e)
        stacked.append(U - e)
    vals = tube_H(cfg, np.concatenate(stacked), strict=True).reshape(D, 2, P)
    return ((vals[:, 0] - vals[:, 1]) / (2 * step)).T


# ---------------------------------------------------------------------------
# Gluing


def glue_bounded(components: Sequence[Approximant], cfg: TubeMapConfig, offset: float = 0.0) -> Approximant:
    """``g(x) = offset + H(g_1(x), ..., g_N(x), 0, 0)``.

    Points whose component vector is not in the bent tube evaluate to NaN and
    are excluded by ``covered``.
    """
    if len(components) != cfg.N:
        raise ValueError(f"expected {cfg.N} components, got {len(components)}")

    cache: dict = {}

    def pulled(X: np.ndarray):
        key = X.tobytes()
        if cache.get("key") != key:
            U = np.zeros((len(X), cfg.dim))
            for i, g in enumerate(components):
                U[:, i] = g(X)
            inv = tube_G_inverse(cfg, U)
            cache.update(key=key, vals=np.where(inv.inside, cfg.staircase(inv.x[:, 0]), np.nan), inside=inv.inside)
        return cache["vals"], cache["inside"]

    def evaluate(X: np.ndarray) -> np.ndarray:
        return offset + pulled(X)[0]

    lip = max(float(g.claimed_lip) for g in components)
    return Approximant(
        evaluate=evaluate,
        claimed_lip=(1.0 + cfg.eps) * lip,
        claimed_sup_error=cfg.eps,
        box=components[0].box,
        covered=lambda X: pulled(X)[1],
        meta={"tube": cfg.to_dict(), "offset": offset},
    )


def slab_gluing_hook(cfg_eps: float, L: float):
    """Final stage for :func:`artifact.lasrylions.hilbert_pipeline` that re-glues slabs.

    The surrogate's grid values are shifted to start at an integer, cut into
    slabs, each slab is regularised again at accuracy well inside the tube
    radius, and the results are glued with :func:`glue_bounded`.
    """
    from .lasrylions import lasry_lions, lambda_schedule

    def hook(surrogate: Approximant, grid) -> Approximant:
        vals = grid.values
        offset = math.floor(float(vals.min()))
        N = max(1, math.ceil(float(vals.max()) - offset))
        cfg = TubeMapConfig(cfg_eps, N)
        params = lambda_schedule(L, cfg.r)
        comps = []
        for n in range(1, N + 1):
            slab = grid.with_values(np.clip(vals - offset - n + 1.0, 0.0, 1.0))
            smooth = lasry_lions(slab, params)
            comps.append(
                Approximant(evaluate=smooth.interpolator(), claimed_lip=L, claimed_sup_error=cfg.r / 2, box=surrogate.box)
            )
        glued = glue_bounded(comps, cfg, offset=offset)
        glued.claimed_sup_error = surrogate.claimed_sup_error + cfg.eps
        glued.meta.update(surrogate.meta)
        glued.meta["tube"] = cfg.to_dict()
        return glued

    return hook


# ---------------------------------------------------------------------------
# Complex spot checks


def complex_spot_check(cfg: TubeMapConfig, samples: int = 50, seed: int = 0) -> dict:
    """Sample the holomorphic extensions near the real tube.

    Reports the largest ``|G(x + iy) - G(x)|_inf`` over ``|y|_inf <= delta``
    for ``x`` in the straight tube, and the largest ratio
    ``|H(u + iv)| / (2 (H(u) + 1))`` over ``|v|_inf <= delta`` for ``u`` near
    the path, with ``H`` continued by complex Newton from the real solution.
    Also reports how many complex solves converged.
    """
    rng = np.random.default_rng(seed)
    D = cfg.dim
    X = np.zeros((samples, D))
    X[:, 0] = rng.uniform(0.0, cfg.N, samples)
    X[:, 1:] = rng.uniform(-0.5 * cfg.r, 0.5 * cfg.r, (samples, D - 1))
    Y = rng.uniform(-cfg.delta, cfg.delta, (samples, D))
    G_real = tube_G(cfg, X)
    G_cplx = tube_G(cfg, X + 1j * Y)
    g_dev = float(np.abs(G_cplx - G_real).max())

    U = G_real
    inv = tube_G_inverse(cfg, U)
    V = rng.uniform(-cfg.delta, cfg.delta, (samples, D))
    cinv = tube_G_inverse(cfg, U + 1j * V, X0=inv.x.astype(complex))
    ok = cinv.converged & inv.inside
    H_real = cfg.staircase(inv.x[ok, 0])
    H_cplx = cfg.staircase(cinv.x[ok, 0])
    ratio = np.abs(H_cplx) / (2.0 * (np.abs(H_real) + 1.0))
    return {
        "G_strip_deviation": g_dev,
        "H_ratio_max": float(ratio.max()) if ratio.size else math.nan,
        "complex_inverse_converged": int(ok.sum()),
        "samples": samples,
    }
