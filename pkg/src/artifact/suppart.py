"""Equi-Lipschitz sup-partition of unity built from Gaussian-smoothed box bumps.

For a point sequence ``x_1, ..., x_N`` in R^d, scale ``r >= 1`` and tolerance
``eps``, index ``n`` owns

* an inner box ``A'_n`` in R^n: coordinates ``j < n`` in ``[3r, M_n + r]``,
  the last coordinate in ``[-1, 3r]``;
* a bump ``b_n(y) = (1 + eps) * max(0, 1 - dist_inf(y, A'_n) / r)``;
* its Gaussian smoothing ``nu_n`` with kernel ``exp(-kappa_n sum_j 2^-j y_j^2)``,
  i.e. independent coordinate widths ``sigma_j = 2^(j/2) / sqrt(2 kappa_n)``.

The partition function is ``phi_n(x) = nu_n(Q(x - x_1), ..., Q(x - x_n))``.

``nu_n`` is evaluated through the layer-cake identity

    nu_n(y) = (1 + eps) * int_0^1 prod_j [Phi((up_j + r v - y_j) / sigma_j)
                                         - Phi((lo_j - r v - y_j) / sigma_j)] dv,

which holds because ``b_n`` is a clamped affine function of the sup-distance
to a box and the kernel factorises.  The 1D integral is split into panels at
every coordinate's CDF transition and each panel uses fixed-order
Gauss-Legendre.  Coordinates whose transition width is below ``SHARP_WIDTH``
are replaced by step functions; the induced error is at most
``sqrt(2/pi) * (1 + eps) * sum of those widths``.  The same formula with
complex ``y`` gives the holomorphic continuation used for the strip checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr
from scipy.stats import qmc

from .space import SeparatingFunction, eval_Q, eval_Q_complex

__all__ = [
    "BoxPair",
    "SupPartitionConfig",
    "LocalStripEstimate",
    "KappaSelectionError",
    "build_partition",
    "build_boxes",
    "bump_b",
    "smoothed_nu",
    "nu_monte_carlo",
    "kappa_floor",
    "select_kappa",
    "kernel_widths",
    "phi",
    "phi_matrix",
    "phi_complex",
    "far_gradient_probe",
    "local_strip_estimate",
    "property7_radius",
]

#: Gaussian tail cut-off: Phi(-TAIL) is below 1e-16.
TAIL = 8.3
#: Transition widths (in units of the integration variable) treated as steps.
SHARP_WIDTH = 1e-10


class KappaSelectionError(RuntimeError):
    """Raised when the adaptive smoothing strength does not meet the probe bound."""


@dataclass(frozen=True)
class BoxPair:
    """Inner box ``A'_n`` and outer box ``A_n`` as ``(n, 2)`` interval arrays."""

    index: int
    inner: np.ndarray
    outer: np.ndarray
    M: float


@dataclass(frozen=True)
class SupPartitionConfig:
    """Parameters of a truncated sup-partition.

    ``kappas`` is filled by :func:`build_partition`; a config built directly
    with ``kappas=None`` can only be used for box construction and bumps.
    """

    points: np.ndarray
    r: float
    eps: float
    sf: SeparatingFunction
    quad_points: int = 16
    kappas: tuple[float, ...] | None = None
    probe_count: int = 200
    seed: int = 0
    _M: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        if self.r < 1.0:
            raise ValueError("r must be >= 1")
        if not 0.0 < self.eps < 1.0:
            raise ValueError("eps must lie in (0, 1)")
        if self.quad_points < 2:
            raise ValueError("quad_points must be >= 2")
        object.__setattr__(self, "points", pts)
        # M_n = lipQ * (8r + max_{j<n} |x_n - x_j|)
        diff = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
        spread = np.array([diff[n, :n].max() if n > 0 else 0.0 for n in range(len(pts))])
        object.__setattr__(self, "_M", self.sf.lipQ * (8.0 * self.r + spread))
        if self.kappas is not None:
            if len(self.kappas) != len(pts):
                raise ValueError("need one kappa per point")
            for n, k in enumerate(self.kappas, start=1):
                if k < kappa_floor(n) * (1 - 1e-12):
                    raise ValueError(f"kappa_{n}={k} is below the floor {kappa_floor(n)}")
            object.__setattr__(self, "kappas", tuple(float(k) for k in self.kappas))

    @property
    def N(self) -> int:
        return len(self.points)

    def M(self, n: int) -> float:
        return float(self._M[n - 1])

    def kappa(self, n: int) -> float:
        if self.kappas is None:
            raise ValueError("smoothing strengths not selected; use build_partition")
        return self.kappas[n - 1]


@dataclass(frozen=True)
class LocalStripEstimate:
    """First-hit index ``n_x``, strip radius ``delta_x`` and decay rate ``a_x`` at ``x``."""

    x: np.ndarray
    n_x: int
    delta_x: float
    a_x: float


def _check_index(cfg: SupPartitionConfig, n: int) -> None:
    if not 1 <= n <= cfg.N:
        raise IndexError(f"index {n} outside 1..{cfg.N}")


def build_boxes(cfg: SupPartitionConfig, n: int) -> BoxPair:
    """Inner and outer boxes for index ``n`` (1-based)."""
    _check_index(cfg, n)
    r = cfg.r
    M = cfg.M(n)
    inner = np.empty((n, 2))
    inner[: n - 1] = (3.0 * r, M + r)
    inner[n - 1] = (-1.0, 3.0 * r)
    outer = inner + np.array([-r, r])
    if n == 1:
        outer[0] = (-1.0, 4.0 * r)
    return BoxPair(index=n, inner=inner, outer=outer, M=M)


def _box_signed_distance(box: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Per-coordinate signed distance to the intervals (negative inside)."""
    return np.maximum(box[:, 0] - y, y - box[:, 1])


def bump_b(box: BoxPair, y, r: float, eps: float) -> np.ndarray | float:
    """``(1 + eps) * max(0, 1 - dist_inf(y, A'_n) / r)`` for ``y`` of shape ``(..., n)``."""
    y = np.asarray(y, dtype=float)
    dist = np.max(np.maximum(_box_signed_distance(box.inner, y), 0.0), axis=-1)
    out = (1.0 + eps) * np.maximum(0.0, 1.0 - dist / r)
    return float(out) if np.ndim(out) == 0 else out


def kernel_widths(kappa: float, n: int) -> np.ndarray:
    """Standard deviations ``2^(j/2) / sqrt(2 kappa)``, ``j = 1..n``."""
    j = np.arange(1, n + 1)
    return np.exp(0.5 * j * math.log(2.0) - 0.5 * math.log(2.0 * kappa))


def kappa_floor(n: int) -> float:
    """Smallest admissible strength: ``kappa^n >= 2 (sqrt 2)^n (n!)^2``."""
    log_val = math.log(2.0) + 0.5 * n * math.log(2.0) + 2.0 * math.lgamma(n + 1)
    return math.exp(log_val / n)


def _gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(order)
    return 0.5 * (nodes + 1.0), 0.5 * weights


def _layer_cake(
    c_up: np.ndarray,
    c_lo: np.ndarray,
    width: np.ndarray,
    eps: float,
    quad_points: int,
) -> complex:
    """Integrate ``(1+eps) prod_j [Phi((v-c_up)/w) - Phi(-(v-c_lo)/w)]`` over ``v`` in ``[0, 1]``.

    ``c_up`` and ``c_lo`` may be complex; panel breaks use their real parts.
    """
    re_up, re_lo = c_up.real, c_lo.real
    start = 0.0
    sharp = width < SHARP_WIDTH
    if np.any(sharp):
        start = max(0.0, float(np.max(np.maximum(re_up[sharp], re_lo[sharp]))))
    keep = ~sharp
    c_up, c_lo, width = c_up[keep], c_lo[keep], width[keep]
    re_up, re_lo = re_up[keep], re_lo[keep]
    if start >= 1.0:
        return 0.0
    if width.size:
        imag_shift = np.maximum(np.abs(c_up.imag), np.abs(c_lo.imag)) / width
        tail = TAIL + 2.0 * imag_shift
        last = np.maximum(re_up, re_lo)
        if np.any(last - tail * width >= 1.0):
            return 0.0
        # drop coordinates saturated at one over the whole range
        active = (re_up + tail * width > start) | (re_lo + tail * width > start)
        c_up, c_lo, width, tail = c_up[active], c_lo[active], width[active], tail[active]
        re_up, re_lo = re_up[active], re_lo[active]
    breaks = [np.array([start, 1.0])]
    for centre in (re_up, re_lo):
        for k in (-1.0, -3.0 / TAIL, 0.0, 3.0 / TAIL, 1.0):
            breaks.append(centre + k * tail * width)
    b = np.concatenate(breaks)
    b = np.unique(np.clip(b, start, 1.0))
    lengths = np.diff(b)
    mask = lengths > 0
    left, lengths = b[:-1][mask], lengths[mask]
    t, wts = _gauss_legendre(quad_points)
    v = (left[:, None] + lengths[:, None] * t[None, :]).ravel()
    wv = (lengths[:, None] * wts[None, :]).ravel()
    if width.size == 0:
        integrand = np.ones_like(v)
    else:
        a = (v[None, :] - c_up[:, None]) / width[:, None]
        bb = (v[None, :] - c_lo[:, None]) / width[:, None]
        factors = ndtr(a) - ndtr(-bb)
        integrand = np.prod(factors, axis=0)
    return (1.0 + eps) * np.sum(wv * integrand)


def _nu_from_values(cfg: SupPartitionConfig, n: int, y, complex_mode: bool = False):
    box = build_boxes(cfg, n)
    sigma = kernel_widths(cfg.kappa(n), n)
    r = cfg.r
    y = np.asarray(y, dtype=complex if complex_mode else float)
    c_up = (y - box.inner[:, 1]) / r
    c_lo = (box.inner[:, 0] - y) / r
    val = _layer_cake(c_up, c_lo, sigma / r, cfg.eps, cfg.quad_points)
    return complex(val) if complex_mode else float(np.real(val))


def smoothed_nu(cfg: SupPartitionConfig, n: int, y) -> float:
    """Gaussian smoothing ``nu_n`` of the bump ``b_n`` evaluated at ``y`` in R^n."""
    _check_index(cfg, n)
    y = np.asarray(y, dtype=float)
    if y.shape != (n,):
        raise ValueError(f"expected a vector of length {n}")
    return _nu_from_values(cfg, n, y)


def nu_monte_carlo(
    cfg: SupPartitionConfig, n: int, y, samples: int = 1_000_000, seed: int = 0
) -> tuple[float, float]:
    """Monte Carlo estimate of ``nu_n(y)`` and its standard error (test oracle)."""
    rng = np.random.default_rng(seed)
    box = build_boxes(cfg, n)
    sigma = kernel_widths(cfg.kappa(n), n)
    y = np.asarray(y, dtype=float)
    total = 0.0
    total_sq = 0.0
    chunk = 100_000
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        draws = y + rng.standard_normal((m, n)) * sigma
        vals = bump_b(box, draws, cfg.r, cfg.eps)
        total += float(np.sum(vals))
        total_sq += float(np.sum(vals * vals))
        done += m
    mean = total / samples
    var = max(total_sq / samples - mean * mean, 0.0)
    return mean, math.sqrt(var / samples)


def _probe_points(cfg: SupPartitionConfig, box: BoxPair) -> np.ndarray:
    n = box.index
    sampler = qmc.Halton(d=n, scramble=True, seed=cfg.seed + n)
    u = sampler.random(cfg.probe_count)
    lo = box.inner[:, 0] - 2.0 * cfg.r
    hi = box.inner[:, 1] + 2.0 * cfg.r
    probes = lo + u * (hi - lo)
    if n > 2:
        # keep the two newest coordinates free and pin older ones into the inner box,
        # which places many probes on faces and edges where smoothing errs most
        probes[:, : n - 2] = np.clip(probes[:, : n - 2], box.inner[: n - 2, 0], box.inner[: n - 2, 1])
    return probes


def select_kappa(cfg: SupPartitionConfig, n: int, max_doublings: int = 64) -> float:
    """Smallest tried strength meeting ``max_probe |b_n - nu_n| <= eps / 2``.

    The search starts at ``max(kappa_floor(n), 2^n / (2 r^2))``, the value at
    which the widest kernel coordinate has standard deviation ``r``, and doubles.

    Raises
    ------
    KappaSelectionError
        If ``max_doublings`` doublings do not suffice.
    """
    _check_index(cfg, n)
    box = build_boxes(cfg, n)
    probes = _probe_points(cfg, box)
    target = bump_b(box, probes, cfg.r, cfg.eps)
    kappa = max(kappa_floor(n), 2.0**n / (2.0 * cfg.r**2))
    r = cfg.r
    c_up = (probes - box.inner[:, 1]) / r
    c_lo = (box.inner[:, 0] - probes) / r
    for _ in range(max_doublings + 1):
        w = kernel_widths(kappa, n) / r
        worst = 0.0
        for k in range(len(probes)):
            val = float(np.real(_layer_cake(c_up[k], c_lo[k], w, cfg.eps, cfg.quad_points)))
            worst = max(worst, abs(val - target[k]))
            if worst > 0.5 * cfg.eps:
                break
        if worst <= 0.5 * cfg.eps:
            return kappa
        kappa *= 2.0
    raise KappaSelectionError(f"index {n}: probe bound not met after {max_doublings} doublings")


def build_partition(
    points,
    r: float,
    eps: float,
    sf: SeparatingFunction,
    quad_points: int = 16,
    probe_count: int = 200,
    seed: int = 0,
) -> SupPartitionConfig:
    """Construct a partition config and select every smoothing strength."""
    base = SupPartitionConfig(points, r, eps, sf, quad_points, None, probe_count, seed)
    kappas = tuple(select_kappa(base, n) for n in range(1, base.N + 1))
    return SupPartitionConfig(base.points, r, eps, sf, quad_points, kappas, probe_count, seed)


def phi(cfg: SupPartitionConfig, n: int, x) -> float:
    """``phi_n(x) = nu_n(Q(x - x_1), ..., Q(x - x_n))``."""
    _check_index(cfg, n)
    x = np.asarray(x, dtype=float)
    y = np.asarray(eval_Q(cfg.sf, x[None, :] - cfg.points[:n]))
    return _nu_from_values(cfg, n, y)


def phi_matrix(cfg: SupPartitionConfig, X) -> np.ndarray:
    """All partition values at a batch of points: array of shape ``(P, N)``.

    Indices whose value is certainly below ``1e-16`` or certainly equal to
    ``1 + eps`` are resolved by vectorised tail tests; the rest go through the
    layer-cake quadrature.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    P, N = len(X), cfg.N
    Qm = np.asarray(eval_Q(cfg.sf, X[:, None, :] - cfg.points[None, :, :])).reshape(P, N)
    out = np.zeros((P, N))
    r = cfg.r
    for n in range(1, N + 1):
        box = build_boxes(cfg, n)
        w = kernel_widths(cfg.kappa(n), n) / r
        y = Qm[:, :n]
        c_up = (y - box.inner[:, 1]) / r
        c_lo = (box.inner[:, 0] - y) / r
        last = np.maximum(c_up, c_lo)
        zero = np.any(last - TAIL * w >= 1.0, axis=1)
        full = np.all(last + TAIL * w <= 0.0, axis=1) & ~zero
        out[full, n - 1] = 1.0 + cfg.eps
        for k in np.nonzero(~(zero | full))[0]:
            out[k, n - 1] = float(np.real(_layer_cake(c_up[k], c_lo[k], w, cfg.eps, cfg.quad_points)))
    return out


def far_gradient_probe(cfg: SupPartitionConfig, n: int, X, step: float = 1e-6) -> np.ndarray:
    """Central-difference gradient norms of ``phi_n`` at the rows of ``X`` with ``Q(x - x_n) >= 5 r``.

    A diagnostic only: the smallness of these gradients is never used by the
    constructions.  Rows closer to ``x_n`` are dropped.
    """
    _check_index(cfg, n)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    X = X[np.asarray(eval_Q(cfg.sf, X - cfg.points[n - 1])).reshape(-1) >= 5.0 * cfg.r]
    d = X.shape[1]
    grads = np.empty((len(X), d))
    for k in range(d):
        e = np.zeros(d)
        e[k] = step
        plus = phi_matrix(cfg, X + e)[:, n - 1]
        minus = phi_matrix(cfg, X - e)[:, n - 1]
        grads[:, k] = (plus - minus) / (2.0 * step)
    return np.linalg.norm(grads, axis=1)


def local_strip_estimate(cfg: SupPartitionConfig, x) -> LocalStripEstimate:
    """First-hit index and the strip radius and decay rate that go with it.

    ``n_x`` is the least index with ``Q(x - x_j) < min(r, 1)``; then
    ``a_x = rho^2 2^(-n_x - 4)`` and ``delta_x = rho sqrt(2^(-n_x - 4)) / lipQ``
    with ``rho = min(r, 1)``, further capped by ``min(rho / (2 lipQ), deltaQ)``.
    """
    x = np.asarray(x, dtype=float)
    rho = min(cfg.r, 1.0)
    qs = np.asarray(eval_Q(cfg.sf, x[None, :] - cfg.points))
    hits = np.nonzero(qs < rho)[0]
    if hits.size == 0:
        raise ValueError("point is not covered by any Q-body of the partition")
    n_x = int(hits[0]) + 1
    C = cfg.sf.lipQ
    a_x = rho**2 * 2.0 ** (-n_x - 4)
    delta_x = min(rho * math.sqrt(2.0 ** (-n_x - 4)) / C, rho / (2 * C), cfg.sf.deltaQ)
    return LocalStripEstimate(x=x, n_x=n_x, delta_x=delta_x, a_x=a_x)


def property7_radius(cfg: SupPartitionConfig, est: LocalStripEstimate) -> float:
    """Radius within which every ``|phi_n~|`` is at most ``1 + 2 eps``.

    Beyond the index ``m`` where ``1 / (a_x n!)`` drops below ``1 + 2 eps`` the
    decay bound applies; up to ``m`` the radius is limited by
    ``sqrt(log((1 + 2eps)/(1 + eps)) / (2 kappa_k lipQ^2))``.
    """
    target = math.log1p(2 * cfg.eps)
    m = est.n_x
    while m < cfg.N and -math.log(est.a_x) - math.lgamma(m + 1) >= target:
        m += 1
    log_ratio = math.log((1 + 2 * cfg.eps) / (1 + cfg.eps))
    C = cfg.sf.lipQ
    radius = est.delta_x
    for k in range(1, m + 1):
        radius = min(radius, math.sqrt(log_ratio / (2.0 * cfg.kappa(k) * C * C)))
    return radius


def phi_complex(cfg: SupPartitionConfig, n: int, x, y, est: LocalStripEstimate | None = None) -> complex:
    """Holomorphic continuation of ``phi_n`` at ``x + i y``.

    Feeds the complex values ``Q~(x - x_j + i y)`` through the layer-cake
    formula with the complex normal CDF.

    Raises
    ------
    StripViolation
        If ``|y|`` reaches ``deltaQ``.
    ValueError
        If ``est`` is given and ``|y|`` exceeds its ``delta_x``.
    """
    _check_index(cfg, n)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if est is not None and np.linalg.norm(y) > est.delta_x:
        raise ValueError("imaginary part exceeds the local strip radius")
    zeta = np.asarray(eval_Q_complex(cfg.sf, x[None, :] - cfg.points[:n], np.broadcast_to(y, (n, len(y)))))
    return _nu_from_values(cfg, n, zeta, complex_mode=True)
