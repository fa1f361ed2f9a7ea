"""Reference computations for tests and diagnostics.

Nothing here touches the random walk. Gaussian masses of boxes, balls and
halfspaces come from one-dimensional quadrature or closed forms; other
bodies in at most three dimensions fall back to a tensor-grid sum.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import integrate
from scipy.special import gammainc, log_ndtr

from .geometry import Ball, Box, ConvexBody, Polytope
from .phases import GaussianPhase

__all__ = [
    "QuadratureError",
    "NeedleConfig",
    "needle_moment_ratio",
    "needle_bound",
    "log_needle_moment_ratio",
    "log_needle_bound",
    "check_needle_inequality",
    "needle_log_integral_closed_form",
    "random_needle_config",
    "quadrature_gaussian_volume",
    "grid_gaussian_volume",
    "log_gaussian_integral",
    "fixed_rate_variance_oracle",
    "second_moment_oracle",
    "warmness_oracle",
    "box_marginal_cdf",
    "restriction_excess",
]

_EPSREL = 1e-10
_DEGENERATE_WIDTH = 1e-12
GRID_POINTS = 400
GRID_MAX_DIMENSION = 3


class QuadratureError(RuntimeError):
    """Quadrature failed to converge, or the body is not supported."""


# -- exponential needles ------------------------------------------------------

@dataclass(frozen=True)
class NeedleConfig:
    """A segment ``[lo, hi]`` with weight ``exp(gamma t)``.

    ``alpha`` is the variance perturbation of the three integrals compared by
    :func:`needle_moment_ratio`.
    """

    lo: float
    hi: float
    gamma: float
    variance: float
    alpha: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or self.lo > self.hi:
            raise ValueError(f"need finite lo <= hi, got [{self.lo}, {self.hi}]")
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be non-negative, got {self.gamma}")
        if not self.variance > 0:
            raise ValueError(f"variance must be positive, got {self.variance}")
        if not 0.0 <= self.alpha <= 0.5:
            raise ValueError(f"alpha must lie in [0, 1/2], got {self.alpha}")

    @property
    def R1(self) -> float:
        return max(abs(self.lo), abs(self.hi))


def _log_needle_integral(cfg: NeedleConfig, beta: float) -> float:
    """``log int_lo^hi exp(gamma t - beta t^2 / (2 var)) dt`` by adaptive quadrature."""
    a = beta / (2.0 * cfg.variance)
    peak = min(max(cfg.gamma / (2.0 * a), cfg.lo), cfg.hi)
    top = cfg.gamma * peak - a * peak * peak

    def g(t):
        return math.exp(cfg.gamma * t - a * t * t - top)

    # split at the peak so each piece is monotone
    total, err = 0.0, 0.0
    for lo, hi in ((cfg.lo, peak), (peak, cfg.hi)):
        if hi <= lo:
            continue
        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                val, e = integrate.quad(g, lo, hi, epsabs=0.0, epsrel=_EPSREL, limit=200)
            except integrate.IntegrationWarning as w:
                raise QuadratureError(f"needle quadrature did not converge: {w}") from None
        total += val
        err += e
    if not total > 0:
        raise QuadratureError("needle integral vanished")
    return top + math.log(total)


def needle_log_integral_closed_form(cfg: NeedleConfig, beta: float) -> float:
    """The same integral through the normal CDF (independent cross-check)."""
    s2 = cfg.variance / beta
    mu = cfg.gamma * s2
    s = math.sqrt(s2)
    hi, lo = (cfg.hi - mu) / s, (cfg.lo - mu) / s
    # log(Phi(hi) - Phi(lo)) without cancellation; reflect into the lower tail
    if lo > 0:
        hi, lo = -lo, -hi
    lh, ll = float(log_ndtr(hi)), float(log_ndtr(lo))
    log_mass = lh + math.log1p(-math.exp(ll - lh))
    return 0.5 * math.log(2 * math.pi * s2) + 0.5 * cfg.gamma**2 * s2 + log_mass


def needle_moment_ratio(cfg: NeedleConfig) -> float:
    """``I(1+alpha) I(1-alpha) / I(1)^2`` for ``I(b) = int e^{gamma t - b t^2/(2 var)}``.

    Degenerate segments (width below 1e-12) return 1.

    >>> needle_moment_ratio(NeedleConfig(-1.0, 1.0, 0.0, 1.0, 0.0))
    1.0
    """
    return math.exp(log_needle_moment_ratio(cfg))


def log_needle_moment_ratio(cfg: NeedleConfig) -> float:
    if cfg.alpha == 0.0 or cfg.hi - cfg.lo < _DEGENERATE_WIDTH:
        return 0.0
    return (_log_needle_integral(cfg, 1.0 + cfg.alpha)
            + _log_needle_integral(cfg, 1.0 - cfg.alpha)
            - 2.0 * _log_needle_integral(cfg, 1.0))


def log_needle_bound(cfg: NeedleConfig) -> float:
    """``2 R1^2 alpha^2 / var`` with ``R1`` the largest endpoint magnitude."""
    return 2.0 * cfg.R1**2 * cfg.alpha**2 / cfg.variance


def needle_bound(cfg: NeedleConfig) -> float:
    try:
        return math.exp(log_needle_bound(cfg))
    except OverflowError:
        return math.inf


def check_needle_inequality(cfg: NeedleConfig, rel_slack: float = 1e-8) -> bool:
    """Whether the moment ratio is at most the bound times ``1 + rel_slack``."""
    return log_needle_moment_ratio(cfg) <= log_needle_bound(cfg) + math.log1p(rel_slack)


def random_needle_config(rng: np.random.Generator, max_radius: float = 10.0,
                         max_gamma: float = 10.0) -> NeedleConfig:
    """A random configuration spanning narrow and wide Gaussians."""
    R1 = rng.uniform(0.1, max_radius)
    lo, hi = np.sort(rng.uniform(-R1, R1, 2))
    return NeedleConfig(
        lo=float(lo), hi=float(hi),
        gamma=float(rng.uniform(0.0, max_gamma)),
        variance=float(np.exp(rng.uniform(math.log(0.01), math.log(100.0)))),
        alpha=float(rng.uniform(0.0, 0.5)),
    )


# -- Gaussian masses ----------------------------------------------------------

def _interval_mass(lo: float, hi: float, sigma: float) -> float:
    """Normal(0, sigma^2) mass of ``[lo, hi]`` by quadrature of the density."""
    c = 1.0 / (sigma * math.sqrt(2 * math.pi))

    def pdf(t):
        return c * math.exp(-0.5 * (t / sigma) ** 2)

    pts = [0.0] if lo < 0.0 < hi and math.isfinite(lo) and math.isfinite(hi) else None
    val, _ = integrate.quad(pdf, lo, hi, epsabs=0.0, epsrel=1e-12, limit=200, points=pts)
    return val


def _halfspace_row(body: ConvexBody) -> Optional[Tuple[np.ndarray, float]]:
    if isinstance(body, Polytope) and body.A.shape[0] == 1:
        return body.A[0], float(body.b[0])
    return None


def quadrature_gaussian_volume(body: ConvexBody, variance: float = 1.0) -> float:
    """Mass that ``N(0, variance I)`` puts on ``body``.

    Boxes use a product of 1-D quadratures, origin-centred balls the
    chi-square CDF, single halfspaces a 1-D quadrature along the normal.
    Any other body needs ``dimension <= 3`` and goes to
    :func:`grid_gaussian_volume`.

    >>> round(quadrature_gaussian_volume(Box.cube(1), 1.0), 6)
    0.682689
    """
    if not variance > 0 or math.isinf(variance):
        raise ValueError(f"variance must be finite and positive, got {variance}")
    sigma = math.sqrt(variance)
    if isinstance(body, Box):
        return float(np.prod([_interval_mass(-h, h, sigma) for h in body.half_widths]))
    if isinstance(body, Ball):
        return float(gammainc(body.dimension / 2.0, body.radius**2 / (2.0 * variance)))
    row = _halfspace_row(body)
    if row is not None:
        a, b = row
        return _interval_mass(-math.inf, b / float(np.linalg.norm(a)), sigma)
    return grid_gaussian_volume(body, variance)[0]


def _grid_mass(body: ConvexBody, variance: Optional[float], points: int, half_span: float) -> float:
    n = body.dimension
    h = 2.0 * half_span / points
    axis = -half_span + h * (np.arange(points) + 0.5)
    if variance is None:
        w1 = np.full(points, h)
    else:
        w1 = h * np.exp(-0.5 * axis**2 / variance) / math.sqrt(2 * math.pi * variance)
    if n > 1:
        rest = np.stack(np.meshgrid(*([axis] * (n - 1)), indexing="ij"), -1).reshape(-1, n - 1)
        w_rest = np.prod(np.stack(np.meshgrid(*([w1] * (n - 1)), indexing="ij"), -1)
                         .reshape(-1, n - 1), axis=1)
    else:
        rest, w_rest = np.zeros((1, 0)), np.ones(1)
    total = 0.0
    # one slab per first-axis value keeps memory at points^(n-1) rows
    for x0, w0 in zip(axis, w1):
        X = np.column_stack([np.full(rest.shape[0], x0), rest])
        total += w0 * float(w_rest[body._membership(X)].sum())
    return total


def grid_gaussian_volume(body: ConvexBody, variance: Optional[float] = 1.0,
                         points: int = GRID_POINTS) -> Tuple[float, float]:
    """Midpoint tensor-grid estimate of the ``N(0, variance I)`` mass of ``body``.

    ``variance=None`` integrates the constant 1 instead (Lebesgue volume).
    Returns ``(value, error)`` where ``error`` is the change from the grid
    with half as many points per axis.
    """
    n = body.dimension
    if n > GRID_MAX_DIMENSION:
        raise QuadratureError(f"grid integration supports n <= {GRID_MAX_DIMENSION}, got {n}")
    if points < GRID_POINTS:
        raise ValueError(f"use at least {GRID_POINTS} points per axis")
    if variance is None:
        if not math.isfinite(body.outer_radius):
            raise QuadratureError("Lebesgue volume of an unbounded body")
        span = body.outer_radius
    else:
        span = min(body.outer_radius, 12.0 * math.sqrt(variance))
    fine = _grid_mass(body, variance, points, span)
    coarse = _grid_mass(body, variance, points // 2, span)
    return fine, abs(fine - coarse)


def log_gaussian_integral(body: ConvexBody, variance: float) -> float:
    """``log F(variance)`` where ``F(s) = int_K exp(-|x|^2 / (2 s)) dx``.

    ``variance = inf`` gives the log Lebesgue volume.
    """
    n = body.dimension
    if math.isinf(variance):
        vol = body.analytic_volume()
        if vol is None:
            vol = grid_gaussian_volume(body, None)[0]
        return math.log(vol)
    return 0.5 * n * math.log(2 * math.pi * variance) + math.log(quadrature_gaussian_volume(body, variance))


def second_moment_oracle(body: ConvexBody, var_cur: float, var_next: float) -> float:
    """``E(Y^2) / E(Y)^2`` for ``Y = f_next(X) / f_cur(X)`` with ``X ~ f_cur`` on ``K``.

    Equals ``F(var_cur) F(s) / F(var_next)^2`` where ``1/s = 2/var_next - 1/var_cur``.
    """
    inv = 2.0 / var_next - (0.0 if math.isinf(var_cur) else 1.0 / var_cur)
    if not inv > 0:
        # the integrand would grow like exp(+|x|^2 / ...); not covered here
        raise QuadratureError("second moment needs 2/var_next > 1/var_cur")
    s = 1.0 / inv
    return math.exp(log_gaussian_integral(body, var_cur) + log_gaussian_integral(body, s)
                    - 2.0 * log_gaussian_integral(body, var_next))


def fixed_rate_variance_oracle(body: ConvexBody, variance: float, n: Optional[int] = None,
                               alpha: Optional[float] = None) -> float:
    """``F(var/(1+a)) F(var/(1-a)) / F(var)^2`` with ``a = 1/n`` unless given.

    For the unrestricted Gaussian this is ``(1 - a^2)^(-n/2)``.
    """
    n = body.dimension if n is None else int(n)
    a = 1.0 / n if alpha is None else float(alpha)
    if not 0.0 <= a < 1.0:
        raise ValueError(f"alpha must lie in [0, 1), got {a}")
    if a == 0.0:
        return 1.0
    return math.exp(log_gaussian_integral(body, variance / (1 + a))
                    + log_gaussian_integral(body, variance / (1 - a))
                    - 2.0 * log_gaussian_integral(body, variance))


def warmness_oracle(body: ConvexBody, var_i: float, var_next: float) -> float:
    """``M(Q_i, Q_next) = F(var_next)/F(var_i) * sup_K f_i/f_next``.

    For a flattening step the supremum is 1, attained at the origin.
    ``var_next = inf`` (the uniform target) is allowed for bounded bodies.
    """
    if var_next < var_i:
        raise ValueError("warmness is computed for flattening steps only")
    if var_next == var_i:
        return 1.0
    return math.exp(log_gaussian_integral(body, var_next) - log_gaussian_integral(body, var_i))


def box_marginal_cdf(body: Box, axis: int, variance: float) -> Callable[[np.ndarray], np.ndarray]:
    """CDF of one coordinate of ``N(0, variance I)`` restricted to a box.

    Coordinates are independent under this law, so the marginal is a
    truncated normal; values come from quadrature of its density.
    """
    h = float(body.half_widths[axis])
    sigma = math.sqrt(variance)
    total = _interval_mass(-h, h, sigma)

    def cdf(t):
        t = np.clip(np.asarray(t, dtype=float), -h, h)
        flat = np.array([_interval_mass(-h, x, sigma) if x > -h else 0.0 for x in t.ravel()])
        return (flat / total).reshape(t.shape)

    return cdf


def restriction_excess(phase: GaussianPhase) -> float:
    """Unrestricted Gaussian mass outside the phase's restriction ball."""
    if phase.is_uniform:
        return 0.0
    return float(1.0 - gammainc(phase.dimension / 2.0, phase.restriction_radius**2 / (2 * phase.variance)))

