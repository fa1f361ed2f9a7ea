"""Gaussian phase functions and the two-regime cooling schedule."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ._validation import check_dimension, check_point, check_positive

__all__ = [
    "UNIFORM_VOLUME",
    "GAUSSIAN_VOLUME",
    "SAMPLE_ONLY",
    "GaussianPhase",
    "CoolingSchedule",
    "cooling_rate",
    "build_schedule",
    "log_density_ratio",
    "initial_variance",
]

UNIFORM_VOLUME = "uniform_volume"
GAUSSIAN_VOLUME = "gaussian_volume"
SAMPLE_ONLY = "sample_only"
_TARGETS = (UNIFORM_VOLUME, GAUSSIAN_VOLUME, SAMPLE_ONLY)

# Radius of the restriction ball, in units of sigma*sqrt(n).
RESTRICTION_FACTOR = 4.0


def initial_variance(n: int) -> float:
    return 1.0 / (4.0 * n)


def _precision(variance: float) -> float:
    # 1/inf is exactly zero: the uniform phase has a flat density
    return 0.0 if math.isinf(variance) else 1.0 / variance


@dataclass(frozen=True)
class GaussianPhase:
    """The density ``exp(-|x|^2 / (2 variance))`` on ``K`` intersected with
    the ball of radius ``4 sigma sqrt(n)``.

    ``variance = inf`` encodes the uniform distribution on ``K`` (no
    restriction ball).
    """

    variance: float
    dimension: int

    def __post_init__(self):
        check_positive(self.variance, "variance")
        check_dimension(self.dimension)

    @property
    def precision(self) -> float:
        return _precision(self.variance)

    @property
    def is_uniform(self) -> bool:
        return math.isinf(self.variance)

    @property
    def sigma(self) -> float:
        return math.sqrt(self.variance)

    @property
    def restriction_radius(self) -> float:
        return RESTRICTION_FACTOR * math.sqrt(self.variance * self.dimension)

    def log_weight(self, sq_norms):
        """Log density (up to normalisation) ignoring the support."""
        return -0.5 * self.precision * np.asarray(sq_norms, dtype=float)

    def in_restriction(self, sq_norms):
        return np.asarray(sq_norms) <= self.restriction_radius**2

    def log_density_at(self, x, body) -> float:
        """Log density at ``x``: ``-|x|^2/(2 sigma^2)`` on the support, ``-inf`` off it."""
        x = check_point(x, self.dimension)
        sq = float(x @ x)
        if not self.in_restriction(sq) or not body.contains(x):
            return -math.inf
        return float(self.log_weight(sq))


def cooling_rate(variance: float, n: int, C: float) -> float:
    """Multiplicative step applied to the variance.

    ``1 + 1/n`` while ``variance <= 1`` and ``1 + variance / (C^2 n)`` beyond.
    """
    check_positive(variance, "variance")
    n = check_dimension(n)
    if C < 1:
        raise ValueError(f"roundness constant C must be >= 1, got {C}")
    if variance <= 1.0:
        return 1.0 + 1.0 / n
    return 1.0 + variance / (C * C * n)


@dataclass(frozen=True)
class CoolingSchedule:
    n: int
    C: float
    target: str
    variances: Tuple[float, ...]
    final_variance: Optional[float] = None

    def __len__(self):
        return len(self.variances)

    @property
    def n_phases(self) -> int:
        """Number of ratio phases, one per consecutive variance pair."""
        return len(self.variances) - 1

    def pairs(self):
        return list(zip(self.variances[:-1], self.variances[1:]))

    def phase(self, i: int) -> GaussianPhase:
        return GaussianPhase(self.variances[i], self.n)


def build_schedule(n: int, C: float = 1.0, target: str = UNIFORM_VOLUME,
                   final_variance: Optional[float] = None) -> CoolingSchedule:
    """Variances from ``1/(4n)`` up to the target of the run.

    ``uniform_volume``
        ends with ``inf`` once a step would exceed ``C^2 n``;
    ``gaussian_volume``
        ends exactly at ``1`` (the last step is clamped);
    ``sample_only``
        ends exactly at ``final_variance``.
    """
    n = check_dimension(n)
    if target not in _TARGETS:
        raise ValueError(f"unknown target {target!r}; expected one of {_TARGETS}")
    if C < 1:
        raise ValueError(f"roundness constant C must be >= 1, got {C}")
    if target == GAUSSIAN_VOLUME:
        stop = 1.0
    elif target == SAMPLE_ONLY:
        if final_variance is None:
            raise ValueError("sample_only schedules need final_variance")
        stop = check_positive(final_variance, "final_variance")
    else:
        stop = C * C * n

    v = initial_variance(n)
    if target != UNIFORM_VOLUME and stop <= v:
        return CoolingSchedule(n, float(C), target, (stop,), final_variance)
    out = [v]
    while True:
        nxt = v * cooling_rate(v, n, C)
        if nxt > stop:
            if target == UNIFORM_VOLUME:
                out.append(math.inf)
            elif out[-1] < stop:
                out.append(stop)
            break
        out.append(nxt)
        v = nxt
        if target != UNIFORM_VOLUME and v == stop:
            break
    return CoolingSchedule(n, float(C), target, tuple(out), final_variance)


def log_density_ratio(phase_next: GaussianPhase, phase_cur: GaussianPhase, x, body=None) -> float:
    """``log f_next(x) - log f_cur(x)`` for ``x`` in the support of ``phase_cur``.

    Equal to ``|x|^2/2 * (1/var_cur - 1/var_next)``, evaluated without
    forming either density. When ``body`` is given, membership of ``x`` in
    it is also checked (one oracle call).
    """
    if phase_next.dimension != phase_cur.dimension:
        raise ValueError("phases have different dimensions")
    x = check_point(x, phase_cur.dimension)
    sq = float(x @ x)
    if not phase_cur.in_restriction(sq) or (body is not None and not body.contains(x)):
        raise ValueError("x has zero density under the current phase")
    return 0.5 * sq * (phase_cur.precision - phase_next.precision)
