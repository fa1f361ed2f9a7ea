"""Gaussian cooling: volume, Gaussian volume and uniform sampling.

The three drivers share one loop. Chains start at the concentrated Gaussian
``N(0, I/(4n))``, walk a mixing budget at each variance of the schedule and
carry their final positions into the next phase as a warm start. In the
volume modes each phase also records ``Y = f_next(X) / f_cur(X)`` for ``k``
samples; the product of the phase means, times the initial Gaussian's
normalisation, is the estimate.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from ._validation import check_eps
from .geometry import ConvexBody
from .phases import (
    GAUSSIAN_VOLUME,
    SAMPLE_ONLY,
    UNIFORM_VOLUME,
    CoolingSchedule,
    GaussianPhase,
    build_schedule,
    initial_variance,
)
from .profiles import Profile, get_profile
from .walk import (
    ChainEnsemble,
    WalkStuckError,
    map_exact_step,
    proper_step_budget,
    step_size,
)

__all__ = [
    "CoolingConfig",
    "PhaseEstimate",
    "VolumeReport",
    "sample_count",
    "estimate_phase_ratio",
    "uniform_volume",
    "gaussian_volume",
    "uniform_sample",
    "gaussian_sample",
    "uniform_acceptance",
]


@dataclass(frozen=True)
class CoolingConfig:
    """Run options. ``None`` overrides fall back to the profile's constants."""

    eps: float = 0.25
    seed: Optional[int] = None
    profile: str = "practical"
    mixing_constant: Optional[float] = None
    delta_divisor: Optional[float] = None
    k: Optional[int] = None
    parallel_chains: Optional[int] = None
    lazy: bool = True
    speedy_map: bool = True
    boost_p: Optional[float] = None
    max_retries: int = 5

    def __post_init__(self):
        check_eps(self.eps)
        get_profile(self.profile)
        if self.boost_p is not None and not 0.0 < self.boost_p < 1.0:
            raise ValueError(f"boost_p must lie in (0, 1), got {self.boost_p}")

    def with_seed(self) -> "CoolingConfig":
        """Copy with a concrete seed, drawing fresh entropy when absent."""
        if self.seed is not None:
            return self
        return replace(self, seed=int(np.random.SeedSequence().entropy % (2**63)))

    @property
    def resolved_profile(self) -> Profile:
        p = get_profile(self.profile)
        return replace(
            p,
            mixing_constant=p.mixing_constant if self.mixing_constant is None else float(self.mixing_constant),
            delta_divisor=p.delta_divisor if self.delta_divisor is None else float(self.delta_divisor),
            parallel_chains=p.parallel_chains if self.parallel_chains is None else int(self.parallel_chains),
        )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "CoolingConfig":
        names = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in d.items() if k in names})


@dataclass(frozen=True)
class PhaseEstimate:
    phase_index: int
    sigma_sq_cur: float
    sigma_sq_next: float
    W: float
    log_W: float
    second_moment_ratio: float
    samples: int
    proper_steps: int
    proposals: int
    max_log_Y: float

    def to_dict(self) -> dict:
        return {
            "index": self.phase_index,
            "sigma_sq_cur": _json_float(self.sigma_sq_cur),
            "sigma_sq_next": _json_float(self.sigma_sq_next),
            "W": self.W,
            "log_W": self.log_W,
            "second_moment_ratio": self.second_moment_ratio,
            "samples": self.samples,
            "proper_steps": self.proper_steps,
            "proposals": self.proposals,
        }


@dataclass(frozen=True)
class VolumeReport:
    """Outcome of a volume run.

    ``log_estimate`` is the log of the reported quantity: the Lebesgue
    volume in ``uniform_volume`` mode and the standard Gaussian measure of
    ``K`` in ``gaussian_volume`` mode. ``log_integral`` is the unnormalised
    ``log((2 pi s0)^(n/2) W_1 ... W_m)`` in both modes.
    """

    mode: str
    estimate: float
    log_estimate: float
    log_integral: float
    phases: List[PhaseEstimate]
    total_oracle_calls: int
    config: dict = field(default_factory=dict)

    @property
    def raw_integral(self) -> float:
        return _safe_exp(self.log_integral)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "estimate": _json_float(self.estimate),
            "log_estimate": self.log_estimate,
            "log_integral": self.log_integral,
            "relative_error_target": self.config.get("eps"),
            "phases": [p.to_dict() for p in self.phases],
            "total_oracle_calls": self.total_oracle_calls,
            "config_echo": self.config,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), allow_nan=False, **kwargs)


def _json_float(x: float):
    # JSON has no infinity: null marks the uniform (infinite variance) phase
    # and estimates too large for a double (log_estimate still carries them)
    return None if math.isinf(x) else x


def _safe_exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def sample_count(n: int, C: float, eps: float, k_constant: float) -> int:
    """Samples per phase, ``ceil(k_constant * log(C^2 n) / eps^2)``.

    The logarithm is floored at 1 so that ``C^2 n`` close to 1 (Gaussian
    volume in one dimension) still gets a positive count.
    """
    return int(math.ceil(round(k_constant * max(math.log(C * C * n), 1.0) / eps**2, 9)))


def uniform_acceptance(sq_norms, C: float, n: int) -> np.ndarray:
    """Keep-probability turning ``N(0, C^2 n I)|K`` samples into uniform ones.

    ``exp((|x|^2 - C^2 n) / (2 C^2 n))``: proportional to the uniform over
    Gaussian density ratio and equal to 1 on the sphere of radius ``C sqrt(n)``.
    """
    s = C * C * n
    return np.exp(np.minimum((np.asarray(sq_norms, dtype=float) - s) / (2.0 * s), 0.0))


class _Walker:
    """Holds the resolved constants and the chain ensemble for one run.

    With the speedy-to-target mapping on, each round makes one mapping
    attempt per chain and only accepted chains yield a sample, so the
    default chain count is twice the number of samples wanted.
    """

    def __init__(self, body: ConvexBody, schedule: CoolingSchedule, cfg: CoolingConfig,
                 rng: np.random.Generator, k: int):
        self.body = body
        self.n = body.dimension
        self.cfg = cfg
        self.profile = cfg.resolved_profile
        self.nu = (cfg.eps / self.n) ** 16
        self.k = k
        default = 2 * k if cfg.speedy_map else k
        self.chains = max(1, self.profile.parallel_chains or default)
        self.ensemble = ChainEnsemble.from_initial(body, schedule.variances[0], self.chains, rng)

    def delta(self, variance: float) -> float:
        delta = step_size(math.sqrt(variance), self.n, self.cfg.eps, self.profile.delta_divisor)
        if self.cfg.speedy_map:
            # the stretch by 1/c only undoes the speedy walk's l(x) weighting
            # when every point of c*K sits a full step inside K
            delta = min(delta, map_exact_step(self.n))
        return delta

    def budget(self, variance: float) -> int:
        return proper_step_budget(variance, self.n, self.nu, self.profile.mixing_constant)

    def mix(self, phase: GaussianPhase) -> None:
        """Advance every chain one mixing budget."""
        self.ensemble.advance(phase, self.body, self.delta(phase.variance),
                              self.budget(phase.variance), self.cfg.lazy)

    def draw(self, phase: GaussianPhase) -> np.ndarray:
        """Mix, then return the indices of chains whose positions are samples."""
        self.mix(phase)
        if not self.cfg.speedy_map:
            return np.arange(self.chains)
        return np.flatnonzero(self.ensemble.try_map(phase, self.body))

    def collect(self, phase: GaussianPhase, count: int, what=None) -> np.ndarray:
        """Draw rounds until ``count`` samples are in hand; rows in round order."""
        what = what or (lambda ens, idx: ens.positions[idx])
        chunks, have = [], 0
        while have < count:
            got = what(self.ensemble, self.draw(phase))
            chunks.append(got)
            have += len(got)
        return np.concatenate(chunks)[:count]


def _phase_stats(index, v_cur, v_next, log_y, proper, proposals) -> PhaseEstimate:
    k = log_y.size
    log_w = float(logsumexp(log_y) - math.log(k))
    # second moment ratio through the centred form keeps it >= 1 in floating point
    top = float(log_y.max())
    y = np.exp(log_y - top)
    mean = y.mean()
    ratio = 1.0 + float(np.mean((y - mean) ** 2)) / float(mean * mean)
    return PhaseEstimate(index, v_cur, v_next, _safe_exp(log_w), log_w, ratio, k,
                         proper, proposals, top)


def estimate_phase_ratio(body: ConvexBody, sigma_sq_cur: float, sigma_sq_next: float, k: int,
                         walker: Optional[_Walker] = None, phase_index: int = 0,
                         cfg: Optional[CoolingConfig] = None, seed=None) -> PhaseEstimate:
    """Estimate ``F(sigma_sq_next) / F(sigma_sq_cur)`` from ``k`` walk samples.

    Without a ``walker`` (warm chains from the previous phase) a fresh one
    is started from the initial Gaussian; this is mostly useful in tests.
    """
    if sigma_sq_next < sigma_sq_cur:
        raise ValueError("phases must not get sharper")
    if walker is None:
        cfg = (cfg or CoolingConfig()).with_seed()
        sched = CoolingSchedule(body.dimension, body.roundness, SAMPLE_ONLY, (sigma_sq_cur,))
        walker = _Walker(body, sched, cfg, np.random.default_rng(seed if seed is not None else cfg.seed), k)
    n = body.dimension
    cur = GaussianPhase(sigma_sq_cur, n)
    nxt = GaussianPhase(sigma_sq_next, n)
    gap = cur.precision - nxt.precision
    ens = walker.ensemble
    before_proper, before_props = int(ens.proper_steps.sum()), int(ens.proposals.sum())
    sq = walker.collect(cur, k, lambda ens, idx: ens.sq_norms[idx])
    log_y = 0.5 * gap * sq
    return _phase_stats(phase_index, sigma_sq_cur, sigma_sq_next, log_y,
                        int(ens.proper_steps.sum()) - before_proper,
                        int(ens.proposals.sum()) - before_props)


def _seed_for(seed: int, run: int, attempt: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(seed, spawn_key=(run, attempt))


def _volume_run(body, schedule, cfg, k, mode, run_index):
    last_error = None
    for attempt in range(cfg.max_retries + 1):
        rng = np.random.default_rng(_seed_for(cfg.seed, run_index, attempt))
        calls_before = body.thread_oracle_calls()
        try:
            walker = _Walker(body, schedule, cfg, rng, k)
            phases = [
                estimate_phase_ratio(body, v_cur, v_next, k, walker, phase_index=i)
                for i, (v_cur, v_next) in enumerate(schedule.pairs())
            ]
        except WalkStuckError as err:
            last_error = err
            continue
        n = body.dimension
        log_integral = 0.5 * n * math.log(2 * math.pi * schedule.variances[0])
        log_integral += math.fsum(p.log_W for p in phases)
        log_est = log_integral
        if mode == GAUSSIAN_VOLUME:
            log_est -= 0.5 * n * math.log(2 * math.pi)
        calls = body.thread_oracle_calls() - calls_before
        return log_est, log_integral, phases, calls, attempt
    raise WalkStuckError(f"{cfg.max_retries + 1} attempts failed; last: {last_error}")


def _drive_volume(body: ConvexBody, cfg: CoolingConfig, mode: str) -> VolumeReport:
    cfg = cfg.with_seed()
    profile = cfg.resolved_profile
    n = body.dimension
    if mode == UNIFORM_VOLUME:
        if not math.isfinite(body.outer_radius):
            raise ValueError("uniform volume needs a bounded body (finite outer_radius)")
        if cfg.eps < 2.0 ** (-n):
            raise ValueError(f"eps must be at least 2^-n = {2.0 ** (-n):g}")
        C = body.roundness
    else:
        C = 1.0
    schedule = build_schedule(n, C, mode)
    k = cfg.k if cfg.k is not None else sample_count(n, C, cfg.eps, profile.k_constant)

    runs = 1
    if cfg.boost_p is not None:
        runs = max(1, math.ceil(math.log(1.0 / cfg.boost_p)))
        runs += 1 - runs % 2  # odd, so the median is one of the runs
    results = [_volume_run(body, schedule, cfg, k, mode, r) for r in range(runs)]
    order = sorted(range(runs), key=lambda r: results[r][0])
    log_est, log_integral, phases, _, attempts = results[order[runs // 2]]

    echo = cfg.to_dict()
    echo.update(
        n=n, C=C, k=k, nu=(cfg.eps / n) ** 16, body=body.to_spec(), mode=mode,
        profile_constants=profile.to_dict(), boost_runs=runs,
        boost_estimates=[_safe_exp(r[0]) for r in results] if runs > 1 else None,
        retries=attempts,
    )
    return VolumeReport(
        mode=mode,
        estimate=_safe_exp(log_est),
        log_estimate=log_est,
        log_integral=log_integral,
        phases=phases,
        total_oracle_calls=int(sum(r[3] for r in results)),
        config=echo,
    )


def _make_config(cfg, eps, seed, profile, overrides) -> CoolingConfig:
    if cfg is None:
        cfg = CoolingConfig(eps=eps, seed=seed, profile=profile, **overrides)
    elif overrides:
        cfg = replace(cfg, **overrides)
    return cfg


def uniform_volume(body: ConvexBody, eps: float = 0.25, seed: Optional[int] = None,
                   profile: str = "practical", *, config: Optional[CoolingConfig] = None,
                   **overrides) -> VolumeReport:
    """Estimate ``vol(K)`` for ``B_n <= K <= C sqrt(n) B_n``.

    ``C`` is taken from the body's ``outer_radius``. Extra keyword
    arguments override fields of :class:`CoolingConfig`.

    Examples
    --------
    >>> from gaussian_cooling import Box, uniform_volume
    >>> rep = uniform_volume(Box.cube(2), eps=0.25, seed=1)
    >>> abs(rep.estimate / 4 - 1) < 0.25
    True
    """
    return _drive_volume(body, _make_config(config, eps, seed, profile, overrides), UNIFORM_VOLUME)


def gaussian_volume(body: ConvexBody, eps: float = 0.25, seed: Optional[int] = None,
                    profile: str = "practical", *, config: Optional[CoolingConfig] = None,
                    **overrides) -> VolumeReport:
    """Estimate the standard Gaussian measure of ``K`` (which must contain ``B_n``).

    The schedule stops at variance 1; the returned estimate is normalised
    to a probability and the unnormalised integral of ``exp(-|x|^2/2)``
    over ``K`` is kept in :attr:`VolumeReport.log_integral`.
    """
    return _drive_volume(body, _make_config(config, eps, seed, profile, overrides), GAUSSIAN_VOLUME)


def _cool_to(body, final_variance, C, cfg, rng, count):
    # intermediate phases only warm the chains; no mapping there
    schedule = build_schedule(body.dimension, C, SAMPLE_ONLY, final_variance)
    walker = _Walker(body, schedule, cfg, rng, count)
    for v in schedule.variances[:-1]:
        walker.mix(GaussianPhase(v, body.dimension))
    return walker


def gaussian_sample(body: ConvexBody, variance: float, count: int, eps: float = 0.25,
                    seed: Optional[int] = None, profile: str = "practical", *,
                    config: Optional[CoolingConfig] = None, **overrides) -> np.ndarray:
    """``count`` points from ``N(0, variance I)`` restricted to ``K``.

    Cools from the initial Gaussian to ``variance``; at the final variance
    chains mix and contribute their (mapped) positions, round after round,
    until ``count`` points are collected.
    """
    cfg = _make_config(config, eps, seed, profile, overrides).with_seed()
    if count < 1:
        raise ValueError("count must be positive")
    rng = np.random.default_rng(_seed_for(cfg.seed, 0, 0))
    C = max(body.roundness, math.sqrt(variance / body.dimension))
    walker = _cool_to(body, variance, C, cfg, rng, count)
    return walker.collect(GaussianPhase(variance, body.dimension), count)


def uniform_sample(body: ConvexBody, eps: float = 0.25, count: int = 1,
                   seed: Optional[int] = None, profile: str = "practical", *,
                   config: Optional[CoolingConfig] = None, **overrides) -> np.ndarray:
    """``count`` approximately uniform points from ``K``.

    Chains are cooled to ``N(0, C^2 n I)|K`` and each point is kept with
    probability :func:`uniform_acceptance`; chains mix again between rounds.
    """
    cfg = _make_config(config, eps, seed, profile, overrides).with_seed()
    if not math.isfinite(body.outer_radius):
        raise ValueError("uniform sampling needs a bounded body (finite outer_radius)")
    n = body.dimension
    C = body.roundness
    if count < 1:
        raise ValueError("count must be positive")
    rng = np.random.default_rng(_seed_for(cfg.seed, 0, 0))
    walker = _cool_to(body, C * C * n, C, cfg, rng, count)

    def accepted(ens, idx):
        keep = rng.random(idx.size) < uniform_acceptance(ens.sq_norms[idx], C, n)
        return ens.positions[idx[keep]]

    return walker.collect(GaussianPhase(C * C * n, n), count, accepted)
