"""Metropolis ball walk on ``K`` intersected with a restriction ball.

Two front ends share the same step rule:

* :class:`WalkState` with :func:`ball_walk_step` / :func:`run_until_mixed`
  drives one chain, one proposal at a time.
* :class:`ChainEnsemble` advances many independent chains at once with
  array operations; the volume and sampling drivers use it.

Mixing budgets count *proper* steps only (proposals landing in the support);
proposals outside the support are *wasted* and leave the chain in place.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from ._validation import check_dimension, check_point, check_positive, check_rng
from .geometry import ConvexBody
from .phases import GaussianPhase

__all__ = [
    "WalkStuckError",
    "StepOutcome",
    "StepPolicy",
    "WalkState",
    "ChainEnsemble",
    "uniform_in_ball",
    "step_size",
    "proper_step_budget",
    "ball_walk_step",
    "run_until_mixed",
    "sample_initial",
    "map_speedy_to_target",
    "estimate_local_conductance",
    "shrink_factor",
    "map_exact_step",
]

PAPER_DELTA_DIVISOR = 4096.0
PAPER_MIXING_CONSTANT = 1e16
MAX_PROPOSAL_FACTOR = 100
MAX_INITIAL_REJECTIONS = 10**6
MAX_MAP_REJECTIONS = 10**3


class WalkStuckError(RuntimeError):
    """A walk exceeded its proposal cap or a rejection sampler its trial cap.

    Usually means the body violates the unit-ball-inside precondition.
    """


class StepOutcome(enum.Enum):
    MOVED = "moved"
    FILTER_REJECTED = "filter_rejected"
    WASTED = "wasted"
    LAZY_STAY = "lazy_stay"


def uniform_in_ball(rng: np.random.Generator, m: int, n: int, radius: float) -> np.ndarray:
    """``m`` uniform points in the origin-centred ball of the given radius."""
    Z = rng.standard_normal((m, n))
    r = radius * rng.random(m) ** (1.0 / n) / np.sqrt(np.einsum("ij,ij->i", Z, Z))
    Z *= r[:, None]
    return Z


def step_size(sigma: float, n: int, eps: float, divisor: float = PAPER_DELTA_DIVISOR) -> float:
    """Ball radius ``min(sigma, 1) / (divisor * sqrt(n * log(n / eps)))``."""
    check_positive(sigma, "sigma")
    n = check_dimension(n)
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    return min(sigma, 1.0) / (divisor * math.sqrt(n * math.log(n / eps)))


def proper_step_budget(variance: float, n: int, nu: float,
                       mixing_constant: float = PAPER_MIXING_CONSTANT) -> int:
    """``ceil(mixing_constant * max(variance, 1) * n^2 * log(1/nu))``."""
    if not 0.0 < nu < 1.0:
        raise ValueError(f"nu must lie in (0, 1), got {nu}")
    check_positive(mixing_constant, "mixing_constant")
    # round before ceil so exact products (e.g. 100.00000000000001) stay exact
    raw = mixing_constant * max(variance, 1.0) * n * n * math.log(1.0 / nu)
    return int(math.ceil(round(raw, 9)))


def shrink_factor(n: int) -> float:
    """The contraction ``1 - 1/(2n)`` used when mapping speedy-walk points."""
    return 1.0 - 1.0 / (2.0 * n)


def map_exact_step(n: int) -> float:
    """Largest step for which the speedy-to-target mapping is exact.

    With ``delta <= 1 - c = 1/(2n)`` and the unit ball inside ``K``,
    ``c K + delta B`` lies in ``K``, so every stretched point has local
    conductance 1 at its preimage.
    """
    return 1.0 - shrink_factor(n)


@dataclass
class StepPolicy:
    delta: float
    proper_step_budget: int
    lazy: bool = True
    mixing_constant: float = PAPER_MIXING_CONSTANT

    def __post_init__(self):
        check_positive(self.delta, "delta")
        if self.proper_step_budget < 0:
            raise ValueError("proper_step_budget must be non-negative")


@dataclass
class WalkState:
    """One chain: its position, random stream and step counters."""

    position: np.ndarray
    rng: np.random.Generator
    proper_steps: int = 0
    wasted_steps: int = 0
    filter_rejections: int = 0
    lazy_stays: int = 0
    sq_norm: float = field(init=False)

    def __post_init__(self):
        self.position = np.array(self.position, dtype=float)
        self.rng = check_rng(self.rng)
        self.sq_norm = float(self.position @ self.position)

    @property
    def proposals(self) -> int:
        return self.proper_steps + self.wasted_steps

    def move_to(self, y: np.ndarray) -> None:
        self.position = y
        self.sq_norm = float(y @ y)


def ball_walk_step(state: WalkState, phase: GaussianPhase, policy: StepPolicy,
                   body: ConvexBody) -> StepOutcome:
    rng = state.rng
    if policy.lazy and rng.random() < 0.5:
        state.lazy_stays += 1
        return StepOutcome.LAZY_STAY
    n = state.position.shape[0]
    y = state.position + uniform_in_ball(rng, 1, n, policy.delta)[0]
    sq = float(y @ y)
    # restriction ball first: it is free, the oracle is not
    if not (phase.in_restriction(sq) and body.contains(y)):
        state.wasted_steps += 1
        return StepOutcome.WASTED
    state.proper_steps += 1
    log_accept = float(phase.log_weight(sq) - phase.log_weight(state.sq_norm))
    if rng.random() < math.exp(min(log_accept, 0.0)):
        state.move_to(y)
        return StepOutcome.MOVED
    state.filter_rejections += 1
    return StepOutcome.FILTER_REJECTED


def run_until_mixed(state: WalkState, phase: GaussianPhase, policy: StepPolicy,
                    body: ConvexBody, max_proposal_factor: int = MAX_PROPOSAL_FACTOR) -> WalkState:
    """Step until ``policy.proper_step_budget`` more proper steps are taken.

    Raises :class:`WalkStuckError` after ``max_proposal_factor`` times the
    budget in proposals.
    """
    target = state.proper_steps + policy.proper_step_budget
    start = state.proposals
    cap = max_proposal_factor * policy.proper_step_budget
    while state.proper_steps < target:
        ball_walk_step(state, phase, policy, body)
        if state.proposals - start > cap:
            raise WalkStuckError(
                f"walk stuck: {state.proposals - start} proposals for "
                f"{state.proper_steps - target + policy.proper_step_budget} proper steps"
            )
    return state


def sample_initial(body: ConvexBody, variance: float, rng,
                   max_rejections: int = MAX_INITIAL_REJECTIONS) -> np.ndarray:
    """Rejection sample from ``N(0, variance I)`` restricted to ``K`` and the
    phase's restriction ball."""
    rng = check_rng(rng)
    phase = GaussianPhase(variance, body.dimension)
    sigma = math.sqrt(variance)
    for _ in range(max_rejections):
        x = sigma * rng.standard_normal(body.dimension)
        if phase.in_restriction(float(x @ x)) and body.contains(x):
            return x
    raise WalkStuckError(
        f"unit ball not inside body: {max_rejections} consecutive initial rejections"
    )


def map_speedy_to_target(points: Iterable, phase: GaussianPhase, body: ConvexBody, rng,
                         max_rejections: int = MAX_MAP_REJECTIONS) -> np.ndarray:
    """Turn points distributed like ``l(x) f(x)`` into (approximately) ``f`` samples.

    Each incoming ``u`` is stretched to ``v = u / c`` with ``c = 1 - 1/(2n)``;
    ``v`` is kept with probability ``f(v) / f(u)`` when it lies in the
    support. The first kept ``v`` is returned.
    """
    rng = check_rng(rng)
    c = shrink_factor(phase.dimension)
    rejections = 0
    for u in points:
        u = check_point(u, phase.dimension)
        v = u / c
        sq_v = float(v @ v)
        if phase.in_restriction(sq_v) and body.contains(v):
            log_accept = float(phase.log_weight(sq_v) - phase.log_weight(float(u @ u)))
            if rng.random() < math.exp(min(log_accept, 0.0)):
                return v
        rejections += 1
        if rejections > max_rejections:
            raise WalkStuckError(f"speedy-to-target mapping rejected {rejections} points in a row")
    raise WalkStuckError("point stream exhausted before a point was accepted")


def estimate_local_conductance(x, delta: float, body: ConvexBody, trials: int, rng) -> float:
    """Monte Carlo estimate of ``vol(K & (x + delta B)) / vol(delta B)``."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    x = check_point(x, body.dimension)
    rng = check_rng(rng)
    Y = x + uniform_in_ball(rng, int(trials), body.dimension, delta)
    return float(np.mean(body.contains_batch(Y)))


class ChainEnsemble:
    """Independent ball-walk chains advanced together.

    Lazy steps are not simulated one by one: a lazy stay changes neither the
    position nor any budget, so the number of stays preceding each proposal
    is drawn from its geometric law and only tallied.
    """

    def __init__(self, positions, rng):
        self.positions = np.array(positions, dtype=float, ndmin=2)
        self.rng = check_rng(rng)
        m = self.positions.shape[0]
        self.sq_norms = np.einsum("ij,ij->i", self.positions, self.positions)
        self.proper_steps = np.zeros(m, dtype=np.int64)
        self.wasted_steps = np.zeros(m, dtype=np.int64)
        self.filter_rejections = np.zeros(m, dtype=np.int64)
        self.lazy_stays = np.zeros(m, dtype=np.int64)

    @classmethod
    def from_initial(cls, body: ConvexBody, variance: float, m: int, rng,
                     max_rejections: int = MAX_INITIAL_REJECTIONS) -> "ChainEnsemble":
        """Start ``m`` chains at independent draws of the initial phase."""
        rng = check_rng(rng)
        phase = GaussianPhase(variance, body.dimension)
        sigma = math.sqrt(variance)
        n = body.dimension
        out = np.empty((m, n))
        filled = 0
        tries = 0
        while filled < m:
            want = m - filled
            X = sigma * rng.standard_normal((want, n))
            sq = np.einsum("ij,ij->i", X, X)
            ok = phase.in_restriction(sq)
            j = np.flatnonzero(ok)
            if j.size:
                ok[j] = body.contains_batch(X[j])
            good = X[ok]
            out[filled:filled + good.shape[0]] = good
            filled += good.shape[0]
            tries += want
            if filled == 0 and tries >= max_rejections:
                raise WalkStuckError(
                    f"unit ball not inside body: {tries} consecutive initial rejections"
                )
        return cls(out, rng)

    def __len__(self):
        return self.positions.shape[0]

    @property
    def dimension(self) -> int:
        return self.positions.shape[1]

    @property
    def proposals(self) -> np.ndarray:
        return self.proper_steps + self.wasted_steps

    def totals(self) -> dict:
        return {
            "proper_steps": int(self.proper_steps.sum()),
            "wasted_steps": int(self.wasted_steps.sum()),
            "filter_rejections": int(self.filter_rejections.sum()),
            "lazy_stays": int(self.lazy_stays.sum()),
        }

    def advance(self, phase: GaussianPhase, body: ConvexBody, delta: float, budget: int,
                lazy: bool = True, chains: Optional[np.ndarray] = None,
                max_proposal_factor: int = MAX_PROPOSAL_FACTOR) -> None:
        """Advance each selected chain by ``budget`` proper steps."""
        if budget <= 0:
            return
        rng = self.rng
        n = self.dimension
        active = np.arange(len(self)) if chains is None else np.asarray(chains)
        target = self.proper_steps[active] + budget
        start = self.proposals[active]
        cap = max_proposal_factor * budget
        precision = phase.precision
        radius_sq = phase.restriction_radius**2
        it = 0
        while active.size:
            it += 1
            full = active.size == len(self)
            m = active.size
            X = self.positions if full else self.positions[active]
            sq_x = self.sq_norms if full else self.sq_norms[active]
            Y = X + uniform_in_ball(rng, m, n, delta)
            sq = np.einsum("ij,ij->i", Y, Y)
            inside = sq <= radius_sq
            if inside.all():
                inside = body.contains_batch(Y)
            else:
                j = np.flatnonzero(inside)
                inside[j] = body.contains_batch(Y[j])
            u = rng.random(m)
            if precision:
                accept = inside & (u < np.exp(np.minimum(0.5 * precision * (sq_x - sq), 0.0)))
            else:
                accept = inside
            if full:
                np.copyto(self.positions, Y, where=accept[:, None])
                np.copyto(self.sq_norms, sq, where=accept)
                self.proper_steps += inside
                self.wasted_steps += ~inside
                self.filter_rejections += inside & ~accept
            else:
                moved = active[accept]
                self.positions[moved] = Y[accept]
                self.sq_norms[moved] = sq[accept]
                self.proper_steps[active] += inside
                self.wasted_steps[active] += ~inside
                self.filter_rejections[active] += inside & ~accept

            keep = self.proper_steps[active] < target
            if not keep.all() or it % 64 == 0:
                made = self.proposals[active] - start
                if made.max() > cap:
                    raise WalkStuckError(
                        f"walk stuck: a chain exceeded {cap} proposals for {budget} proper steps"
                    )
                if not keep.all():
                    if lazy:
                        self._tally_lazy(active[~keep], made[~keep])
                    active, target, start = active[keep], target[keep], start[keep]

    def _tally_lazy(self, chains, proposals):
        # stays before each proposal are Geometric(1/2) - 1; their sum over
        # `proposals` proposals is negative binomial
        self.lazy_stays[chains] += self.rng.negative_binomial(np.maximum(proposals, 1), 0.5) * (proposals > 0)

    def try_map(self, phase: GaussianPhase, body: ConvexBody) -> np.ndarray:
        """One speedy-to-target attempt for every chain.

        Accepted chains jump to their stretched point; rejected chains stay.
        Returns the boolean mask of accepted chains.
        """
        c = shrink_factor(self.dimension)
        V = self.positions / c
        sq_v = self.sq_norms / (c * c)
        ok = phase.in_restriction(sq_v)
        j = np.flatnonzero(ok)
        if j.size:
            ok[j] = body.contains_batch(V[j])
        u = self.rng.random(len(self))
        log_accept = phase.log_weight(sq_v) - phase.log_weight(self.sq_norms)
        ok &= u < np.exp(np.minimum(log_accept, 0.0))
        self.positions[ok] = V[ok]
        self.sq_norms[ok] = sq_v[ok]
        return ok
