"""Constant profiles for the walk and the estimator."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

__all__ = ["Profile", "PAPER", "PRACTICAL", "get_profile"]


@dataclass(frozen=True)
class Profile:
    """Constants that turn the asymptotic recipe into a runnable one.

    Attributes
    ----------
    mixing_constant
        Multiplier in the proper-step budget
        ``mixing_constant * max(var, 1) * n^2 * log(1/nu)``.
    delta_divisor
        Divisor in ``delta = min(sigma, 1) / (divisor * sqrt(n log(n/eps)))``.
    k_constant
        Multiplier in the per-phase sample count ``k_constant * log(C^2 n) / eps^2``.
    parallel_chains
        Number of chains advanced together; ``None`` sizes the ensemble so
        that one round yields about ``k`` samples.
    """

    name: str
    mixing_constant: float
    delta_divisor: float
    k_constant: float
    parallel_chains: Optional[int]

    def to_dict(self) -> dict:
        return asdict(self)


PAPER = Profile("paper", mixing_constant=1e16, delta_divisor=4096.0, k_constant=512.0,
                parallel_chains=1)
PRACTICAL = Profile("practical", mixing_constant=0.5, delta_divisor=1.0, k_constant=32.0,
                    parallel_chains=None)

_PROFILES = {p.name: p for p in (PAPER, PRACTICAL)}


def get_profile(profile) -> Profile:
    if isinstance(profile, Profile):
        return profile
    try:
        return _PROFILES[profile]
    except KeyError:
        raise ValueError(f"unknown profile {profile!r}; expected one of {sorted(_PROFILES)}") from None
