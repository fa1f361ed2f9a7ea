"""scikit-learn style wrappers around the functional drivers.

Fitting takes a :class:`ConvexBody` (or a JSON-style body spec dict) in
place of a data matrix; hyperparameters follow the usual ``get_params`` /
``set_params`` protocol so the estimators clone and grid-search normally.
"""
from __future__ import annotations

from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .estimator import CoolingConfig, gaussian_sample, gaussian_volume, uniform_sample, uniform_volume
from .geometry import ConvexBody

__all__ = ["GaussianCoolingVolume", "TruncatedGaussianSampler", "UniformSampler", "check_body"]


def check_body(body) -> ConvexBody:
    """Accept a body or a body spec dict; return a body."""
    if isinstance(body, ConvexBody):
        return body
    if isinstance(body, dict):
        from .cli import body_from_spec
        return body_from_spec(body)
    raise TypeError(f"expected a ConvexBody or a body spec dict, got {type(body).__name__}")


class _CoolingParams(BaseEstimator):
    def __init__(self, eps=0.25, seed=None, profile="practical", mixing_constant=None,
                 delta_divisor=None, k=None, parallel_chains=None):
        self.eps = eps
        self.seed = seed
        self.profile = profile
        self.mixing_constant = mixing_constant
        self.delta_divisor = delta_divisor
        self.k = k
        self.parallel_chains = parallel_chains

    def _config(self, **extra) -> CoolingConfig:
        return CoolingConfig(eps=self.eps, seed=self.seed, profile=self.profile,
                             mixing_constant=self.mixing_constant, delta_divisor=self.delta_divisor,
                             k=self.k, parallel_chains=self.parallel_chains, **extra)


class GaussianCoolingVolume(_CoolingParams):
    """Volume (``target="uniform"``) or standard Gaussian measure
    (``target="gaussian"``) of a convex body.

    Attributes after :meth:`fit`: ``volume_``, ``log_volume_``,
    ``report_`` (the full :class:`VolumeReport`) and ``phases_``.

    >>> from gaussian_cooling import Box
    >>> est = GaussianCoolingVolume(eps=0.25, seed=3).fit(Box.cube(2))
    >>> abs(est.volume_ / 4 - 1) < 0.25
    True
    """

    def __init__(self, target="uniform", eps=0.25, seed=None, profile="practical",
                 mixing_constant=None, delta_divisor=None, k=None, parallel_chains=None,
                 boost_p=None):
        super().__init__(eps=eps, seed=seed, profile=profile, mixing_constant=mixing_constant,
                         delta_divisor=delta_divisor, k=k, parallel_chains=parallel_chains)
        self.target = target
        self.boost_p = boost_p

    def fit(self, body, y=None):
        body = check_body(body)
        if self.target not in ("uniform", "gaussian"):
            raise ValueError(f"target must be 'uniform' or 'gaussian', got {self.target!r}")
        driver = uniform_volume if self.target == "uniform" else gaussian_volume
        self.report_ = driver(body, config=self._config(boost_p=self.boost_p))
        self.volume_ = self.report_.estimate
        self.log_volume_ = self.report_.log_estimate
        self.phases_ = self.report_.phases
        self.n_features_in_ = body.dimension
        return self

    def score(self, body=None, y=None) -> float:
        """Log of the fitted estimate (the body argument is ignored)."""
        check_is_fitted(self, "report_")
        return self.log_volume_


class _Sampler(_CoolingParams):
    def fit(self, body, y=None):
        self.body_ = check_body(body)
        self.n_features_in_ = self.body_.dimension
        return self

    def sample(self, n_samples: int = 1, seed: Optional[int] = None) -> np.ndarray:
        check_is_fitted(self, "body_")
        cfg = self._config()
        if seed is not None:
            cfg = CoolingConfig.from_dict({**cfg.to_dict(), "seed": seed})
        return self._draw(int(n_samples), cfg)


class TruncatedGaussianSampler(_Sampler):
    """Draws from ``N(0, variance I)`` restricted to the fitted body."""

    def __init__(self, variance=1.0, eps=0.25, seed=None, profile="practical",
                 mixing_constant=None, delta_divisor=None, k=None, parallel_chains=None):
        super().__init__(eps=eps, seed=seed, profile=profile, mixing_constant=mixing_constant,
                         delta_divisor=delta_divisor, k=k, parallel_chains=parallel_chains)
        self.variance = variance

    def _draw(self, count, cfg):
        return gaussian_sample(self.body_, self.variance, count, config=cfg)


class UniformSampler(_Sampler):
    """Draws approximately uniform points from the fitted body."""

    def _draw(self, count, cfg):
        return uniform_sample(self.body_, count=count, config=cfg)
