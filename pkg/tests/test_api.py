import math

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from gaussian_cooling import Box, GaussianCoolingVolume, TruncatedGaussianSampler, UniformSampler


def test_params_round_trip():
    est = GaussianCoolingVolume(target="gaussian", eps=0.3, seed=4, k=50)
    params = est.get_params()
    assert params["target"] == "gaussian" and params["k"] == 50
    twin = clone(est).set_params(eps=0.4)
    assert twin.eps == 0.4 and est.eps == 0.3


def test_fit_sets_attributes():
    est = GaussianCoolingVolume(eps=0.25, seed=1).fit(Box.cube(2))
    assert abs(est.volume_ / 4 - 1) < 0.25
    assert est.log_volume_ == pytest.approx(math.log(est.volume_))
    assert est.phases_ == est.report_.phases
    assert est.n_features_in_ == 2
    assert est.score() == est.log_volume_


def test_fit_accepts_spec_dict():
    est = GaussianCoolingVolume(target="gaussian", eps=0.25, seed=1)
    est.fit({"type": "box", "half_widths": [1.0]})
    assert est.volume_ == pytest.approx(math.erf(1 / math.sqrt(2)), rel=0.1)


def test_bad_inputs():
    with pytest.raises(TypeError):
        GaussianCoolingVolume().fit(np.zeros((3, 2)))
    with pytest.raises(ValueError):
        GaussianCoolingVolume(target="lebesgue").fit(Box.cube(2))
    with pytest.raises(NotFittedError):
        GaussianCoolingVolume().score()
    with pytest.raises(NotFittedError):
        UniformSampler().sample(3)


def test_samplers():
    body = Box.cube(2)
    pts = UniformSampler(seed=0).fit(body).sample(40)
    assert pts.shape == (40, 2) and np.all(np.abs(pts) <= 1)
    g = TruncatedGaussianSampler(variance=0.3, seed=0).fit(body)
    a, b = g.sample(30), g.sample(30)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, g.sample(30, seed=9))
