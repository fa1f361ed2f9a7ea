import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gaussian_cooling import Ball, Box, Intersection, build_schedule, halfspace
from gaussian_cooling.oracle import (
    NeedleConfig,
    QuadratureError,
    box_marginal_cdf,
    check_needle_inequality,
    fixed_rate_variance_oracle,
    grid_gaussian_volume,
    log_gaussian_integral,
    needle_bound,
    needle_log_integral_closed_form,
    needle_moment_ratio,
    quadrature_gaussian_volume,
    random_needle_config,
    second_moment_oracle,
    warmness_oracle,
)
from gaussian_cooling.oracle import _log_needle_integral


def test_needle_trivial_cases():
    assert needle_moment_ratio(NeedleConfig(-2.0, 3.0, 1.0, 0.7, 0.0)) == 1.0
    assert needle_moment_ratio(NeedleConfig(0.5, 0.5, 1.0, 0.7, 0.3)) == 1.0
    assert check_needle_inequality(NeedleConfig(-1.0, 1.0, 0.0, 1.0, 0.0))


def test_needle_symmetric_example():
    cfg = NeedleConfig(-1.0, 1.0, 0.0, 1.0, 0.1)
    h = needle_moment_ratio(cfg)
    # independent evaluation through the normal CDF
    closed = math.exp(sum(needle_log_integral_closed_form(cfg, b) for b in (1.1, 0.9))
                      - 2 * needle_log_integral_closed_form(cfg, 1.0))
    assert h == pytest.approx(closed, rel=1e-9)
    assert 1.0 <= h <= math.exp(2 * 0.01)


def test_needle_large_gamma():
    cfg = NeedleConfig(-3.0, 3.0, 10.0, 1.0, 0.5)
    assert cfg.R1 == 3.0
    assert check_needle_inequality(cfg)


def test_needle_config_validation():
    with pytest.raises(ValueError):
        NeedleConfig(1.0, 0.0, 0.0, 1.0, 0.1)
    with pytest.raises(ValueError):
        NeedleConfig(0.0, 1.0, 0.0, 1.0, 0.6)
    with pytest.raises(ValueError):
        NeedleConfig(0.0, 1.0, -1.0, 1.0, 0.1)


def test_needle_bound_overflow_is_inf():
    assert needle_bound(NeedleConfig(-10.0, 10.0, 0.0, 0.01, 0.5)) == math.inf


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_needle_quadrature_matches_closed_form(seed):
    cfg = random_needle_config(np.random.default_rng(seed))
    for beta in (1 - cfg.alpha, 1.0, 1 + cfg.alpha):
        a = _log_needle_integral(cfg, beta)
        b = needle_log_integral_closed_form(cfg, beta)
        assert a == pytest.approx(b, rel=1e-8, abs=1e-8)
    assert needle_moment_ratio(cfg) >= 1 - 1e-12
    assert check_needle_inequality(cfg)


def test_quadrature_examples():
    assert quadrature_gaussian_volume(Box.cube(1), 1.0) == pytest.approx(0.682689492137, abs=1e-10)
    assert quadrature_gaussian_volume(Box.cube(3, 10.0), 1.0) == pytest.approx(1.0, abs=1e-10)
    assert quadrature_gaussian_volume(Ball(2, 1.0), 1.0) == pytest.approx(1 - math.exp(-0.5), abs=1e-12)
    assert quadrature_gaussian_volume(Box.cube(4), 1.0) == pytest.approx(math.erf(1 / math.sqrt(2)) ** 4, rel=1e-10)
    assert quadrature_gaussian_volume(halfspace(3, [-1.0, 0.0, 0.0], 1.0), 1.0) == pytest.approx(0.841344746, abs=1e-9)


def test_ball_mass_cross_checked_by_grid():
    value, err = grid_gaussian_volume(Ball(2, 1.0), 1.0)
    assert value == pytest.approx(1 - math.exp(-0.5), abs=max(3 * err, 1e-4))
    assert err < 1e-3


def test_grid_handles_general_bodies():
    body = Intersection([Ball(2, 1.5), Box.cube(2, 1.2)])
    value, err = grid_gaussian_volume(body, 1.0)
    inner = quadrature_gaussian_volume(Box.cube(2, 1.0), 1.0)
    outer = quadrature_gaussian_volume(Ball(2, 1.5), 1.0)
    assert inner < value < outer and err < 5e-3
    assert quadrature_gaussian_volume(body, 1.0) == value
    # indicator grids converge at first order; the halving gap bounds the error
    vol, gap = grid_gaussian_volume(Box.cube(2, 1.0), None)
    assert vol == pytest.approx(4.0, abs=gap)


def test_grid_limits():
    with pytest.raises(QuadratureError):
        grid_gaussian_volume(Intersection([Ball(4, 2.0)]), 1.0)
    with pytest.raises(ValueError):
        grid_gaussian_volume(Ball(2, 1.0), 1.0, points=100)


def test_box_quadrature_self_consistency():
    # separable quadrature at two tolerances agrees far below 1e-8
    body = Box([1.0, 1.5, 2.0])
    a = quadrature_gaussian_volume(body, 0.7)
    b = math.prod(math.erf(h / math.sqrt(2 * 0.7)) for h in (1.0, 1.5, 2.0))
    assert a == pytest.approx(b, rel=1e-10)


def test_fixed_rate_examples():
    v = fixed_rate_variance_oracle(Box.cube(2), 0.5)
    assert 1.0 <= v <= 2.0
    free = fixed_rate_variance_oracle(Box.cube(3, 1e3), 1.0)
    assert free == pytest.approx((1 - 1 / 9) ** -1.5, rel=1e-9)
    assert fixed_rate_variance_oracle(Box.cube(2), 0.5, alpha=0.0) == 1.0
    assert fixed_rate_variance_oracle(Box.cube(2), 0.5, alpha=1e-6) == pytest.approx(1.0, abs=1e-9)


def test_warmness_examples():
    n = 3
    free = Box.cube(n, 1e3)
    assert warmness_oracle(free, 0.1, 0.1 * (1 + 1 / n)) == pytest.approx((1 + 1 / n) ** (n / 2), rel=1e-9)
    assert (1 + 1 / n) ** (n / 2) <= math.sqrt(math.e)
    assert warmness_oracle(Box.cube(2), 0.5, 0.5) == 1.0
    assert warmness_oracle(Box.cube(2), 0.5, 0.75) <= math.sqrt(math.e)


def test_warmness_terminal_pair_uses_volume():
    body = Box.cube(2)
    a = warmness_oracle(body, 1.5, math.inf)
    assert a == pytest.approx(4.0 / math.exp(log_gaussian_integral(body, 1.5)), rel=1e-12)


@pytest.mark.parametrize("n", [2, 3])
def test_fast_rate_warmness(n):
    body = Box.cube(n)
    C = body.roundness
    for a, b in build_schedule(n, C).pairs():
        if a > 1:
            assert warmness_oracle(body, a, b) <= math.sqrt(math.e)


def test_second_moment_oracle_unrestricted():
    n, s = 3, 0.4
    t = s * (1 + 1 / n)
    # Gaussian integrals: F(s) F(1/(2/t - 1/s)) / F(t)^2
    expected = (s * (1 / (2 / t - 1 / s)) / t**2) ** (n / 2)
    assert second_moment_oracle(Box.cube(n, 1e3), s, t) == pytest.approx(expected, rel=1e-9)
    with pytest.raises(QuadratureError):
        second_moment_oracle(Box.cube(2), 1.0, math.inf)


def test_box_marginal_cdf():
    cdf = box_marginal_cdf(Box.cube(2), 0, 1.0)
    t = np.array([-2.0, -1.0, 0.0, 0.5, 1.0, 3.0])
    got = cdf(t)
    z = math.erf(1 / math.sqrt(2))
    assert got[[0, 1, 2, 4, 5]].tolist() == pytest.approx([0.0, 0.0, 0.5, 1.0, 1.0], abs=1e-12)
    assert got[3] == pytest.approx((math.erf(0.5 / math.sqrt(2)) + z) / (2 * z), rel=1e-10)


def test_unsupported_body():
    with pytest.raises(QuadratureError):
        quadrature_gaussian_volume(Intersection([Ball(5, 2.0), Box.cube(5, 1.5)]), 1.0)
