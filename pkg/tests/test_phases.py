import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gaussian_cooling import Box, GaussianPhase, build_schedule, cooling_rate
from gaussian_cooling.phases import GAUSSIAN_VOLUME, SAMPLE_ONLY, UNIFORM_VOLUME, log_density_ratio


def test_cooling_rate_examples():
    assert cooling_rate(0.5, 100, 2) == pytest.approx(1.01)
    assert cooling_rate(4, 100, 1) == pytest.approx(1.04)
    # the boundary belongs to the slow branch
    assert cooling_rate(1, 10, 5) == pytest.approx(1.1)


def test_cooling_rate_contract():
    with pytest.raises(ValueError):
        cooling_rate(0.0, 3, 1)
    with pytest.raises(ValueError):
        cooling_rate(1.0, 3, 0.5)


def test_schedule_n2_uniform():
    s = build_schedule(2, 1.0, UNIFORM_VOLUME)
    assert s.variances[0] == 0.125
    slow = sum(1 for v in s.variances[:-1] if v <= 1.0)
    assert slow == math.ceil(math.log(8) / math.log(1.5)) == 6
    assert s.variances[-1] == math.inf
    assert all(v <= 2.0 for v in s.variances[:-1])


@pytest.mark.parametrize("n", [1, 2, 3, 7, 20])
def test_gaussian_schedule_ends_at_one(n):
    s = build_schedule(n, 1.0, GAUSSIAN_VOLUME)
    assert s.variances[-1] == 1.0
    assert s.variances[0] == 1 / (4 * n)
    assert s.n_phases == len(s.variances) - 1


def test_sample_only_ends_at_requested_variance():
    s = build_schedule(3, 2.0, SAMPLE_ONLY, final_variance=5.0)
    assert s.variances[-1] == 5.0
    assert build_schedule(3, 1.0, SAMPLE_ONLY, final_variance=0.01).variances == (0.01,)
    with pytest.raises(ValueError):
        build_schedule(3, 1.0, SAMPLE_ONLY)


def test_schedule_is_deterministic():
    a = build_schedule(9, 1.7, UNIFORM_VOLUME)
    b = build_schedule(9, 1.7, UNIFORM_VOLUME)
    assert a.variances == b.variances


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 40), C=st.floats(1.0, 4.0))
def test_schedule_invariants(n, C):
    s = build_schedule(n, C, UNIFORM_VOLUME)
    v = s.variances
    assert v[0] == 1 / (4 * n)
    assert v[-1] == math.inf
    for a, b in zip(v[:-2], v[1:-1]):
        expected = 1 + 1 / n if a <= 1 else 1 + a / (C * C * n)
        assert b / a == pytest.approx(expected, rel=1e-12)
        assert b <= C * C * n
    last = v[-2]
    assert last * cooling_rate(last, n, C) > C * C * n


@settings(max_examples=30, deadline=None)
@given(n=st.integers(2, 30), C=st.floats(1.0, 3.0))
def test_fast_phases_per_doubling(n, C):
    v = [x for x in build_schedule(n, C, UNIFORM_VOLUME).variances if 1 < x < math.inf]
    for i, start in enumerate(v):
        count = sum(1 for x in v[i:] if x < 2 * start)
        assert count <= math.ceil(2 * C * C * n / start) + 1


def test_phase_log_density():
    body = Box.cube(2)
    p = GaussianPhase(0.5, 2)
    assert p.log_density_at([0.0, 0.0], body) == 0.0
    assert p.log_density_at([0.5, 0.5], body) == pytest.approx(-0.5)
    assert p.log_density_at([1.5, 0.0], body) == -math.inf
    u = GaussianPhase(math.inf, 2)
    assert u.restriction_radius == math.inf
    assert u.log_density_at([0.9, -0.9], body) == 0.0


def test_restriction_ball_excludes_far_points():
    p = GaussianPhase(0.01, 2)
    body = Box.cube(2, 5.0)
    r = p.restriction_radius
    assert r == pytest.approx(4 * 0.1 * math.sqrt(2))
    assert p.log_density_at([r * 1.01, 0.0], body) == -math.inf


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 10), st.floats(1.0, 3.0),
       st.lists(st.floats(-0.99, 0.99), min_size=3, max_size=3))
def test_log_density_nondecreasing_in_variance(v, factor, x):
    body = Box.cube(3)
    a = GaussianPhase(v, 3).log_density_at(x, body)
    b = GaussianPhase(v * factor, 3).log_density_at(x, body)
    assert b >= a or a == -math.inf


def test_log_density_ratio_examples():
    cur, nxt = GaussianPhase(1.0, 2), GaussianPhase(math.inf, 2)
    x = np.array([1.0, 1.0])
    assert log_density_ratio(nxt, cur, x) == pytest.approx(1.0)
    assert log_density_ratio(cur, cur, x) == 0.0
    assert log_density_ratio(nxt, cur, [0.0, 0.0]) == 0.0
    with pytest.raises(ValueError):
        log_density_ratio(nxt, GaussianPhase(0.01, 2), [1.0, 1.0])


def test_log_density_ratio_avoids_underflow():
    # exp(-|x|^2 / (2 s0)) underflows here; the log ratio does not
    n = 1000
    cur, nxt = GaussianPhase(1 / (4 * n), n), GaussianPhase(1 / (4 * n) * (1 + 1 / n), n)
    x = np.full(n, 0.9 / math.sqrt(n))
    assert math.exp(-0.5 * float(x @ x) / cur.variance) == 0.0
    r = log_density_ratio(nxt, cur, x)
    assert r == pytest.approx(0.5 * 0.81 * 4 * n * (1 - 1 / (1 + 1 / n)), rel=1e-12)
