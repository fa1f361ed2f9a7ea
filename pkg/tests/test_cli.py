import csv
import json
import math

import numpy as np
import pytest

from gaussian_cooling import Ball, Box, WalkStuckError, build_schedule
from gaussian_cooling import cli
from gaussian_cooling.cli import BodySpecError, RunConfig, body_from_spec, load_body_spec, main


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(p)


BOX3 = {"type": "box", "dimension": 3, "half_widths": [1, 1, 1], "outer_radius": 1.7320508}


def test_load_box(tmp_path):
    body = load_body_spec(write(tmp_path, "b.json", BOX3))
    assert isinstance(body, Box) and body.dimension == 3
    assert body.outer_radius == pytest.approx(math.sqrt(3), rel=1e-7)


def test_small_ball_fails_validation(tmp_path):
    with pytest.raises(BodySpecError, match="outer_radius|unit ball"):
        load_body_spec(write(tmp_path, "b.json", {"type": "ball", "dimension": 2, "radius": 0.5}))


def test_intersection_is_conjunction():
    spec = {"type": "intersection", "dimension": 2,
            "members": [{"type": "ball", "radius": 2}, {"type": "box", "half_widths": [1.5, 1.5]}]}
    body = body_from_spec(spec)
    X = np.random.default_rng(0).uniform(-2.5, 2.5, (4000, 2))
    expected = Ball(2, 2.0)._membership(X) & Box.cube(2, 1.5)._membership(X)
    assert np.array_equal(body._membership(X), expected)


@pytest.mark.parametrize("spec, field", [
    ({"dimension": 2}, "body.type"),
    ({"type": "cone", "dimension": 2}, "body.type"),
    ({"type": "ball", "dimension": "two"}, "body.dimension"),
    ({"type": "ball", "dimension": 2, "radius": "big"}, "body.radius"),
    ({"type": "box", "dimension": 3, "half_widths": [1, 1]}, "body.half_widths"),
    ({"type": "box", "dimension": 2}, "body.half_widths"),
    ({"type": "polytope", "dimension": 2, "A": [[1, 0]], "b": [1, 2], "outer_radius": None}, "body.b"),
    ({"type": "polytope", "dimension": 2, "A": [[1, 0, 0]], "b": [1], "outer_radius": None}, "body.A"),
    ({"type": "polytope", "dimension": 2, "A": [[1, 0]], "b": [1]}, "body.outer_radius"),
    ({"type": "intersection", "dimension": 2, "members": []}, "body.members"),
    ({"type": "intersection", "dimension": 2, "members": [{"type": "ball", "radius": -1}]},
     "body.members[0]"),
])
def test_spec_errors_name_the_field(spec, field):
    with pytest.raises(BodySpecError) as info:
        body_from_spec(spec)
    assert str(info.value).startswith(field)


def test_malformed_json_exit_3(tmp_path, capsys):
    path = write(tmp_path, "bad.json", '{"type": "box", "half_widths": [1, 1,}')
    assert main(["--body", path]) == 3
    assert "invalid JSON" in capsys.readouterr().err


def test_missing_field_exit_3(tmp_path, capsys):
    path = write(tmp_path, "bad.json", {"type": "box", "dimension": 3})
    assert main(["--body", path]) == 3
    assert "body.half_widths" in capsys.readouterr().err


def test_usage_error_exit_3(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--no-such-flag"])
    assert info.value.code == 3


def test_volume_mode(tmp_path):
    body = write(tmp_path, "b.json", BOX3)
    out, trace = tmp_path / "r.json", tmp_path / "t.csv"
    code = main(["--mode", "volume", "--body", body, "--eps", "0.25", "--seed", "42",
                 "--out", str(out), "--trace-csv", str(trace)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert set(doc) >= {"mode", "estimate", "log_estimate", "relative_error_target", "phases",
                        "total_oracle_calls", "wall_time_seconds", "config_echo"}
    assert abs(doc["estimate"] / 8 - 1) < 0.25
    assert doc["config_echo"]["seed"] == 42
    rows = list(csv.reader(trace.open()))
    assert rows[0] == list(cli.TRACE_FIELDS)
    assert rows[0] == "phase,sigma_sq_cur,sigma_sq_next,W,second_moment_ratio,proper_steps,proposals".split(",")
    assert len(rows) - 1 == len(doc["phases"]) == len(build_schedule(3, 1.0).variances) - 1
    assert rows[-1][2] == "inf"
    assert float(rows[1][3]) == doc["phases"][0]["W"]


def test_replay_reproduces_estimate(tmp_path):
    body = write(tmp_path, "b.json", {"type": "simplex", "dimension": 2})
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["--body", body, "--eps", "0.5", "--out", str(first)]) == 0
    assert main(["--replay", str(first), "--out", str(second)]) == 0
    a, b = json.loads(first.read_text()), json.loads(second.read_text())
    assert a["estimate"] == b["estimate"]
    a.pop("wall_time_seconds"), b.pop("wall_time_seconds")
    assert a == b


def test_gaussian_volume_mode_unbounded(tmp_path, capsys):
    body = write(tmp_path, "h.json", {"type": "polytope", "dimension": 3, "A": [[-1, 0, 0]],
                                      "b": [1], "outer_radius": None})
    assert main(["--mode", "gaussian-volume", "--body", body, "--seed", "1"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["mode"] == "gaussian_volume"
    assert doc["config_echo"]["body"]["outer_radius"] is None
    assert main(["--mode", "volume", "--body", body, "--seed", "1"]) == 3


def test_sample_mode(tmp_path):
    body = write(tmp_path, "b.json", BOX3)
    out = tmp_path / "pts.txt"
    assert main(["--mode", "sample", "--body", body, "--samples", "100", "--seed", "3",
                 "--out", str(out)]) == 0
    pts = np.loadtxt(out)
    assert pts.shape == (100, 3)
    assert np.all(np.abs(pts) <= 1.0)


def test_sample_mode_gaussian(tmp_path):
    body = write(tmp_path, "b.json", BOX3)
    out = tmp_path / "pts.txt"
    assert main(["--mode", "sample", "--body", body, "--samples", "50", "--variance", "0.5",
                 "--seed", "3", "--out", str(out)]) == 0
    assert np.loadtxt(out).shape == (50, 3)


def test_walk_abort_exit_2(tmp_path, monkeypatch, capsys):
    def abort(*a, **kw):
        raise WalkStuckError("walk stuck: injected")

    monkeypatch.setattr(cli, "uniform_volume", abort)
    body = write(tmp_path, "b.json", BOX3)
    assert main(["--body", body, "--seed", "1"]) == 2
    assert "walk aborted" in capsys.readouterr().err


def test_invalid_eps_exit_3(tmp_path):
    body = write(tmp_path, "b.json", BOX3)
    with pytest.raises(ValueError):
        RunConfig(eps=1.5)
    assert main(["--body", body, "--eps", "1.5"]) == 3


def test_generated_seed_is_echoed(tmp_path, capsys):
    body = write(tmp_path, "b.json", {"type": "box", "half_widths": [1, 1]})
    assert main(["--body", body, "--eps", "0.5"]) == 0
    assert isinstance(json.loads(capsys.readouterr().out)["config_echo"]["seed"], int)
