"""Command-line driver.

Exit codes: 0 success, 2 walk abort, 3 invalid input (body spec, options).

Examples
--------
    gaussian-cooling --mode volume --body box3.json --eps 0.25 --seed 42
    gaussian-cooling --mode gaussian-volume --body half.json --trace-csv trace.csv
    gaussian-cooling --mode sample --body box3.json --samples 100 --out pts.txt
    gaussian-cooling --replay report.json
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from .estimator import CoolingConfig, VolumeReport, gaussian_sample, gaussian_volume, uniform_sample, uniform_volume
from .geometry import Ball, Box, BodyValidationError, ConvexBody, Intersection, Polytope, Simplex
from .walk import WalkStuckError

__all__ = ["BodySpecError", "RunConfig", "load_body_spec", "body_from_spec", "write_trace_csv",
           "run", "main", "EXIT_OK", "EXIT_WALK_ABORT", "EXIT_INVALID"]

EXIT_OK = 0
EXIT_WALK_ABORT = 2
EXIT_INVALID = 3

TRACE_FIELDS = ("phase", "sigma_sq_cur", "sigma_sq_next", "W", "second_moment_ratio",
                "proper_steps", "proposals")
_MODES = {"volume": "uniform_volume", "gaussian-volume": "gaussian_volume", "sample": "sample"}


class BodySpecError(ValueError):
    """A body specification is malformed; the message starts with the field path."""

    def __init__(self, where: str, problem: str):
        super().__init__(f"{where}: {problem}")
        self.field = where


# -- body specs ---------------------------------------------------------------

def _number(spec: dict, key: str, where: str, default: Any = ..., allow_null=False) -> Optional[float]:
    if key not in spec:
        if default is ...:
            raise BodySpecError(f"{where}.{key}", "missing")
        return default
    v = spec[key]
    if v is None and allow_null:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise BodySpecError(f"{where}.{key}", f"expected a finite number, got {v!r}")
    return float(v)


def _matrix(v, where: str, ndim: int) -> np.ndarray:
    try:
        arr = np.array(v, dtype=float)
    except (TypeError, ValueError):
        raise BodySpecError(where, "expected an array of numbers") from None
    if arr.ndim != ndim or arr.size == 0 or not np.all(np.isfinite(arr)):
        shape = "array of arrays" if ndim == 2 else "array"
        raise BodySpecError(where, f"expected a non-empty {shape} of finite numbers")
    return arr


def _dimension(spec: dict, where: str, inherited: Optional[int]) -> int:
    if "dimension" not in spec:
        if inherited is None:
            raise BodySpecError(f"{where}.dimension", "missing")
        return inherited
    d = spec["dimension"]
    if isinstance(d, bool) or not isinstance(d, int) or d < 1:
        raise BodySpecError(f"{where}.dimension", f"expected a positive integer, got {d!r}")
    if inherited is not None and d != inherited:
        raise BodySpecError(f"{where}.dimension", f"{d} does not match the enclosing body's {inherited}")
    return d


def _outer(spec: dict, where: str, default):
    r = _number(spec, "outer_radius", where, default=default, allow_null=True)
    return math.inf if r is None else r


def body_from_spec(spec: Any, where: str = "body", dimension: Optional[int] = None) -> ConvexBody:
    """Build and validate a body from a parsed JSON specification."""
    if not isinstance(spec, dict):
        raise BodySpecError(where, f"expected an object, got {type(spec).__name__}")
    kind = spec.get("type")
    if kind is None:
        raise BodySpecError(f"{where}.type", "missing")
    n = _dimension(spec, where, dimension) if kind != "box" else None
    try:
        if kind == "ball":
            radius = _number(spec, "radius", where, default=1.0)
            outer = _outer(spec, where, radius)
            if outer < radius:
                raise BodySpecError(f"{where}.outer_radius", f"{outer} is smaller than radius {radius}")
            return Ball(n, radius)
        if kind == "box":
            hw = _matrix(spec.get("half_widths"), f"{where}.half_widths", 1) \
                if "half_widths" in spec else None
            if hw is None:
                raise BodySpecError(f"{where}.half_widths", "missing")
            n = _dimension(spec, where, dimension) if ("dimension" in spec or dimension) else hw.size
            if hw.size != n:
                raise BodySpecError(f"{where}.half_widths", f"has {hw.size} entries for dimension {n}")
            return Box(hw, outer_radius=_outer(spec, where, None) if "outer_radius" in spec else None)
        if kind == "simplex":
            return Simplex(n, scale=_number(spec, "scale", where, default=None))
        if kind == "polytope":
            A = _matrix(spec.get("A"), f"{where}.A", 2)
            b = _matrix(spec.get("b"), f"{where}.b", 1)
            if A.shape[1] != n:
                raise BodySpecError(f"{where}.A", f"rows have {A.shape[1]} entries for dimension {n}")
            if A.shape[0] != b.size:
                raise BodySpecError(f"{where}.b", f"has {b.size} entries for {A.shape[0]} rows of A")
            if "outer_radius" not in spec:
                raise BodySpecError(f"{where}.outer_radius", "missing (use null for unbounded)")
            return Polytope(A, b, _outer(spec, where, None))
        if kind == "intersection":
            members = spec.get("members")
            if not isinstance(members, list) or not members:
                raise BodySpecError(f"{where}.members", "expected a non-empty array of bodies")
            built = [body_from_spec(m, f"{where}.members[{i}]", n) for i, m in enumerate(members)]
            return Intersection(built, outer_radius=_outer(spec, where, None) if "outer_radius" in spec else None)
    except BodyValidationError as err:
        raise BodySpecError(where, str(err)) from None
    raise BodySpecError(f"{where}.type", f"unknown body type {kind!r}")


def load_body_spec(path) -> ConvexBody:
    """Read a JSON body specification from ``path`` and build the body."""
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise BodySpecError("body", f"cannot read {path}: {err.strerror}") from None
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as err:
        raise BodySpecError("body", f"invalid JSON at line {err.lineno} column {err.colno}: {err.msg}") from None
    return body_from_spec(spec)


# -- run configuration --------------------------------------------------------

@dataclass
class RunConfig:
    mode: str = "volume"
    body_spec_path: Optional[str] = None
    eps: float = 0.25
    boost_p: Optional[float] = None
    seed: Optional[int] = None
    profile: str = "practical"
    mixing_constant: Optional[float] = None
    delta_divisor: Optional[float] = None
    k: Optional[int] = None
    parallel_chains: Optional[int] = None
    samples: int = 100
    variance: Optional[float] = None
    out: Optional[str] = None
    trace_csv: Optional[str] = None
    body_spec: Optional[dict] = field(default=None, repr=False)

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {sorted(_MODES)}, got {self.mode!r}")
        if not 0.0 < self.eps < 1.0:
            raise ValueError(f"eps must lie in (0, 1), got {self.eps}")

    def cooling_config(self) -> CoolingConfig:
        return CoolingConfig(
            eps=self.eps, seed=self.seed, profile=self.profile, boost_p=self.boost_p,
            mixing_constant=self.mixing_constant, delta_divisor=self.delta_divisor,
            k=self.k, parallel_chains=self.parallel_chains,
        ).with_seed()

    def body(self) -> ConvexBody:
        if self.body_spec is not None:
            return body_from_spec(self.body_spec)
        if self.body_spec_path is None:
            raise BodySpecError("body", "no body specification given (--body)")
        return load_body_spec(self.body_spec_path)

    @classmethod
    def from_report(cls, report: dict, **changes) -> "RunConfig":
        """Rebuild the run that produced ``report`` from its configuration echo."""
        echo = report.get("config_echo")
        if not isinstance(echo, dict):
            raise ValueError("report has no config_echo object")
        mode = {v: k for k, v in _MODES.items()}.get(echo.get("mode"))
        if mode is None:
            raise ValueError(f"config_echo.mode: unknown mode {echo.get('mode')!r}")
        kw = {k: echo[k] for k in ("eps", "boost_p", "seed", "profile", "mixing_constant",
                                    "delta_divisor", "k", "parallel_chains") if k in echo}
        kw.update(changes)
        return cls(mode=mode, body_spec=echo.get("body"), **kw)


# -- outputs ------------------------------------------------------------------

def _csv_float(x: Optional[float]) -> str:
    return "inf" if x is None or math.isinf(x) else repr(float(x))


def write_trace_csv(report: VolumeReport, stream) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(TRACE_FIELDS)
    for p in report.phases:
        w.writerow([p.phase_index, _csv_float(p.sigma_sq_cur), _csv_float(p.sigma_sq_next),
                    repr(p.W), repr(p.second_moment_ratio), p.proper_steps, p.proposals])


def _emit(text: str, path: Optional[str]) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def run(cfg: RunConfig) -> int:
    try:
        body = cfg.body()
        cooling = cfg.cooling_config()
    except (BodySpecError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INVALID

    start = time.perf_counter()
    try:
        if cfg.mode == "sample":
            if cfg.samples < 1:
                raise ValueError(f"--samples must be positive, got {cfg.samples}")
            if cfg.variance is None:
                pts = uniform_sample(body, count=cfg.samples, config=cooling)
            else:
                pts = gaussian_sample(body, cfg.variance, cfg.samples, config=cooling)
            buf = io.StringIO()
            np.savetxt(buf, pts, fmt="%.17g")
            _emit(buf.getvalue(), cfg.out)
            print(f"seed {cooling.seed}: wrote {len(pts)} points", file=sys.stderr)
            return EXIT_OK
        driver = uniform_volume if cfg.mode == "volume" else gaussian_volume
        report = driver(body, config=cooling)
    except WalkStuckError as err:
        print(f"walk aborted: {err}", file=sys.stderr)
        return EXIT_WALK_ABORT
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INVALID

    doc = report.to_dict()
    doc["wall_time_seconds"] = time.perf_counter() - start
    _emit(json.dumps(doc, indent=2, allow_nan=False) + "\n", cfg.out)
    if cfg.trace_csv:
        with open(cfg.trace_csv, "w", newline="") as fh:
            write_trace_csv(report, fh)
    return EXIT_OK


# -- argument parsing ---------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; 2 is reserved for walk aborts here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gaussian-cooling",
                description="Volume, Gaussian volume and sampling for convex bodies by Gaussian cooling.")
    p.add_argument("--mode", choices=sorted(_MODES), default="volume")
    p.add_argument("--body", dest="body_spec_path", help="JSON body specification")
    p.add_argument("--replay", help="re-run the configuration echoed in a report JSON")
    p.add_argument("--eps", type=float, default=0.25, help="relative error target")
    p.add_argument("--seed", type=int, help="random seed (drawn and echoed when absent)")
    p.add_argument("--profile", choices=["practical", "paper"], default="practical")
    p.add_argument("--boost-p", type=float, help="failure probability for median boosting")
    p.add_argument("--samples", type=int, default=100, help="points to draw in sample mode")
    p.add_argument("--variance", type=float,
                   help="sample mode: draw from N(0, variance I) on K instead of uniform")
    p.add_argument("--out", help="report JSON (volume modes) or sample rows (sample mode); default stdout")
    p.add_argument("--trace-csv", help="per-phase trace CSV")
    p.add_argument("--parallel-chains", type=int, metavar="N")
    p.add_argument("--mixing-constant", type=float)
    p.add_argument("--delta-divisor", type=float)
    p.add_argument("--k", type=int, help="samples per phase")
    return p


def config_from_args(args: argparse.Namespace) -> RunConfig:
    opts = {k: v for k, v in vars(args).items() if k != "replay"}
    if args.replay:
        report = json.loads(Path(args.replay).read_text())
        return RunConfig.from_report(report, out=args.out, trace_csv=args.trace_csv)
    return RunConfig(**opts)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
    except (OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INVALID
    return run(cfg)
