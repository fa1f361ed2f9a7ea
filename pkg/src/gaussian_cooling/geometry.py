"""Convex bodies presented through a membership oracle.

Every body carries the containment data the cooling algorithms rely on:
the unit ball lies inside it, and it lies inside a ball of radius
``outer_radius`` (possibly infinite for unbounded sets such as a halfspace).
"""
from __future__ import annotations

import itertools
import math
import threading
from typing import Optional, Sequence

import numpy as np
from scipy.special import gammaln

from ._validation import check_dimension, check_point, check_points, check_rng

__all__ = [
    "BodyValidationError",
    "ConvexBody",
    "Ball",
    "Box",
    "Simplex",
    "Polytope",
    "Intersection",
    "contains",
    "analytic_volume",
    "halfspace",
    "probe_grid",
    "random_probes",
]

# Shrink factor applied to unit-sphere probes when checking B_n inside K.
_PROBE_SHRINK = 1.0 - 1e-9


class BodyValidationError(ValueError):
    """Raised when a body fails its declared containment checks."""


class _CallCounter:
    """Per-thread tallies that are summed on demand."""

    def __init__(self):
        self._local = threading.local()
        self._cells = []
        self._lock = threading.Lock()

    def _cell(self):
        cell = getattr(self._local, "cell", None)
        if cell is None:
            cell = [0]
            self._local.cell = cell
            with self._lock:
                self._cells.append(cell)
        return cell

    def add(self, count: int) -> None:
        self._cell()[0] += count

    def thread_total(self) -> int:
        return self._cell()[0]

    def total(self) -> int:
        with self._lock:
            return sum(c[0] for c in self._cells)

    def reset(self) -> None:
        with self._lock:
            for c in self._cells:
                c[0] = 0


class ConvexBody:
    """Base class for membership-oracle bodies.

    Subclasses implement :meth:`_membership` on a ``(m, n)`` array. The
    public :meth:`contains` / :meth:`contains_batch` wrap it and count one
    oracle call per point queried.

    Parameters
    ----------
    dimension : int
    outer_radius : float
        Radius of an origin-centred ball known to contain the body. Use
        ``math.inf`` for unbounded sets.
    validate : bool
        Probe the unit sphere at construction and raise
        :class:`BodyValidationError` when a probe falls outside.
    """

    kind = "abstract"

    def __init__(self, dimension: int, outer_radius: float, validate: bool = True):
        self.dimension = check_dimension(dimension)
        outer_radius = float(outer_radius)
        if not outer_radius >= 1.0:
            raise BodyValidationError(
                f"outer_radius must be at least 1 (the unit ball is inside), got {outer_radius}"
            )
        self.outer_radius = outer_radius
        self._calls = _CallCounter()
        if validate:
            self.check_unit_ball()

    # -- oracle -----------------------------------------------------------
    def _membership(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def contains(self, x) -> bool:
        x = check_point(x, self.dimension)
        self._calls.add(1)
        return bool(self._membership(x[None, :])[0])

    def contains_batch(self, X) -> np.ndarray:
        X = check_points(X, self.dimension)
        self._calls.add(X.shape[0])
        return self._membership(X)

    @property
    def oracle_calls(self) -> int:
        """Oracle calls made so far, summed over all threads."""
        return self._calls.total()

    def thread_oracle_calls(self) -> int:
        """Oracle calls made so far by the calling thread."""
        return self._calls.thread_total()

    def reset_oracle_calls(self) -> None:
        self._calls.reset()

    # -- metadata ---------------------------------------------------------
    @property
    def roundness(self) -> float:
        """The constant C with K inside C*sqrt(n)*B_n, clamped below at 1."""
        return max(1.0, self.outer_radius / math.sqrt(self.dimension))

    def analytic_volume(self) -> Optional[float]:
        return None

    def to_spec(self) -> dict:
        raise NotImplementedError

    def check_unit_ball(self, n_probes: int = 1000, seed: int = 0) -> None:
        rng = np.random.default_rng(seed)
        U = rng.standard_normal((n_probes, self.dimension))
        U /= np.linalg.norm(U, axis=1, keepdims=True)
        # axis directions are the usual weak spots of boxes and polytopes
        U = np.vstack([U, np.eye(self.dimension), -np.eye(self.dimension)])
        inside = self._membership(U * _PROBE_SHRINK)
        if not np.all(inside):
            bad = U[np.argmin(inside)]
            raise BodyValidationError(
                f"{self.kind}: unit ball is not inside the body "
                f"(probe {np.array2string(bad, precision=3)} rejected)"
            )

    def __repr__(self):
        return f"{type(self).__name__}(dimension={self.dimension}, outer_radius={self.outer_radius:g})"


class Ball(ConvexBody):
    """Origin-centred Euclidean ball of the given radius."""

    kind = "ball"

    def __init__(self, dimension: int, radius: float = 1.0, validate: bool = True):
        self.radius = float(radius)
        super().__init__(dimension, self.radius, validate=validate)

    def _membership(self, X):
        return np.einsum("ij,ij->i", X, X) <= self.radius**2

    def analytic_volume(self):
        n = self.dimension
        return math.exp(0.5 * n * math.log(math.pi) + n * math.log(self.radius) - gammaln(n / 2 + 1))

    def to_spec(self):
        return {"type": "ball", "dimension": self.dimension, "radius": self.radius,
                "outer_radius": self.outer_radius}


class Box(ConvexBody):
    """Axis-aligned box ``|x_i| <= half_widths[i]``."""

    kind = "box"

    def __init__(self, half_widths: Sequence[float], outer_radius: Optional[float] = None,
                 validate: bool = True):
        self.half_widths = np.asarray(half_widths, dtype=float).reshape(-1)
        if outer_radius is None:
            outer_radius = float(np.linalg.norm(self.half_widths))
        super().__init__(self.half_widths.size, outer_radius, validate=validate)

    @classmethod
    def cube(cls, dimension: int, half_width: float = 1.0, **kwargs) -> "Box":
        return cls(np.full(check_dimension(dimension), float(half_width)), **kwargs)

    def _membership(self, X):
        return np.all(np.abs(X) <= self.half_widths, axis=1)

    def analytic_volume(self):
        return float(np.prod(2.0 * self.half_widths))

    def to_spec(self):
        return {"type": "box", "dimension": self.dimension,
                "half_widths": self.half_widths.tolist(), "outer_radius": self.outer_radius}


class Simplex(ConvexBody):
    """The simplex ``{x_i >= -1, sum(x) <= scale - n}``.

    It is the standard simplex with legs of length ``scale`` translated by
    ``-1`` in every coordinate, so its volume is ``scale**n / n!``. The
    unit ball fits inside once ``scale >= n + sqrt(n)``, which is the
    default.
    """

    kind = "simplex"

    def __init__(self, dimension: int, scale: Optional[float] = None, validate: bool = True):
        n = check_dimension(dimension)
        self.scale = float(n + math.sqrt(n) if scale is None else scale)
        # farthest vertex is -1 + scale * e_i
        outer = math.sqrt((self.scale - 1.0) ** 2 + (n - 1))
        super().__init__(n, max(outer, math.sqrt(n)), validate=validate)

    def _membership(self, X):
        return np.all(X >= -1.0, axis=1) & (X.sum(axis=1) <= self.scale - self.dimension)

    def analytic_volume(self):
        n = self.dimension
        return math.exp(n * math.log(self.scale) - gammaln(n + 1))

    def to_spec(self):
        return {"type": "simplex", "dimension": self.dimension, "scale": self.scale,
                "outer_radius": self.outer_radius}


class Polytope(ConvexBody):
    """Halfspace intersection ``A x <= b``.

    ``outer_radius`` must be supplied; pass ``math.inf`` for an unbounded
    polyhedron (usable for Gaussian volume only).
    """

    kind = "polytope"

    def __init__(self, A, b, outer_radius: float, validate: bool = True):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.asarray(b, dtype=float).reshape(-1)
        if A.shape[0] != b.shape[0]:
            raise ValueError(f"A has {A.shape[0]} rows but b has {b.shape[0]} entries")
        self.A, self.b = A, b
        super().__init__(A.shape[1], outer_radius, validate=validate)

    def _membership(self, X):
        return np.all(X @ self.A.T <= self.b, axis=1)

    def to_spec(self):
        return {"type": "polytope", "dimension": self.dimension, "A": self.A.tolist(),
                "b": self.b.tolist(), "outer_radius": _spec_radius(self.outer_radius)}


class Intersection(ConvexBody):
    """Intersection of bodies; membership is the conjunction of the members'."""

    kind = "intersection"

    def __init__(self, members: Sequence[ConvexBody], outer_radius: Optional[float] = None,
                 validate: bool = True):
        members = list(members)
        if not members:
            raise ValueError("intersection needs at least one member")
        dims = {m.dimension for m in members}
        if len(dims) != 1:
            raise ValueError(f"members have mixed dimensions {sorted(dims)}")
        self.members = members
        if outer_radius is None:
            outer_radius = min(m.outer_radius for m in members)
        super().__init__(dims.pop(), outer_radius, validate=validate)

    def _membership(self, X):
        inside = np.ones(X.shape[0], dtype=bool)
        for m in self.members:
            idx = np.flatnonzero(inside)
            if idx.size == 0:
                break
            inside[idx] = m._membership(X[idx])
        return inside

    def to_spec(self):
        return {"type": "intersection", "dimension": self.dimension,
                "members": [m.to_spec() for m in self.members],
                "outer_radius": _spec_radius(self.outer_radius)}


def _spec_radius(r: float):
    # JSON has no infinity; null stands for an unbounded body
    return None if math.isinf(r) else r


def contains(body: ConvexBody, x) -> bool:
    """Membership query; counts one oracle call."""
    return body.contains(x)


def analytic_volume(body: ConvexBody) -> Optional[float]:
    """Closed-form Lebesgue volume for balls, boxes and simplices, else ``None``."""
    return body.analytic_volume()


def halfspace(dimension: int, normal, offset: float, validate: bool = True) -> Polytope:
    """The halfspace ``normal . x <= offset`` as an unbounded polytope."""
    return Polytope(np.asarray(normal, dtype=float)[None, :], [offset], math.inf, validate=validate)


def probe_grid(lo: float, hi: float, points_per_axis: int, dimension: int) -> np.ndarray:
    """Tensor grid used by small exhaustive membership checks."""
    axis = np.linspace(lo, hi, points_per_axis)
    return np.array(list(itertools.product(axis, repeat=dimension)))


def random_probes(body: ConvexBody, count: int, seed=None) -> dict:
    """Probabilistic containment and convexity audit.

    Returns failure counts for three checks: unit-sphere points inside,
    points beyond ``outer_radius`` outside, and midpoints of inside pairs
    inside. Probes use the raw membership test and are not counted as
    oracle calls.
    """
    rng = check_rng(seed)
    n = body.dimension
    U = rng.standard_normal((count, n))
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    failures = {"unit_ball": int(np.sum(~body._membership(U * _PROBE_SHRINK)))}
    if math.isfinite(body.outer_radius):
        radii = body.outer_radius * (1.0 + 1e-9 + rng.exponential(0.5, count))
        failures["outer_radius"] = int(np.sum(body._membership(U * radii[:, None])))
        span = body.outer_radius
    else:
        failures["outer_radius"] = 0
        span = 4.0 * math.sqrt(n)
    X = _radial_points(rng, count, n, span)
    Y = _radial_points(rng, count, n, span)
    both = body._membership(X) & body._membership(Y)
    mids = 0.5 * (X[both] + Y[both])
    failures["convexity"] = int(np.sum(~body._membership(mids))) if mids.size else 0
    failures["convexity_pairs"] = int(both.sum())
    return failures


def _radial_points(rng, count, n, span):
    # random direction, radius uniform on [0, span]: hits thin bodies far more
    # often than uniform points in the bounding cube
    U = rng.standard_normal((count, n))
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    return U * rng.uniform(0.0, span, (count, 1))
