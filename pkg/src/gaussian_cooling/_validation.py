"""Input checking shared by the public entry points."""
from __future__ import annotations

import numbers

import numpy as np


def check_rng(seed) -> np.random.Generator:
    """Turn ``seed`` into a :class:`numpy.random.Generator`.

    Accepts ``None``, an int, a :class:`numpy.random.SeedSequence` or an
    existing generator (returned as is).
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None or isinstance(seed, (numbers.Integral, np.random.SeedSequence)):
        return np.random.default_rng(seed)
    raise TypeError(f"cannot build a random generator from {seed!r}")


def check_point(x, dimension: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != dimension:
        raise ValueError(
            f"point has shape {x.shape}, expected ({dimension},)"
        )
    if not np.all(np.isfinite(x)):
        raise ValueError("point has non-finite coordinates")
    return x


def check_points(X, dimension: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != dimension:
        raise ValueError(
            f"points have shape {X.shape}, expected (m, {dimension})"
        )
    return X


def check_dimension(n, minimum: int = 1) -> int:
    if not isinstance(n, numbers.Integral) or isinstance(n, bool) or n < minimum:
        raise ValueError(f"dimension must be an integer >= {minimum}, got {n!r}")
    return int(n)


def check_eps(eps) -> float:
    eps = float(eps)
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    return eps


def check_positive(value, name: str) -> float:
    value = float(value)
    if not value > 0:
        raise ValueError(f"{name} must be positive, got {value}")
    return value
