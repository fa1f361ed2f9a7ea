"""Volume and Gaussian volume of convex bodies by Gaussian cooling."""
from .api import GaussianCoolingVolume, TruncatedGaussianSampler, UniformSampler
from .estimator import (
    CoolingConfig,
    PhaseEstimate,
    VolumeReport,
    gaussian_sample,
    gaussian_volume,
    uniform_sample,
    uniform_volume,
)
from .geometry import (
    Ball,
    BodyValidationError,
    Box,
    ConvexBody,
    Intersection,
    Polytope,
    Simplex,
    analytic_volume,
    contains,
    halfspace,
)
from .phases import CoolingSchedule, GaussianPhase, build_schedule, cooling_rate
from .profiles import PAPER, PRACTICAL, Profile
from .walk import WalkStuckError

__all__ = [
    "GaussianCoolingVolume", "TruncatedGaussianSampler", "UniformSampler",
    "CoolingConfig", "PhaseEstimate", "VolumeReport",
    "gaussian_sample", "gaussian_volume", "uniform_sample", "uniform_volume",
    "Ball", "BodyValidationError", "Box", "ConvexBody", "Intersection", "Polytope", "Simplex",
    "analytic_volume", "contains", "halfspace",
    "CoolingSchedule", "GaussianPhase", "build_schedule", "cooling_rate",
    "PAPER", "PRACTICAL", "Profile", "WalkStuckError",
]

__version__ = "0.1.0"
