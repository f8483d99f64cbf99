from __future__ import annotations

from .evolution import Trajectory, integrate, rhs, step
from .exceptions import HeleShawError
from .models import RunConfig, SweepConfig, parse_config
from .runner import Simulation
from .shape import ShapeState
from .spectral import SpectralField

__version__ = "0.1.0.dev0"


__all__ = [
    "HeleShawError",
    "RunConfig",
    "ShapeState",
    "Simulation",
    "SpectralField",
    "SweepConfig",
    "Trajectory",
    "integrate",
    "parse_config",
    "rhs",
    "step",
]
