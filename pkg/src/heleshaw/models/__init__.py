from __future__ import annotations

from .config import ICTerm, RunConfig, SweepConfig, parse_config
from .params import Discretization, PhysParams, StepperConfig, Tolerances
