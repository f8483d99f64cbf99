from __future__ import annotations

import math
from typing import Optional

from pydantic import Field, validator

from .common import ConfigModel

try:
    from typing import Literal
except ImportError:  # pragma: no cover
    from typing_extensions import Literal


class Discretization(ConfigModel):
    #: Galerkin truncation order, modes 2 <= |k| <= n are evolved
    n: int = Field(64, ge=2)
    #: Working grid size, defaults to max(4n, 128)
    M: Optional[int] = None
    #: Sobolev index of the monitored energy
    r: int = Field(4, ge=3)

    @validator("M", always=True)
    def default_grid(cls, value, values):
        n = values.get("n")
        if value is None:
            return max(4 * n, 128) if n is not None else None
        if value % 2:
            raise ValueError(f"grid size M={value} must be even")
        if n is not None and value < 4 * n:
            raise ValueError(f"grid size M={value} must be at least 4n={4 * n}")
        return value


class PhysParams(ConfigModel):
    #: Surface tension
    sigma: float = Field(1.0, gt=0)
    #: Viscosity contrast (mu1 - mu2) / (mu1 + mu2)
    amu: float = Field(0.0, ge=-1, le=1)


class Tolerances(ConfigModel):
    closure_tol: float = Field(2 * math.pi * 1e-13, gt=0)
    gamma_tol: float = Field(1e-12, gt=0)
    #: Largest ||theta_tilde||_1 handed to the closure solve
    closure_ball: float = Field(0.5, gt=0)
    #: Radius of the ball in which the closure map is a contraction
    contraction_radius: float = Field(0.3, gt=0)
    q1_warn: float = 0.125
    q1_floor: float = Field(1e-3, gt=0)
    #: Half width of the admissible perimeter band around 2*pi
    length_band: float = Field(1.0, gt=0)
    max_newton: int = Field(25, ge=1)
    max_gamma_iterations: int = Field(200, ge=1)
    stagnation_window: int = Field(5, ge=1)
    stagnation_reduction: float = Field(0.9, gt=0, le=1)
    max_halvings: int = Field(8, ge=0)


class StepperConfig(ConfigModel):
    scheme: Literal["explicit_rk4", "if_rk4"] = "if_rk4"
    dt: float = Field(0.01, gt=0)
    t_final: float = Field(1.0, ge=0)
    #: Keep a record (and optionally the state) every this many accepted steps
    record_every: int = Field(1, ge=1)

    @property
    def n_steps(self) -> int:
        if self.t_final == 0:
            return 0
        return max(1, math.ceil(self.t_final / self.dt - 1e-9))
