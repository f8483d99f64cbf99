from __future__ import annotations

import itertools
import json
import logging
import math
import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import Field, ValidationError, root_validator, validator

from ..environment import WORKERS
from ..exceptions import InvalidConfig
from .common import ConfigModel
from .params import Discretization, PhysParams, StepperConfig, Tolerances

try:
    from typing import Literal
except ImportError:  # pragma: no cover
    from typing_extensions import Literal

logger = logging.getLogger(__name__)

MAX_SWEEP_SIZE = 10_000
SWEEP_AXES = ("sigma", "amu", "n", "ic_scale")

Q1_MESSAGE = (
    "mode k={k} is removed by the Q1 projection (modes 0 and ±1 carry translation "
    "and rotation, not shape); initial condition modes need |k| >= 2"
)


class ICTerm(ConfigModel):
    """One harmonic ``cos_amp·cos kα + sin_amp·sin kα`` of the initial tangent angle."""

    k: int
    cos_amp: float = 0.0
    sin_amp: float = 0.0

    @validator("k")
    def check_mode(cls, value):
        if abs(value) < 2:
            raise ValueError(Q1_MESSAGE.format(k=value))
        return value

    @classmethod
    def validate(cls, value):
        """Accept the compact ``[k, cos_amp, sin_amp]`` form."""
        if isinstance(value, (list, tuple)):
            value = dict(zip(("k", "cos_amp", "sin_amp"), value))
        return super().validate(value)

    def as_tuple(self) -> Tuple[int, float, float]:
        # cos is even in k, sin is odd
        if self.k < 0:
            return -self.k, self.cos_amp, -self.sin_amp
        return self.k, self.cos_amp, self.sin_amp


class RunConfig(ConfigModel):
    n: int = Field(64, ge=2)
    #: Defaults to max(4n, 128)
    M: Optional[int] = None
    r: int = Field(4, ge=3)
    sigma: float = Field(1.0, gt=0)
    amu: float = Field(0.0, ge=-1, le=1)
    #: Defaults to 0.01/sigma
    dt: Optional[float] = Field(None, gt=0)
    t_final: float = Field(1.0, ge=0)
    scheme: Literal["explicit_rk4", "if_rk4"] = "if_rk4"
    record_every: int = Field(1, ge=1)
    ic: List[ICTerm] = Field(default_factory=list)
    ic_mode: Literal["explicit", "random"] = "explicit"
    #: Envelope prefactor A of the random mode, amplitudes ~ A k^-(r+1)
    random_amplitude: float = Field(0.05, ge=0)
    seed: int = 0
    closure_tol: float = Field(2 * math.pi * 1e-13, gt=0)
    gamma_tol: float = Field(1e-12, gt=0)
    out_path: Optional[str] = None

    @validator("M", always=True)
    def check_grid(cls, value, values):
        n = values.get("n")
        if n is None:
            return value
        if value is None:
            return max(4 * n, 128)
        if value % 2:
            raise ValueError(f"grid size M={value} must be even")
        if value < 4 * n:
            raise ValueError(f"grid size M={value} must be at least 4n={4 * n}")
        return value

    @validator("dt", always=True)
    def default_dt(cls, value, values):
        if value is None and values.get("sigma"):
            return 0.01 / values["sigma"]
        return value

    @root_validator(skip_on_failure=True)
    def check_ic_band(cls, values):
        modes = [term.as_tuple()[0] for term in values.get("ic", [])]
        if modes and max(modes) > values["n"]:
            raise ValueError(
                f"initial condition mode k={max(modes)} exceeds the truncation n={values['n']}"
            )
        return values

    @property
    def discretization(self) -> Discretization:
        return Discretization(n=self.n, M=self.M, r=self.r)

    @property
    def physics(self) -> PhysParams:
        return PhysParams(sigma=self.sigma, amu=self.amu)

    @property
    def stepper(self) -> StepperConfig:
        return StepperConfig(
            scheme=self.scheme, dt=self.dt, t_final=self.t_final, record_every=self.record_every
        )

    @property
    def tolerances(self) -> Tolerances:
        return Tolerances(closure_tol=self.closure_tol, gamma_tol=self.gamma_tol)

    def ic_terms(self) -> List[Tuple[int, float, float]]:
        """The harmonics of ``θ₀``; drawn from ``seed`` in random mode."""
        if self.ic_mode == "explicit":
            return [term.as_tuple() for term in self.ic]
        rng = np.random.default_rng(self.seed)
        terms = []
        for k in range(2, max(2, self.n // 4) + 1):
            envelope = self.random_amplitude * float(k) ** -(self.r + 1)
            cos_amp, sin_amp = envelope * rng.uniform(-1.0, 1.0, size=2)
            terms.append((k, float(cos_amp), float(sin_amp)))
        return terms

    def initial_state(self):
        from ..shape import ShapeState

        return ShapeState.from_modes(self.ic_terms(), self.discretization)

    def scaled(self, factor: float) -> Dict[str, Any]:
        """Changes that multiply every initial amplitude by ``factor``."""
        return {
            "ic": [
                {"k": term.k, "cos_amp": term.cos_amp * factor, "sin_amp": term.sin_amp * factor}
                for term in self.ic
            ],
            "random_amplitude": self.random_amplitude * factor,
        }


class SweepConfig(ConfigModel):
    base: RunConfig
    axes: Dict[str, List[float]] = Field(default_factory=dict)
    workers: int = Field(default_factory=lambda: WORKERS, ge=1)
    out_path: Optional[str] = None

    @validator("axes")
    def check_axes(cls, value):
        unknown = sorted(set(value) - set(SWEEP_AXES))
        if unknown:
            raise ValueError(f"unknown sweep axes {unknown}, expected a subset of {SWEEP_AXES}")
        size = math.prod(len(values) for values in value.values()) if value else 1
        if size > MAX_SWEEP_SIZE:
            raise ValueError(f"sweep has {size} points, at most {MAX_SWEEP_SIZE} allowed")
        return value

    @property
    def size(self) -> int:
        return math.prod(len(values) for values in self.axes.values()) if self.axes else 1

    def points(self) -> List[Dict[str, float]]:
        names = [name for name in SWEEP_AXES if name in self.axes]
        return [
            dict(zip(names, combination))
            for combination in itertools.product(*(self.axes[name] for name in names))
        ]

    def children(self) -> List[Tuple[Dict[str, float], RunConfig]]:
        """
        One run configuration per point of the cross product.

        Only the keys given explicitly in ``base`` are carried over, so defaults
        that depend on a swept value (``M`` on ``n``, ``dt`` on ``sigma``) are
        derived again for each child.

        :raises InvalidConfig: If a child violates a run constraint.
        """
        explicit = self.base.dict(exclude_unset=True)
        children = []
        errors = []
        for point in self.points():
            data = dict(explicit)
            for name, value in point.items():
                if name == "ic_scale":
                    data.update(self.base.scaled(value))
                elif name == "n":
                    data["n"] = int(value)
                else:
                    data[name] = value
            try:
                children.append((point, RunConfig(**data)))
            except ValidationError as error:
                errors.extend(f"{point}: {message}" for message in _messages(error))
        if errors:
            raise InvalidConfig(errors)
        return children


def _messages(error: ValidationError) -> List[str]:
    messages = []
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"] if part != "__root__")
        messages.append(f"{location}: {item['msg']}" if location else item["msg"])
    return messages


def parse_config(source: Union[str, os.PathLike]) -> Union[RunConfig, SweepConfig]:
    """
    Load a run or sweep configuration from a JSON file or inline JSON text.

    A document with a ``base`` key is a sweep, anything else a single run.

    :param source: Path to a JSON file, or the JSON text itself.
    :raises InvalidConfig: Listing every violated constraint.
    :return: The validated configuration with defaults filled in.
    """
    text = str(source)
    path = Path(text)
    origin = "inline text"
    if not text.lstrip().startswith(("{", "[")):
        origin = text
        if not path.is_file():
            raise InvalidConfig([f"configuration file {text} does not exist"])
        text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as error:
        raise InvalidConfig([f"configuration is not valid JSON: {error}"]) from error
    if not isinstance(data, dict):
        raise InvalidConfig(["configuration must be a JSON object"])
    model = SweepConfig if "base" in data else RunConfig
    try:
        config = model.parse_obj(data)
    except ValidationError as error:
        raise InvalidConfig(_messages(error)) from error
    logger.debug("parsed %s from %s", model.__name__, origin)
    return config
