from __future__ import annotations

import numpy as np
import pytest

from heleshaw.models.params import Discretization, PhysParams, StepperConfig
from heleshaw.shape import ShapeState, build_omega

from .testutils import closed_state


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def disc():
    return Discretization(n=32, M=128)


@pytest.fixture
def small_disc():
    return Discretization(n=16, M=64)


@pytest.fixture
def circle(disc):
    return ShapeState.circle(disc.M)


@pytest.fixture
def perturbed(disc):
    """The closed state ``θ̃ = 0.05 cos 2α``."""
    return closed_state([(2, 0.05, 0.0)], disc)


@pytest.fixture
def perturbed_omega(perturbed):
    return build_omega(perturbed)


@pytest.fixture
def skewed(disc):
    """A closed state with several modes and nonzero ``θ̂(±1)``."""
    return closed_state([(2, 0.04, 0.01), (3, 0.0, 0.03), (5, 0.01, 0.0)], disc)


@pytest.fixture
def unit_physics():
    return PhysParams(sigma=1.0, amu=0.0)


@pytest.fixture
def short_stepper():
    return StepperConfig(dt=0.01, t_final=0.1)


@pytest.fixture
def out_root(tmp_path, monkeypatch):
    monkeypatch.setenv("HELE_OUT_DIR", str(tmp_path))
    monkeypatch.chdir(tmp_path)
    yield tmp_path
