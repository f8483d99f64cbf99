"""The interface state and the geometry derived from it.

The curve is never stored. It is rebuilt from the tangent-angle deviation
``θ = θ̂(0) + θ̂(±1) harmonics + θ̃`` and the perimeter ``L`` through
``z_α = (L/2π) exp(i(α + θ))`` with the translation gauge ``z(0) = 0``.
"""

from __future__ import annotations

import logging
import math
from functools import cached_property, lru_cache
from typing import Any, Iterable, Optional, Tuple

import numpy as np
from pydantic import PrivateAttr, validator

from .exceptions import ClosureFailure, InadmissibleShape, SelfIntersection
from .models.common import HeleShawBaseModel
from .models.params import Discretization, Tolerances
from .spectral import (
    SpectralField,
    cumulative_integral,
    derivative,
    grid,
    project_pn,
    project_q1,
    sobolev_norm,
    wavenumbers,
)

logger = logging.getLogger(__name__)

TWO_PI = 2 * math.pi


class ShapeState(HeleShawBaseModel):
    #: Tangent angle with modes 0 and ±1 removed
    theta_tilde: SpectralField
    #: Mean tangent angle θ̂(0)
    theta0: float = 0.0
    #: θ̂(1) = r1 + i r2, fixed by the closure condition
    r1: float = 0.0
    r2: float = 0.0
    #: Perimeter
    L: float = TWO_PI

    @validator("theta_tilde")
    def check_theta_tilde(cls, value):
        if not value.is_real:
            raise ValueError("theta_tilde must be a real field")
        low = np.abs(wavenumbers(value.M)) <= 1
        if np.any(value.coeffs[low] != 0):
            raise ValueError("theta_tilde must have modes 0 and ±1 removed (apply Q1)")
        return value

    @validator("L")
    def check_length(cls, value):
        if not value > 0:
            raise ValueError(f"perimeter must be positive, got {value}")
        return value

    @classmethod
    def circle(cls, M: int, L: float = TWO_PI, theta0: float = 0.0) -> ShapeState:
        return cls(theta_tilde=SpectralField.zeros(M), theta0=theta0, L=L)

    @classmethod
    def from_theta(
        cls, theta: SpectralField, disc: Discretization, L: float = TWO_PI
    ) -> ShapeState:
        """Build the initial state ``θ̃ = P_n Q₁ θ₀``; closure is solved separately."""
        theta_tilde = project_pn(project_q1(theta), disc.n)
        return cls(theta_tilde=theta_tilde, L=L)

    @classmethod
    def from_modes(
        cls,
        terms: Iterable[Tuple[int, float, float]],
        disc: Discretization,
        L: float = TWO_PI,
    ) -> ShapeState:
        alpha = grid(disc.M)
        samples = np.zeros(disc.M)
        for k, cos_amp, sin_amp in terms:
            samples += cos_amp * np.cos(k * alpha) + sin_amp * np.sin(k * alpha)
        return cls.from_theta(SpectralField.from_samples(samples), disc, L=L)

    @property
    def M(self) -> int:
        return self.theta_tilde.M

    @property
    def theta_hat_1(self) -> complex:
        return complex(self.r1, self.r2)

    def with_closure(self, r1: float, r2: float) -> ShapeState:
        return self.copy(update={"r1": float(r1), "r2": float(r2)})


def _first_harmonic(state: ShapeState) -> np.ndarray:
    """Samples of ``θ̂(1)e^{iα} + θ̂(-1)e^{-iα} = 2(r1 cos α - r2 sin α)``."""
    alpha = grid(state.M)
    return 2 * (state.r1 * np.cos(alpha) - state.r2 * np.sin(alpha))


def theta_alpha(state: ShapeState) -> SpectralField:
    alpha = grid(state.M)
    harmonic = -2 * (state.r1 * np.sin(alpha) + state.r2 * np.cos(alpha))
    return SpectralField.from_samples(derivative(state.theta_tilde).samples + harmonic)


def theta_alpha_alpha(state: ShapeState) -> SpectralField:
    return SpectralField.from_samples(
        derivative(state.theta_tilde, 2).samples - _first_harmonic(state)
    )


def closure_integrand(theta_tilde: SpectralField, r1: float, r2: float) -> np.ndarray:
    alpha = grid(theta_tilde.M)
    phase = alpha + 2 * (r1 * np.cos(alpha) - r2 * np.sin(alpha)) + theta_tilde.samples
    return np.exp(1j * phase)


def closure_residual(theta_tilde: SpectralField, r1: float, r2: float) -> complex:
    """
    The closure map ``F(θ̃, (r1, r2)) = ∫₀^{2π} exp(iα + iθ - iθ̂(0)) dα``.

    Evaluated with the trapezoid rule on the working grid, which is spectrally
    accurate for the entire integrand.
    """
    integrand = closure_integrand(theta_tilde, r1, r2)
    return complex(TWO_PI * integrand.mean())


class OmegaData(HeleShawBaseModel):
    #: Periodic part of ω = ∫₀^α ω_α, zero at α = 0
    omega: SpectralField
    #: Slope of the linear part of ∫₀^α ω_α, zero for a closed curve
    ramp: complex
    omega_alpha: SpectralField
    omega_alpha_alpha: SpectralField
    _kernel: Optional[Any] = PrivateAttr(default=None)

    @validator("ramp", pre=True)
    def coerce_ramp(cls, value):
        return complex(value)

    @property
    def M(self) -> int:
        return self.omega.M

    @property
    def closure_gap(self) -> float:
        return TWO_PI * abs(self.ramp)

    @cached_property
    def values(self) -> np.ndarray:
        """ω at the grid nodes, ramp included."""
        values = self.omega.samples + self.ramp * grid(self.M)
        values.flags.writeable = False
        return values

    @cached_property
    def pairwise(self) -> np.ndarray:
        """``ω(α_i) - ω(α_j)`` for the closed curve."""
        values = self.omega.samples
        return values[:, None] - values[None, :]


def build_omega(state: ShapeState) -> OmegaData:
    omega_alpha = SpectralField.from_samples(
        closure_integrand(state.theta_tilde, state.r1, state.r2)
    )
    ramp, periodic = cumulative_integral(omega_alpha)
    tangent = theta_alpha(state)
    return OmegaData(
        omega=periodic,
        ramp=ramp,
        omega_alpha=omega_alpha,
        omega_alpha_alpha=SpectralField.from_samples(
            1j * (1 + tangent.samples) * omega_alpha.samples
        ),
    )


def _closed_omega(state: ShapeState, tolerances: Tolerances | None) -> OmegaData:
    tolerances = tolerances or Tolerances()
    omega = build_omega(state)
    if omega.closure_gap > tolerances.closure_tol:
        raise ClosureFailure("curve is not closed", residual=omega.closure_gap)
    return omega


def curve(state: ShapeState, tolerances: Tolerances | None = None) -> np.ndarray:
    omega = _closed_omega(state, tolerances)
    scale = state.L / TWO_PI * np.exp(1j * state.theta0)
    return scale * omega.values


def export_curve(state: ShapeState, tolerances: Tolerances | None = None):
    """Return ``(x, y)`` of the closed curve with the first node repeated at the end."""
    z = curve(state, tolerances)
    z = np.append(z, z[0])
    return z.real, z.imag


@lru_cache(maxsize=None)
def periodic_distance(M: int) -> np.ndarray:
    """``|α_i - α_j|`` folded into ``(0, π]``; the diagonal is ``inf``."""
    index = np.arange(M)
    steps = np.abs(index[:, None] - index[None, :])
    distance = np.minimum(steps, M - steps) * (TWO_PI / M)
    distance[index, index] = np.inf
    distance.flags.writeable = False
    return distance


def q1_min(omega: OmegaData) -> float:
    ratio = np.abs(omega.pairwise) / periodic_distance(omega.M)
    np.fill_diagonal(ratio, np.inf)
    return float(np.min(ratio))


def q1_diagonal(omega: OmegaData) -> np.ndarray:
    """The limit of ``q1`` on the diagonal, which is ``ω_α``."""
    return omega.omega_alpha.samples


def guard_q1(omega: OmegaData, tolerances: Tolerances) -> float:
    q1 = q1_min(omega)
    if q1 < tolerances.q1_floor:
        raise SelfIntersection(q1, tolerances.q1_floor)
    if q1 < tolerances.q1_warn:
        logger.warning("q1_min=%.4f dropped below %.4f", q1, tolerances.q1_warn)
    return q1


def area(state: ShapeState, tolerances: Tolerances | None = None) -> float:
    """Enclosed area ``S = ½ Im ∫ z_α z* dα``; rotation and translation cancel."""
    omega = _closed_omega(state, tolerances)
    integrand = omega.omega_alpha.samples * np.conj(omega.values)
    return float(0.5 * (state.L / TWO_PI) ** 2 * TWO_PI * np.mean(integrand).imag)


def isoperimetric_gap(state: ShapeState, tolerances: Tolerances | None = None) -> float:
    return state.L - 2 * math.sqrt(math.pi * area(state, tolerances))


def theta_alpha_bound_ratio(state: ShapeState, s: float = 1.0) -> float:
    """``‖θ_α‖_s / ‖θ̃_α‖_s``, at most 2 for closed states near the circle."""
    full = sobolev_norm(theta_alpha(state), s)
    tilde = sobolev_norm(derivative(state.theta_tilde), s)
    if tilde == 0:
        return 0.0 if full == 0 else math.inf
    return full / tilde


def check_admissible(state: ShapeState, tolerances: Tolerances) -> None:
    coeffs = state.theta_tilde.coeffs
    if not (np.all(np.isfinite(coeffs)) and math.isfinite(state.L)):
        raise InadmissibleShape("state contains non-finite values")
    if abs(state.L - TWO_PI) >= tolerances.length_band:
        raise InadmissibleShape(
            f"perimeter L={state.L:.6f} left the band |L - 2π| < {tolerances.length_band}"
        )
    norm = sobolev_norm(state.theta_tilde, 1)
    if norm > tolerances.closure_ball:
        raise InadmissibleShape(
            f"‖θ̃‖₁={norm:.4f} exceeds the closure ball {tolerances.closure_ball}"
        )

