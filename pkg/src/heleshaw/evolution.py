"""Galerkin right-hand side and the time integrators.

The evolved unknowns are the Fourier coefficients of ``θ̃`` together with
``L`` and ``θ̂(0)``. The first harmonic ``θ̂(±1)`` is never integrated: every
stage recovers it from ``θ̃`` through the closure solve.
"""

from __future__ import annotations

import logging
import math
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .closure import ClosureSolve, solve_theta_pm1
from .diagnostics import TrajectoryRecord, energy
from .exceptions import (
    ClosureFailure,
    GammaSolveFailure,
    HeleShawError,
    InadmissibleShape,
    SelfIntersection,
)
from .gamma_solver import VortexSheet, solve_gamma
from .models.common import HeleShawBaseModel
from .models.params import Discretization, PhysParams, StepperConfig, Tolerances
from .shape import ShapeState, area, build_omega, check_admissible, theta_alpha
from .singular_ops import kernel_table, normal_velocity
from .spectral import (
    SpectralField,
    cumulative_integral,
    derivative,
    project_pn,
    sobolev_norm,
    wavenumbers,
)

logger = logging.getLogger(__name__)

#: Failures inside a stage that reject the step instead of ending the run
REJECTED = (ClosureFailure, GammaSolveFailure, InadmissibleShape, SelfIntersection)

#: Linear stability limit of classical RK4 on the negative real axis
RK4_STABILITY = 2.785


class RhsEval(HeleShawBaseModel):
    dtheta_tilde: SpectralField
    dL: float
    dtheta0: float
    U: SpectralField
    T: SpectralField
    Gamma: SpectralField
    #: The evaluated state with its closure solved
    state: ShapeState
    closure: ClosureSolve
    sheet: VortexSheet
    q1_min: float

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.dtheta_tilde.coeffs, [self.dL, self.dtheta0]])


def linear_rates(L: float, sigma: float, k) -> np.ndarray:
    """``λ_k = (4π³σ/L³)(|k|³ - |k|)``, zero on the neutral modes ``|k| ≤ 1``."""
    k = np.abs(np.asarray(k, dtype=float))
    return 4 * math.pi**3 * sigma / L**3 * (k**3 - k)


def tangential_T(state: ShapeState, U: SpectralField) -> SpectralField:
    """
    Tangential velocity keeping the parametrisation equal-arclength.

    ``T(α) = ∫₀^α (1+θ_α)U - (α/2π)∫₀^{2π}(1+θ_α)U``, i.e. the periodic part of
    the antiderivative of ``(1+θ_α)U`` with ``T(0) = 0``.
    """
    stretch = theta_alpha(state) + 1.0
    _, periodic = cumulative_integral(stretch * U)
    return periodic


def rhs(
    state: ShapeState,
    params: PhysParams,
    disc: Discretization,
    tolerances: Tolerances | None = None,
) -> RhsEval:
    """
    Evaluate the Galerkin system at ``state``.

    The closure is warm-started from the state's own ``(r1, r2)``.

    :raises ClosureFailure: If the closure solve fails.
    :raises InadmissibleShape: If ``θ̃`` is outside the closure ball.
    :raises SelfIntersection: If ``q1_min`` falls below the floor.
    :raises GammaSolveFailure: If the sheet strength cannot be found.
    """
    tolerances = tolerances or Tolerances()
    closure = solve_theta_pm1(state.theta_tilde, (state.r1, state.r2), tolerances)
    closed = state.with_closure(closure.r1, closure.r2)
    omega = build_omega(closed)
    table = kernel_table(omega, tolerances)
    sheet = solve_gamma(closed, omega, params, tolerances)
    U = normal_velocity(closed, omega, sheet.gamma, tolerances)
    T = tangential_T(closed, U)
    stretch = theta_alpha(closed) + 1.0
    Gamma = derivative(U) + T * stretch
    scale = 2 * math.pi / closed.L
    return RhsEval(
        dtheta_tilde=project_pn(Gamma, disc.n) * scale,
        dL=-2 * math.pi * (stretch * U).mean,
        dtheta0=scale * (T * stretch).mean,
        U=U,
        T=T,
        Gamma=Gamma,
        state=closed,
        closure=closure,
        sheet=sheet,
        q1_min=table.q1_min,
    )


def pack(state: ShapeState) -> np.ndarray:
    return np.concatenate([state.theta_tilde.coeffs, [state.L, state.theta0]])


def unpack(y: np.ndarray, template: ShapeState, disc: Discretization) -> ShapeState:
    """Rebuild a state from ``pack`` layout, keeping ``template``'s ``(r1, r2)`` as guess."""
    M = template.M
    if not np.all(np.isfinite(y)) or not y[M].real > 0:
        raise InadmissibleShape("integrator produced a non-finite or collapsed state")
    samples = np.real(np.fft.ifft(y[:M]) * M)
    theta_tilde = project_pn(SpectralField.from_samples(samples), disc.n)
    return ShapeState(
        theta_tilde=theta_tilde,
        theta0=float(y[M + 1].real),
        r1=template.r1,
        r2=template.r2,
        L=float(y[M].real),
    )


Tendency = Callable[[np.ndarray], np.ndarray]


def _tendency(
    template: ShapeState, params: PhysParams, disc: Discretization, tolerances: Tolerances
) -> Tendency:
    def evaluate(y: np.ndarray) -> np.ndarray:
        return rhs(unpack(y, template, disc), params, disc, tolerances).as_vector()

    return evaluate


def _explicit_rk4(
    state: ShapeState,
    first: RhsEval,
    params: PhysParams,
    disc: Discretization,
    dt: float,
    tolerances: Tolerances,
) -> np.ndarray:
    fastest = linear_rates(state.L, params.sigma, disc.n)
    if fastest * dt > RK4_STABILITY:
        logger.warning(
            "explicit_rk4 dt=%g exceeds the linear stability bound %.3g",
            dt,
            RK4_STABILITY / fastest,
        )
    F = _tendency(state, params, disc, tolerances)
    y = pack(state)
    k1 = first.as_vector()
    k2 = F(y + dt / 2 * k1)
    k3 = F(y + dt / 2 * k2)
    k4 = F(y + dt * k3)
    return y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _if_rk4(
    state: ShapeState,
    first: RhsEval,
    params: PhysParams,
    disc: Discretization,
    dt: float,
    tolerances: Tolerances,
) -> np.ndarray:
    """Integrating-factor RK4 on ``u_t = -λu + N(u)`` with ``L`` frozen at step start."""
    rates = np.concatenate([linear_rates(state.L, params.sigma, wavenumbers(state.M)), [0, 0]])
    E = np.exp(-rates * dt)
    E2 = np.exp(-rates * dt / 2)
    F = _tendency(state, params, disc, tolerances)

    def N(u: np.ndarray, tendency: Optional[np.ndarray] = None) -> np.ndarray:
        if tendency is None:
            tendency = F(u)
        return tendency + rates * u

    u = pack(state)
    N1 = N(u, first.as_vector())
    a = E2 * (u + dt / 2 * N1)
    N2 = N(a)
    b = E2 * u + dt / 2 * N2
    N3 = N(b)
    c = E * u + dt * E2 * N3
    N4 = N(c)
    return E * u + dt / 6 * (E * N1 + 2 * E2 * (N2 + N3) + N4)


SCHEMES: Dict[str, Callable[..., np.ndarray]] = {
    "explicit_rk4": _explicit_rk4,
    "if_rk4": _if_rk4,
}


def _advance(
    state: ShapeState,
    first: Optional[RhsEval],
    params: PhysParams,
    disc: Discretization,
    scheme: str,
    dt: float,
    tolerances: Tolerances,
    depth: int = 0,
) -> ShapeState:
    try:
        if first is None:
            first = rhs(state, params, disc, tolerances)
        y = SCHEMES[scheme](first.state, first, params, disc, dt, tolerances)
        return unpack(y, first.state, disc)
    except REJECTED as error:
        if depth >= tolerances.max_halvings:
            raise InadmissibleShape(
                f"step of dt={dt:g} still rejected after {depth} halvings: {error}"
            ) from error
        logger.warning("step of dt=%g rejected (%s), retrying as two halves", dt, error)
    half = dt / 2
    middle = _advance(state, None, params, disc, scheme, half, tolerances, depth + 1)
    return _advance(middle, None, params, disc, scheme, half, tolerances, depth + 1)


def step(
    state: ShapeState,
    params: PhysParams,
    disc: Discretization,
    stepper: StepperConfig,
    tolerances: Tolerances | None = None,
    dt: float | None = None,
    first: RhsEval | None = None,
) -> ShapeState:
    """
    Advance ``state`` by one step of ``stepper.scheme``.

    A step whose stages hit a closure, γ, admissibility or self-intersection
    failure is retried as two half steps, recursively, up to
    ``max_halvings`` times. A step still failing after that raises
    :class:`~heleshaw.exceptions.InadmissibleShape` chained to the last failure.

    :param dt: Step size, defaults to ``stepper.dt``.
    :param first: A right-hand side already evaluated at ``state``, reused as
        the first stage.
    :return: The new state; its ``(r1, r2)`` are the warm start for the next
        closure solve, not yet solved.
    """
    tolerances = tolerances or Tolerances()
    dt = stepper.dt if dt is None else dt
    return _advance(state, first, params, disc, stepper.scheme, dt, tolerances)


class Trajectory(HeleShawBaseModel):
    records: List[TrajectoryRecord] = []
    #: Closed states at the record times, kept only on request
    states: List[ShapeState] = []
    failure: Optional[HeleShawError] = None

    @property
    def ok(self) -> bool:
        return self.failure is None

    @property
    def times(self) -> np.ndarray:
        return np.array([record.t for record in self.records])

    @property
    def exit_code(self) -> int:
        return 0 if self.failure is None else self.failure.exit_code

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(record, name) for record in self.records], dtype=float)

    def raise_for_failure(self) -> None:
        if self.failure is not None:
            raise self.failure


def make_record(
    t: float,
    evaluation: RhsEval,
    disc: Discretization,
    tolerances: Tolerances | None = None,
) -> TrajectoryRecord:
    state = evaluation.state
    theta_tilde = state.theta_tilde
    return TrajectoryRecord(
        t=t,
        L=state.L,
        theta0=state.theta0,
        r1=state.r1,
        r2=state.r2,
        area=area(state, tolerances),
        energy_r=energy(theta_tilde, disc.r),
        norm_1=sobolev_norm(theta_tilde, 1),
        norm_r=sobolev_norm(theta_tilde, disc.r),
        mode2_abs=float(abs(theta_tilde.coeffs[2])),
        gamma_residual=evaluation.sheet.residual_norm,
        closure_residual=evaluation.closure.residual_norm,
        q1_min=evaluation.q1_min,
        norm_r_plus_1=sobolev_norm(theta_tilde, disc.r + 1),
    )


def _times(stepper: StepperConfig) -> List[Tuple[float, float]]:
    """``(t_start, t_end)`` of every step, the last one clipped to ``t_final``."""
    edges = [min(stepper.t_final, i * stepper.dt) for i in range(stepper.n_steps + 1)]
    edges[-1] = stepper.t_final
    return list(zip(edges[:-1], edges[1:]))


def integrate(
    initial: ShapeState,
    params: PhysParams,
    disc: Discretization,
    stepper: StepperConfig,
    tolerances: Tolerances | None = None,
    keep_states: bool = False,
) -> Trajectory:
    """
    Integrate from ``initial`` to ``stepper.t_final``.

    The initial closure is solved cold. A record is taken at ``t = 0``, every
    ``record_every`` accepted steps, and at the final time. A run that hits a
    hard failure stops there and returns the records so far with the failure
    attached.

    :param initial: Starting state, ``θ̃ = P_n Q₁ θ₀``.
    :param keep_states: Keep the closed state next to every record.
    :return: The trajectory.
    """
    tolerances = tolerances or Tolerances()
    trajectory = Trajectory()

    def keep(t: float, evaluation: RhsEval) -> None:
        trajectory.records.append(make_record(t, evaluation, disc, tolerances))
        if keep_states:
            trajectory.states.append(evaluation.state)

    try:
        check_admissible(initial, tolerances)
        closure = solve_theta_pm1(initial.theta_tilde, tolerances=tolerances)
        state = initial.with_closure(closure.r1, closure.r2)
        evaluation = rhs(state, params, disc, tolerances)
        keep(0.0, evaluation)
        intervals = _times(stepper)
        for index, (t_start, t_end) in enumerate(intervals, start=1):
            state = step(
                evaluation.state,
                params,
                disc,
                stepper,
                tolerances,
                dt=t_end - t_start,
                first=evaluation,
            )
            check_admissible(state, tolerances)
            evaluation = rhs(state, params, disc, tolerances)
            if index % stepper.record_every == 0 or index == len(intervals):
                keep(t_end, evaluation)
    except HeleShawError as error:
        logger.warning("integration stopped: %s", error)
        trajectory.failure = error
    return trajectory
