"""Acceptance checks run by ``heleshaw verify``.

Each criterion is a function returning ``(passed, detail)``. They are cheap
enough to run together in a few minutes; the long reference trajectory is
computed once and shared.
"""

from __future__ import annotations

import logging
import math
import time
from functools import lru_cache
from typing import Callable, Dict, Iterable, List, Optional, Tuple

import numpy as np
import scipy.linalg
import scipy.optimize

from . import spectral
from .closure import solve_theta_pm1
from .diagnostics import bound_report, cauchy_resolution_check, conservation_report, fit_decay_rate
from .evolution import Trajectory, integrate, rhs
from .gamma_solver import assemble_dense, gamma_rhs, solve_gamma
from .models.common import HeleShawBaseModel
from .models.params import Discretization, PhysParams, StepperConfig, Tolerances
from .shape import ShapeState, build_omega, closure_residual
from .singular_ops import f_op, g_op
from .spectral import SpectralField, grid, project_pn, sobolev_norm

logger = logging.getLogger(__name__)

Outcome = Tuple[bool, str]

IDENTITY_TOL = 1e-11


class CriterionResult(HeleShawBaseModel):
    slug: str
    title: str
    passed: bool
    detail: str
    seconds: float


def _random_field(rng: np.random.Generator, M: int, kmax: int, mean: float = 0.0) -> SpectralField:
    alpha = grid(M)
    samples = np.full(M, mean)
    for k in range(1, kmax + 1):
        a, b = rng.standard_normal(2) / k**2
        samples += a * np.cos(k * alpha) + b * np.sin(k * alpha)
    return SpectralField.from_samples(samples)


def _closed(terms, disc: Discretization, tolerances: Tolerances | None = None) -> ShapeState:
    state = ShapeState.from_modes(terms, disc)
    closure = solve_theta_pm1(state.theta_tilde, tolerances=tolerances)
    return state.with_closure(closure.r1, closure.r2)


def operator_identities(gamma_tol: float) -> Outcome:
    M = 64
    alpha = grid(M)
    worst = 0.0
    for k in range(1, 9):
        got = spectral.hilbert(SpectralField.from_samples(np.cos(k * alpha))).samples
        worst = max(worst, float(np.max(np.abs(got - np.sin(k * alpha)))))
    if worst > IDENTITY_TOL:
        return False, f"H[cos kα] = sin kα violated by {worst:.2e}"
    for k in range(1, 9):
        got = spectral.lambda_op(SpectralField.from_samples(np.cos(k * alpha))).samples
        worst = max(worst, float(np.max(np.abs(got - k * np.cos(k * alpha)))))
    if worst > IDENTITY_TOL:
        return False, f"Λ symbol |k| violated by {worst:.2e}"

    omega0 = build_omega(ShapeState.circle(M))
    rng = np.random.default_rng(7)
    for _ in range(10):
        f = _random_field(rng, M, M // 4, mean=rng.standard_normal())
        worst = max(worst, float(np.max(np.abs(f_op(omega0, f).samples - f.mean))))
        zero_mean = f - f.mean
        worst = max(worst, float(np.max(np.abs(g_op(omega0, zero_mean).samples))))
    if worst > IDENTITY_TOL:
        return False, f"F[ω₀]f = f̂(0) or G[ω₀] annihilation violated by {worst:.2e}"
    return True, f"max deviation {worst:.2e}"


def circle_stationarity(gamma_tol: float) -> Outcome:
    disc = Discretization(n=16, M=64)
    state = ShapeState.circle(disc.M)
    worst = 0.0
    for sigma in (0.5, 1.0, 2.0):
        for amu in (-1.0, -0.5, 0.0, 0.5, 1.0):
            evaluation = rhs(state, PhysParams(sigma=sigma, amu=amu), disc)
            size = float(np.max(np.abs(evaluation.as_vector())))
            worst = max(worst, size)
    return worst <= 1e-12, f"max |rhs| at the circle {worst:.2e}"


def brute_force_closure(theta_tilde: SpectralField, fine: int = 4096) -> Tuple[float, float]:
    """Root of the closure map on a dense quadrature, without the analytic Jacobian."""
    padded = spectral.resample(theta_tilde, fine)

    def residual(v):
        value = closure_residual(padded, v[0], v[1])
        return [value.real, value.imag]

    root = scipy.optimize.fsolve(residual, [0.0, 0.0], xtol=1e-14)
    return float(root[0]), float(root[1])


def closure_solver(gamma_tol: float) -> Outcome:
    M = 64
    origin = solve_theta_pm1(SpectralField.zeros(M)).theta_hat_1
    if abs(origin) > 1e-15:
        return False, f"|g(0)| = {abs(origin):.3e} is not 0"
    rng = np.random.default_rng(11)
    disc = Discretization(n=8, M=M)

    def sample() -> SpectralField:
        field = project_pn(_random_field(rng, M, 8), disc.n)
        return field * (rng.uniform(0.01, 0.3) / sobolev_norm(field, 1))

    for _ in range(100):
        u1, u2 = sample(), sample()
        g1 = solve_theta_pm1(u1).theta_hat_1
        g2 = solve_theta_pm1(u2).theta_hat_1
        if abs(g1) > 0.5 * sobolev_norm(u1, 1):
            return False, f"|g(u)| = {abs(g1):.3e} exceeds ½‖u‖₁"
        if abs(g1 - g2) > 0.5 * sobolev_norm(u1 - u2, 1):
            return False, f"|g(u₁) - g(u₂)| = {abs(g1 - g2):.3e} exceeds ½‖u₁ - u₂‖₁"

    theta_tilde = ShapeState.from_modes([(2, 0.1, 0.0), (3, 0.0, 0.1)], disc).theta_tilde
    newton = solve_theta_pm1(theta_tilde)
    r1, r2 = brute_force_closure(theta_tilde)
    gap = math.hypot(newton.r1 - r1, newton.r2 - r2)
    return gap <= 1e-10, f"Newton vs dense root solve differ by {gap:.2e}"


def gamma_oracle_equivalence(gamma_tol: float) -> Outcome:
    disc = Discretization(n=32, M=128)
    tolerances = Tolerances(gamma_tol=gamma_tol)
    state = _closed([(2, 0.05, 0.0)], disc)
    omega = build_omega(state)
    worst = 0.0
    for amu in (-0.9, 0.9):
        params = PhysParams(sigma=1.0, amu=amu)
        sheet = solve_gamma(state, omega, params, tolerances)
        forcing = gamma_rhs(state, params)
        matrix = assemble_dense(omega, params)
        dense, *_ = scipy.linalg.lstsq(matrix, np.append(forcing.samples, 0.0))
        relative = np.linalg.norm(sheet.gamma.samples - dense) / np.linalg.norm(dense)
        worst = max(worst, float(relative))
    if worst > 1e-10:
        return False, f"fixed point and dense γ differ by {worst:.2e} relative"
    params = PhysParams(sigma=1.0, amu=0.0)
    sheet = solve_gamma(state, omega, params, tolerances)
    if not np.array_equal(sheet.gamma.coeffs, gamma_rhs(state, params).coeffs):
        return False, "A_μ = 0 did not return (2π/L)σθ_αα"
    return True, f"fixed point vs dense {worst:.2e} relative"


def _linear_run(amu: float, epsilon: float) -> Trajectory:
    disc = Discretization(n=16, M=128)
    stepper = StepperConfig(dt=0.01, t_final=1.0)
    initial = ShapeState.from_modes([(2, epsilon, 0.0)], disc)
    return integrate(initial, PhysParams(sigma=1.0, amu=amu), disc, stepper)


def linear_decay_rate(gamma_tol: float) -> Outcome:
    rates = {}
    for amu in (-0.9, 0.0, 0.9):
        trajectory = _linear_run(amu, 1e-3)
        trajectory.raise_for_failure()
        rates[amu] = fit_decay_rate(trajectory.times, trajectory.column("mode2_abs")).rate
    refined = _linear_run(0.0, 5e-4)
    refined.raise_for_failure()
    rates["refined"] = fit_decay_rate(refined.times, refined.column("mode2_abs")).rate
    detail = ", ".join(f"{key}: {value:.5f}" for key, value in rates.items())
    if abs(rates[0.0] - 3.0) > 0.05 * 3.0:
        return False, f"mode-2 rate differs from 3σ: {detail}"
    spread = max(rates.values()) - min(rates.values())
    if spread > 0.01 * rates[0.0]:
        return False, f"rates disagree across A_μ or ε by more than 1%: {detail}"
    return True, detail


@lru_cache(maxsize=None)
def reference_run(gamma_tol: float = 1e-12) -> Trajectory:
    """``θ̃ = 0.05 cos 2α``, ``σ = 1``, ``r = 4``, ``n = 64`` integrated to ``t = 3``."""
    disc = Discretization(n=64, r=4)
    stepper = StepperConfig(dt=0.01, t_final=3.0)
    initial = ShapeState.from_modes([(2, 0.05, 0.0)], disc)
    return integrate(
        initial, PhysParams(sigma=1.0), disc, stepper, Tolerances(gamma_tol=gamma_tol)
    )


def energy_bound(gamma_tol: float) -> Outcome:
    trajectory = reference_run(gamma_tol)
    trajectory.raise_for_failure()
    report = bound_report(trajectory.records, sigma=1.0)
    checks = {name: report.checks[name] for name in ("energy_decay", "norm_r_decay")}
    detail = ", ".join(f"{name} worst ratio {report.margins[name]:.3e}" for name in checks)
    return all(checks.values()), detail


def conservation_limit(gamma_tol: float) -> Outcome:
    trajectory = reference_run(gamma_tol)
    trajectory.raise_for_failure()
    report = conservation_report(trajectory.records)
    detail = (
        f"area drift {report.area_drift_rel:.2e}, |L - 2√(πS₀)| {report.L_limit_gap:.2e}"
    )
    passed = (
        report.area_drift_rel <= 1e-8
        and report.L_limit_gap <= 1e-4
        and report.gap_non_increasing
    )
    return passed, detail


def broadband_terms(epsilon: float = 0.05, kmax: int = 64) -> List[Tuple[int, float, float]]:
    return [(k, epsilon * (2 / k) ** 5, 0.0) for k in range(2, kmax + 1)]


def _galerkin_runs(t_final: float, dt: float) -> List[Trajectory]:
    runs = []
    for n in (16, 32, 64):
        disc = Discretization(n=n)
        initial = ShapeState.from_modes(broadband_terms(), disc)
        trajectory = integrate(
            initial,
            PhysParams(sigma=1.0),
            disc,
            StepperConfig(dt=dt, t_final=t_final),
            keep_states=True,
        )
        trajectory.raise_for_failure()
        runs.append(trajectory)
    return runs


def galerkin_convergence(gamma_tol: float) -> Outcome:
    early = [d[-1] for d in cauchy_resolution_check(_galerkin_runs(0.002, 0.001))]
    ratio = early[0] / early[1] if early[1] > 0 else math.inf
    if ratio < 10:
        return False, f"early-time difference ratio {ratio:.2f} below 10"
    late = [d[-1] for d in cauchy_resolution_check(_galerkin_runs(1.0, 0.01))]
    for n, difference in zip((16, 32), late):
        initial = ShapeState.from_modes(broadband_terms(), Discretization(n=n))
        allowed = sobolev_norm(initial.theta_tilde, 1) / n
        if difference > allowed:
            return False, f"‖θ̃_{n} - θ̃_{2 * n}‖₁ = {difference:.2e} at t = 1 exceeds {allowed:.2e}"
    return True, f"early ratio {ratio:.1f}, t = 1 differences {late[0]:.2e}, {late[1]:.2e}"


def self_convergence_order(dts: Iterable[float] = (0.02, 0.01, 0.005)) -> float:
    disc = Discretization(n=4)
    finals = []
    for dt in dts:
        initial = ShapeState.from_modes([(2, 0.02, 0.0)], disc)
        trajectory = integrate(
            initial,
            PhysParams(sigma=1.0),
            disc,
            StepperConfig(dt=dt, t_final=0.5),
            keep_states=True,
        )
        trajectory.raise_for_failure()
        state = trajectory.states[-1]
        finals.append(np.append(state.theta_tilde.coeffs, state.L))
    coarse = np.max(np.abs(finals[0] - finals[1]))
    fine = np.max(np.abs(finals[1] - finals[2]))
    return float(np.log2(coarse / fine))


def integrator_order(gamma_tol: float) -> Outcome:
    order = self_convergence_order()
    return abs(order - 4) <= 0.3, f"observed order {order:.3f}"


def guard_behavior(gamma_tol: float) -> Outcome:
    q1 = reference_run(gamma_tol).column("q1_min")
    if len(q1) == 0 or np.min(q1) < 1 / 8:
        return False, "q1_min dropped below 1/8 in the admissible run"
    disc = Discretization(n=64)
    initial = ShapeState.from_modes([(2, 0.8, 0.0)], disc)
    trajectory = integrate(initial, PhysParams(sigma=1.0), disc, StepperConfig(t_final=1.0))
    if trajectory.exit_code not in (4, 5):
        return False, f"ε = 0.8 run ended with exit code {trajectory.exit_code}"
    if not all(record.is_finite() for record in trajectory.records):
        return False, "ε = 0.8 run produced non-finite records"
    return True, f"min q1 {np.min(q1):.4f}; ε = 0.8 exit code {trajectory.exit_code}"


CRITERIA: Dict[str, Tuple[str, Callable[[float], Outcome]]] = {
    "operator-identities": ("Operator identity suite", operator_identities),
    "circle-stationarity": ("Circle stationarity", circle_stationarity),
    "closure-solver": ("Closure solver estimates", closure_solver),
    "gamma-oracle-equivalence": ("γ oracle equivalence", gamma_oracle_equivalence),
    "linear-decay-rate": ("Linear decay rate", linear_decay_rate),
    "energy-bound": ("Energy decay bound", energy_bound),
    "conservation-limit": ("Area conservation and perimeter limit", conservation_limit),
    "galerkin-convergence": ("Galerkin convergence", galerkin_convergence),
    "integrator-order": ("Time-integrator order", integrator_order),
    "guard-behavior": ("Guard behavior", guard_behavior),
}


def run_criteria(
    only: Optional[Iterable[str]] = None, gamma_tol: float = 1e-12
) -> List[CriterionResult]:
    """
    Run the selected acceptance criteria in their canonical order.

    A criterion that raises is reported as failed with the error as detail.

    :param only: Criterion slugs to run, all when empty.
    :param gamma_tol: γ tolerance handed to every solve that takes one.
    :raises KeyError: On an unknown slug.
    """
    selected = list(only or CRITERIA)
    unknown = [slug for slug in selected if slug not in CRITERIA]
    if unknown:
        raise KeyError(f"unknown criteria {unknown}; choose from {list(CRITERIA)}")
    results = []
    for slug in CRITERIA:
        if slug not in selected:
            continue
        title, check = CRITERIA[slug]
        started = time.perf_counter()
        try:
            passed, detail = check(gamma_tol)
        except Exception as error:  # noqa: BLE001
            logger.exception("criterion %s raised", slug)
            passed, detail = False, f"{type(error).__name__}: {error}"
        results.append(
            CriterionResult(
                slug=slug,
                title=title,
                passed=passed,
                detail=detail,
                seconds=time.perf_counter() - started,
            )
        )
    reference_run.cache_clear()
    return results
