from __future__ import annotations

import math

import numpy as np
import pytest

from heleshaw import evolution
from heleshaw.diagnostics import bound_report, conservation_report, fit_decay_rate
from heleshaw.evolution import (
    REJECTED,
    integrate,
    linear_rates,
    pack,
    rhs,
    step,
    tangential_T,
    unpack,
)
from heleshaw.exceptions import GammaSolveFailure, InadmissibleShape
from heleshaw.models.params import Discretization, PhysParams, StepperConfig, Tolerances
from heleshaw.shape import ShapeState
from heleshaw.spectral import SpectralField, wavenumbers

from .testutils import closed_state, max_abs


def test_linear_rates():
    rates = linear_rates(2 * math.pi, 1.0, [0, 1, -1, 2, -3, 4])
    np.testing.assert_allclose(rates, [0, 0, 0, 3, 12, 30], rtol=1e-14)
    assert linear_rates(4 * math.pi, 2.0, 2) == pytest.approx(3 * 2 / 8)


def test_tangential_velocity_cases(circle, disc):
    U = SpectralField.from_function(lambda alpha: np.cos(2 * alpha), disc.M)
    T = tangential_T(circle, U)
    np.testing.assert_allclose(T.samples, np.sin(2 * T.grid) / 2, atol=1e-14)

    constant = SpectralField.constant(1.0, disc.M)
    assert max_abs(tangential_T(circle, constant).samples) < 1e-14


def test_circle_is_stationary(circle, disc, unit_physics):
    evaluation = rhs(circle, unit_physics, disc)
    assert max_abs(evaluation.dtheta_tilde.coeffs) < 1e-12
    assert abs(evaluation.dL) < 1e-12
    assert abs(evaluation.dtheta0) < 1e-12


def test_linear_response_of_second_mode(disc, unit_physics):
    eps = 1e-4
    state = closed_state([(2, eps, 0.0)], disc)
    evaluation = rhs(state, unit_physics, disc)
    assert evaluation.dtheta_tilde.coeffs[2].real == pytest.approx(-3 * eps / 2, rel=1e-2)
    assert evaluation.dtheta_tilde.coeffs[-2].real == pytest.approx(-3 * eps / 2, rel=1e-2)


def test_perimeter_rate_is_quadratic(disc, unit_physics):
    rates = []
    for eps in (0.02, 0.01):
        rates.append(rhs(closed_state([(3, eps, 0.0)], disc), unit_physics, disc).dL)
    assert rates[0] < 0
    assert rates[0] / rates[1] == pytest.approx(4.0, rel=0.05)


def test_rhs_is_projected(skewed, disc):
    evaluation = rhs(skewed, PhysParams(amu=0.5), disc)
    k = np.abs(wavenumbers(disc.M))
    outside = (k <= 1) | (k > disc.n)
    assert np.all(evaluation.dtheta_tilde.coeffs[outside] == 0)
    assert evaluation.closure.converged
    assert 0 < evaluation.q1_min <= 1


def test_pack_and_unpack_keep_the_state(skewed, disc):
    y = pack(skewed)
    assert y.shape == (disc.M + 2,)
    state = unpack(y, skewed, disc)
    assert max_abs(state.theta_tilde.coeffs - skewed.theta_tilde.coeffs) < 1e-15
    assert (state.L, state.theta0, state.r1, state.r2) == (
        skewed.L,
        skewed.theta0,
        skewed.r1,
        skewed.r2,
    )


def test_unpack_rejects_collapsed_state(skewed, disc):
    y = pack(skewed)
    y[disc.M] = -1.0
    with pytest.raises(InadmissibleShape):
        unpack(y, skewed, disc)
    y[disc.M] = np.nan
    with pytest.raises(InadmissibleShape):
        unpack(y, skewed, disc)


def test_step_keeps_circle(circle, disc, unit_physics, short_stepper):
    after = step(circle, unit_physics, disc, short_stepper)
    assert max_abs(after.theta_tilde.coeffs) < 1e-12
    assert after.L == pytest.approx(circle.L, abs=1e-12)


@pytest.mark.parametrize("scheme", ["if_rk4", "explicit_rk4"])
def test_single_step_decay_of_small_mode(scheme, disc, unit_physics):
    eps = 1e-5
    state = closed_state([(2, eps, 0.0)], disc)
    stepper = StepperConfig(scheme=scheme, dt=0.01, t_final=0.01)
    after = step(state, unit_physics, disc, stepper)
    ratio = after.theta_tilde.coeffs[2].real / state.theta_tilde.coeffs[2].real
    assert ratio == pytest.approx(math.exp(-0.03), abs=1e-8)


def test_rejected_step_is_split(perturbed, disc, unit_physics, monkeypatch, caplog):
    original = evolution.SCHEMES["if_rk4"]
    calls = []

    def fussy(state, first, params, disc, dt, tolerances):
        calls.append(dt)
        if dt > 0.006:
            raise InadmissibleShape("step too large")
        return original(state, first, params, disc, dt, tolerances)

    monkeypatch.setitem(evolution.SCHEMES, "if_rk4", fussy)
    stepper = StepperConfig(dt=0.01, t_final=0.01)
    after = step(perturbed, unit_physics, disc, stepper)
    assert calls == [0.01, 0.005, 0.005]
    assert "retrying as two halves" in caplog.text

    monkeypatch.setitem(evolution.SCHEMES, "if_rk4", original)
    middle = step(perturbed, unit_physics, disc, stepper, dt=0.005)
    halves = step(middle, unit_physics, disc, stepper, dt=0.005)
    assert max_abs(after.theta_tilde.coeffs - halves.theta_tilde.coeffs) < 1e-15
    assert after.L == halves.L


def test_halving_gives_up(perturbed, disc, unit_physics, monkeypatch):
    def always(state, first, params, disc, dt, tolerances):
        raise GammaSolveFailure("never", residual=1.0)

    monkeypatch.setitem(evolution.SCHEMES, "if_rk4", always)
    with pytest.raises(InadmissibleShape, match="after 2 halvings") as excinfo:
        step(perturbed, unit_physics, disc, StepperConfig(), Tolerances(max_halvings=2))
    assert isinstance(excinfo.value.__cause__, GammaSolveFailure)
    assert excinfo.value.exit_code == 4


def test_explicit_scheme_blows_up_with_large_step(small_disc, unit_physics):
    state = closed_state([(2, 0.05, 0.0), (7, 0.0, 0.01)], small_disc)
    stepper = StepperConfig(scheme="explicit_rk4", dt=10.0, t_final=10.0)
    with pytest.raises(InadmissibleShape) as excinfo:
        step(state, unit_physics, small_disc, stepper)
    assert isinstance(excinfo.value.__cause__, REJECTED)


def test_integrate_circle(circle, disc, unit_physics, short_stepper):
    trajectory = integrate(circle, unit_physics, disc, short_stepper)
    assert trajectory.ok
    assert trajectory.exit_code == 0
    assert len(trajectory.records) == 11
    np.testing.assert_allclose(trajectory.column("L"), 2 * math.pi, rtol=0, atol=1e-15)
    np.testing.assert_allclose(trajectory.column("area"), math.pi, rtol=1e-14)
    np.testing.assert_allclose(trajectory.times, np.linspace(0, 0.1, 11), atol=1e-15)


def test_record_every(small_disc, unit_physics):
    state = ShapeState.from_modes([(2, 0.05, 0.0)], small_disc)
    stepper = StepperConfig(dt=0.01, t_final=0.1, record_every=3)
    trajectory = integrate(state, unit_physics, small_disc, stepper, keep_states=True)
    np.testing.assert_allclose(trajectory.times, [0, 0.03, 0.06, 0.09, 0.1], atol=1e-15)
    assert len(trajectory.states) == 5


def test_zero_final_time_records_initial_state(perturbed, disc, unit_physics):
    trajectory = integrate(perturbed, unit_physics, disc, StepperConfig(t_final=0.0))
    assert trajectory.ok
    assert [record.t for record in trajectory.records] == [0.0]


def test_large_deformation_fails_cleanly(disc, unit_physics):
    state = ShapeState.from_modes([(2, 0.8, 0.0)], disc)
    trajectory = integrate(state, unit_physics, disc, StepperConfig(t_final=0.1))
    assert not trajectory.ok
    assert trajectory.exit_code == 4
    assert trajectory.records == []
    with pytest.raises(InadmissibleShape):
        trajectory.raise_for_failure()


def test_integrate_honours_loose_closure_tolerance(unit_physics):
    disc = Discretization(n=8, M=32)
    state = ShapeState.from_modes([(2, 0.1, 0.0), (3, 0.0, 0.1)], disc)
    loose = Tolerances(closure_tol=1e-6)
    stepper = StepperConfig(dt=0.01, t_final=0.05)
    trajectory = integrate(state, unit_physics, disc, stepper, loose)
    assert trajectory.ok, trajectory.failure
    assert len(trajectory.records) == 6
    assert np.all(trajectory.column("closure_residual") <= 1e-6)
    assert np.all(np.isfinite(trajectory.column("area")))


@pytest.mark.parametrize("floor, exit_code", [(0.6, 0), (0.7, 5)])
def test_integrate_honours_q1_floor(
    circle, disc, unit_physics, short_stepper, floor, exit_code
):
    tolerances = Tolerances(q1_floor=floor)
    trajectory = integrate(circle, unit_physics, disc, short_stepper, tolerances)
    assert trajectory.exit_code == exit_code
    if exit_code:
        assert trajectory.records == []
    else:
        np.testing.assert_allclose(trajectory.column("q1_min"), 2 / math.pi, rtol=1e-12)


@pytest.mark.slow
def test_smooth_run_satisfies_bounds(small_disc):
    params = PhysParams(sigma=1.0, amu=0.5)
    state = ShapeState.from_modes([(2, 0.05, 0.0), (3, 0.0, 0.03)], small_disc)
    stepper = StepperConfig(dt=0.005, t_final=1.0, record_every=4)
    trajectory = integrate(state, params, small_disc, stepper)
    assert trajectory.ok
    assert all(record.is_finite() for record in trajectory.records)

    report = bound_report(trajectory.records, params.sigma)
    assert report.passed, report.failures
    conservation = conservation_report(trajectory.records)
    assert conservation.area_drift_rel < 1e-6
    assert conservation.gap_non_increasing


@pytest.mark.slow
def test_second_mode_decay_rate(small_disc):
    eps = 1e-3
    params = PhysParams(sigma=1.0, amu=0.8)
    state = ShapeState.from_modes([(2, eps, 0.0)], small_disc)
    stepper = StepperConfig(dt=0.01, t_final=1.0)
    trajectory = integrate(state, params, small_disc, stepper)
    fit = fit_decay_rate(trajectory.times, trajectory.column("mode2_abs"))
    assert fit.rate == pytest.approx(3.0, rel=1e-3)
    assert fit.rsq > 0.999999

