from __future__ import annotations

import math

import numpy as np
import pytest
import scipy.optimize

from heleshaw.closure import jacobian_dvF, solve_theta_pm1
from heleshaw.exceptions import InadmissibleShape
from heleshaw.models.params import Tolerances
from heleshaw.shape import ShapeState, closure_residual
from heleshaw.spectral import SpectralField, project_pn, resample, sobolev_norm

from .testutils import random_field

TWO_PI = 2 * math.pi


def small_field(rng, disc, radius):
    field = project_pn(random_field(rng, disc.M, 10), disc.n)
    return field * (rng.uniform(0.01, radius) / sobolev_norm(field, 1))


def test_zero_shape_has_zero_harmonic(disc):
    solve = solve_theta_pm1(SpectralField.zeros(disc.M))
    assert solve.converged
    assert abs(solve.theta_hat_1) < 1e-15


def test_single_even_harmonic(disc):
    theta_tilde = ShapeState.from_modes([(2, 0.05, 0.0)], disc).theta_tilde
    solve = solve_theta_pm1(theta_tilde)
    assert abs(solve.theta_hat_1) < 1e-15


@pytest.mark.oracle
def test_matches_brute_force_root(disc):
    theta_tilde = ShapeState.from_modes([(2, 0.1, 0.0), (3, 0.0, 0.1)], disc).theta_tilde
    solve = solve_theta_pm1(theta_tilde)
    fine = resample(theta_tilde, 4096)

    def residual(v):
        value = closure_residual(fine, v[0], v[1])
        return [value.real, value.imag]

    r1, r2 = scipy.optimize.fsolve(residual, [0.0, 0.0], xtol=1e-14)
    assert 1e-4 < abs(solve.theta_hat_1) < 0.05
    assert math.hypot(solve.r1 - r1, solve.r2 - r2) < 1e-10
    assert abs(closure_residual(theta_tilde, solve.r1, solve.r2)) <= Tolerances().closure_tol


def test_jacobian_at_origin(disc):
    jacobian = jacobian_dvF(SpectralField.zeros(disc.M), 0.0, 0.0)
    np.testing.assert_allclose(jacobian, [[0, TWO_PI], [TWO_PI, 0]], atol=1e-13)


def test_jacobian_matches_finite_differences(skewed):
    h = 1e-6
    theta_tilde, r1, r2 = skewed.theta_tilde, skewed.r1, skewed.r2

    def partial(dr1, dr2):
        plus = closure_residual(theta_tilde, r1 + dr1, r2 + dr2)
        minus = closure_residual(theta_tilde, r1 - dr1, r2 - dr2)
        return (plus - minus) / (2 * h)

    d_r1, d_r2 = partial(h, 0.0), partial(0.0, h)
    expected = [[d_r1.real, d_r2.real], [d_r1.imag, d_r2.imag]]
    np.testing.assert_allclose(jacobian_dvF(theta_tilde, r1, r2), expected, atol=1e-7)


def test_jacobian_determinant_near_circle(rng, disc):
    theta_tilde = small_field(rng, disc, 0.1)
    theta_tilde = theta_tilde * (0.1 / sobolev_norm(theta_tilde, 1))
    solve = solve_theta_pm1(theta_tilde)
    det = np.linalg.det(jacobian_dvF(theta_tilde, solve.r1, solve.r2))
    assert abs(abs(det) - TWO_PI**2) <= 0.1 * TWO_PI**2


def test_contraction_and_lipschitz_bounds(rng, disc):
    for _ in range(100):
        u1 = small_field(rng, disc, 0.3)
        u2 = small_field(rng, disc, 0.3)
        g1 = solve_theta_pm1(u1).theta_hat_1
        g2 = solve_theta_pm1(u2).theta_hat_1
        assert abs(g1) <= 0.5 * sobolev_norm(u1, 1)
        assert abs(g1 - g2) <= 0.5 * sobolev_norm(u1 - u2, 1)


def test_warm_start_converges_quickly(rng, disc):
    theta_tilde = small_field(rng, disc, 0.2)
    cold = solve_theta_pm1(theta_tilde)
    nudged = theta_tilde * 1.01
    warm = solve_theta_pm1(nudged, guess=(cold.r1, cold.r2))
    assert warm.iterations <= 5
    assert warm.iterations <= solve_theta_pm1(nudged).iterations


def test_rejects_shapes_outside_ball(disc):
    theta_tilde = ShapeState.from_modes([(2, 0.8, 0.0)], disc).theta_tilde
    with pytest.raises(InadmissibleShape):
        solve_theta_pm1(theta_tilde)


def test_solution_is_inside_contraction_estimate(skewed):
    tolerances = Tolerances()
    assert abs(skewed.theta_hat_1) <= 0.5 * sobolev_norm(skewed.theta_tilde, 1) + tolerances.closure_tol


def test_reports_iterations_and_residual(skewed):
    solve = solve_theta_pm1(skewed.theta_tilde)
    assert solve.iterations >= 1
    assert solve.residual_norm <= Tolerances().closure_tol
