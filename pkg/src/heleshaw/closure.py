"""Newton solve of the closure condition for the first harmonic ``θ̂(±1)``.

Given ``θ̃`` the curve closes only for one pair ``(r1, r2)`` near the origin,
``θ̂(1) = r1 + i r2 = g(θ̃)``. The residual is the complex number
``F(θ̃, v) = ∫ exp(iα + iθ - iθ̂(0)) dα`` and the Jacobian with respect to
``v = (r1, r2)`` is a two-point quadrature of the same integrand.
"""

from __future__ import annotations

import logging
from typing import Tuple

import numpy as np
import scipy.linalg

from .exceptions import ClosureFailure, InadmissibleShape
from .models.common import HeleShawBaseModel
from .models.params import Tolerances
from .shape import TWO_PI, closure_integrand, closure_residual
from .spectral import SpectralField, grid, sobolev_norm

logger = logging.getLogger(__name__)


class ClosureSolve(HeleShawBaseModel):
    r1: float
    r2: float
    residual_norm: float
    iterations: int
    converged: bool

    @property
    def theta_hat_1(self) -> complex:
        return complex(self.r1, self.r2)


def jacobian_dvF(theta_tilde: SpectralField, r1: float, r2: float) -> np.ndarray:
    """
    Real 2×2 matrix of ``δv ↦ D_vF·δv``.

    Rows are the real and imaginary parts of ``F``, columns the derivatives
    with respect to ``r1`` and ``r2``.

    :raises ClosureFailure: If the determinant is below ``1e-8·(2π)²``.
    """
    alpha = grid(theta_tilde.M)
    integrand = closure_integrand(theta_tilde, r1, r2)
    d_r1 = TWO_PI * np.mean(2j * np.cos(alpha) * integrand)
    d_r2 = TWO_PI * np.mean(-2j * np.sin(alpha) * integrand)
    jacobian = np.array([[d_r1.real, d_r2.real], [d_r1.imag, d_r2.imag]])
    if abs(np.linalg.det(jacobian)) < 1e-8 * TWO_PI**2:
        raise ClosureFailure(
            "closure Jacobian is singular", residual=abs(closure_residual(theta_tilde, r1, r2))
        )
    return jacobian


def solve_theta_pm1(
    theta_tilde: SpectralField,
    guess: Tuple[float, float] = (0.0, 0.0),
    tolerances: Tolerances | None = None,
) -> ClosureSolve:
    """
    Solve ``F(θ̃, (r1, r2)) = 0`` by Newton iteration from ``guess``.

    At least one Newton update is taken, so a warm start that already meets
    the tolerance is still polished to round-off.

    :param theta_tilde: The shape, with modes 0 and ±1 removed.
    :param guess: Starting ``(r1, r2)``; the previous step's value when evolving.
    :param tolerances: Solver tolerances, defaults to :class:`Tolerances`.
    :raises InadmissibleShape: If ``‖θ̃‖₁`` exceeds the closure ball.
    :raises ClosureFailure: If Newton does not converge in ``max_newton`` iterations.
    :return: The solved pair with its residual and iteration count.
    """
    tolerances = tolerances or Tolerances()
    norm = sobolev_norm(theta_tilde, 1)
    if not np.isfinite(norm) or norm > tolerances.closure_ball:
        raise InadmissibleShape(
            f"‖θ̃‖₁={norm:.4f} is outside the closure ball {tolerances.closure_ball}"
        )
    v = np.array(guess, dtype=float)
    residual = closure_residual(theta_tilde, *v)
    for iteration in range(1, tolerances.max_newton + 1):
        jacobian = jacobian_dvF(theta_tilde, *v)
        v = v - scipy.linalg.solve(jacobian, [residual.real, residual.imag])
        residual = closure_residual(theta_tilde, *v)
        if abs(residual) <= tolerances.closure_tol:
            logger.debug("closure converged in %d Newton iterations", iteration)
            return ClosureSolve(
                r1=v[0],
                r2=v[1],
                residual_norm=abs(residual),
                iterations=iteration,
                converged=True,
            )
        if not np.all(np.isfinite(v)):
            break
    raise ClosureFailure("closure Newton iteration did not converge", residual=abs(residual))
