"""Vortex-sheet strength from the second-kind equation ``(I + A_μ F[ω])γ = b``.

Here ``b = (2π/L) σ θ_αα``. The solution lives in the mean-zero subspace, so
every iterate is projected there and the mean that the update would have
carried is kept as a consistency diagnostic.
"""

from __future__ import annotations

import logging
import math
from typing import List

import numpy as np
import scipy.linalg

from .exceptions import GammaSolveFailure
from .models.common import HeleShawBaseModel
from .models.params import PhysParams, Tolerances
from .shape import OmegaData, ShapeState, theta_alpha_alpha
from .singular_ops import f_op, kernel_table
from .spectral import SpectralField, hilbert_matrix, nyquist_projector, sobolev_norm

try:
    from typing import Literal
except ImportError:  # pragma: no cover
    from typing_extensions import Literal

logger = logging.getLogger(__name__)

MEAN_DRIFT_WARNING = 1e-11


class VortexSheet(HeleShawBaseModel):
    gamma: SpectralField
    residual_norm: float
    iterations: int
    method: Literal["fixed_point", "dense"]
    #: Relative mean of the last unprojected update
    mean_drift: float = 0.0


def gamma_rhs(state: ShapeState, params: PhysParams) -> SpectralField:
    """The forcing ``(2π/L) σ θ_αα`` with its (round-off) mean removed."""
    forcing = theta_alpha_alpha(state) * (2 * math.pi * params.sigma / state.L)
    return forcing - forcing.mean


def _relative_residual(
    gamma: SpectralField, applied: SpectralField, forcing: SpectralField, scale: float
) -> float:
    return sobolev_norm(gamma + applied - forcing, 0) / scale


def _stagnating(history: List[float], tolerances: Tolerances) -> bool:
    window = tolerances.stagnation_window
    if len(history) <= window:
        return False
    return history[-1] > tolerances.stagnation_reduction * history[-1 - window]


def assemble_dense(
    omega: OmegaData, params: PhysParams, tolerances: Tolerances | None = None
) -> np.ndarray:
    """
    Dense matrix of ``I + A_μ F[ω]`` on grid samples.

    Like :func:`~heleshaw.singular_ops.f_op` the operator skips the Nyquist mode.

    A last row ``1/√M`` pins the mean to zero, so the result is ``(M+1)×M`` and
    is meant for a least-squares solve against ``[b; 0]``.

    :param omega: Geometry the operator is built on.
    :param params: Physical parameters, only ``amu`` is used.
    :return: The stacked real matrix.
    """
    M = omega.M
    system = np.eye(M)
    if params.amu != 0:
        table = kernel_table(omega, tolerances)
        omega_alpha = omega.omega_alpha.samples
        hilbert_m = hilbert_matrix(M)
        g_matrix = (
            omega_alpha[:, None] * hilbert_m / omega_alpha[None, :]
            - hilbert_m
            + (2.0 / M) * omega_alpha[:, None] * table.values
        )
        keep = nyquist_projector(M)
        system = system + params.amu * keep @ np.imag(g_matrix) @ keep
    constraint = np.full((1, M), 1.0 / math.sqrt(M))
    return np.vstack([system, constraint])


def _solve_dense(
    omega: OmegaData,
    params: PhysParams,
    forcing: SpectralField,
    scale: float,
    tolerances: Tolerances,
) -> VortexSheet:
    matrix = assemble_dense(omega, params, tolerances)
    solution, *_ = scipy.linalg.lstsq(matrix, np.append(forcing.samples, 0.0))
    gamma = SpectralField.from_samples(np.asarray(solution, dtype=float))
    drift = abs(gamma.mean) / scale
    gamma = gamma - gamma.mean
    applied = f_op(omega, gamma, tolerances) * params.amu
    residual = _relative_residual(gamma, applied, forcing, scale)
    if residual > tolerances.gamma_tol:
        raise GammaSolveFailure("dense solve missed gamma_tol", residual=residual)
    return VortexSheet(
        gamma=gamma, residual_norm=residual, iterations=1, method="dense", mean_drift=drift
    )


def solve_gamma(
    state: ShapeState,
    omega: OmegaData,
    params: PhysParams,
    tolerances: Tolerances | None = None,
) -> VortexSheet:
    """
    Solve for the sheet strength by fixed-point iteration.

    Each sweep applies ``γ ← b - A_μ F[ω]γ`` and projects out the mean. When
    the residual stops shrinking by ``stagnation_reduction`` over
    ``stagnation_window`` iterations, or the iteration budget runs out, the
    dense system is solved instead.

    :param state: A closed shape.
    :param omega: Geometry built from ``state``.
    :param params: Surface tension and viscosity contrast.
    :param tolerances: Solver tolerances, defaults to :class:`Tolerances`.
    :raises GammaSolveFailure: If the dense fallback also misses ``gamma_tol``.
    :return: The sheet with its relative residual.
    """
    tolerances = tolerances or Tolerances()
    forcing = gamma_rhs(state, params)
    scale = sobolev_norm(forcing, 0)
    if scale == 0:
        return VortexSheet(
            gamma=SpectralField.zeros(state.M), residual_norm=0.0, iterations=0,
            method="fixed_point",
        )
    if params.amu == 0:
        return VortexSheet(
            gamma=forcing, residual_norm=0.0, iterations=1, method="fixed_point"
        )

    gamma = forcing
    history: List[float] = []
    for iteration in range(1, tolerances.max_gamma_iterations + 1):
        applied = f_op(omega, gamma, tolerances) * params.amu
        residual = _relative_residual(gamma, applied, forcing, scale)
        history.append(residual)
        if residual <= tolerances.gamma_tol:
            drift = abs(applied.mean) / scale
            if drift > MEAN_DRIFT_WARNING:
                logger.warning("gamma mean drift %.3e above %.0e", drift, MEAN_DRIFT_WARNING)
            logger.debug("gamma fixed point converged in %d iterations", iteration)
            return VortexSheet(
                gamma=gamma,
                residual_norm=residual,
                iterations=iteration,
                method="fixed_point",
                mean_drift=drift,
            )
        if not math.isfinite(residual) or _stagnating(history, tolerances):
            break
        update = forcing - applied
        gamma = update - update.mean

    logger.warning(
        "gamma fixed point stalled at residual %.3e after %d iterations, solving densely",
        history[-1],
        len(history),
    )
    return _solve_dense(omega, params, forcing, scale, tolerances)
