"""Singular and regularised integral operators on the interface.

``K[ω]`` is applied as a dense ``M×M`` matrix of its smooth, periodic kernel,
so the trapezoid rule is spectrally accurate. The table is built once per
:class:`~heleshaw.shape.OmegaData` and reused by every application, which is
what the γ fixed-point iteration relies on.
"""

from __future__ import annotations

import logging
import math
from functools import lru_cache

import numpy as np

from .exceptions import InadmissibleShape
from .models.common import HeleShawBaseModel
from .models.params import Tolerances
from .shape import OmegaData, ShapeState, guard_q1
from .spectral import SpectralField, drop_nyquist, grid, hilbert

logger = logging.getLogger(__name__)


class KernelTable(HeleShawBaseModel):
    #: Regularised K integrand, analytic limit on the diagonal
    values: np.ndarray
    #: ``id`` of the OmegaData the table was built from
    stamp: int
    q1_min: float


@lru_cache(maxsize=None)
def half_cotangent(M: int) -> np.ndarray:
    """``cot((α_i - α_j)/2) / 2`` with zeros on the diagonal."""
    alpha = grid(M)
    half = (alpha[:, None] - alpha[None, :]) / 2
    np.fill_diagonal(half, 1.0)
    table = 0.5 / np.tan(half)
    np.fill_diagonal(table, 0.0)
    table.flags.writeable = False
    return table


def build_kernel(omega: OmegaData, tolerances: Tolerances | None = None) -> KernelTable:
    tolerances = tolerances or Tolerances()
    q1 = guard_q1(omega, tolerances)
    omega_alpha = omega.omega_alpha.samples
    difference = omega.pairwise.copy()
    np.fill_diagonal(difference, 1.0)
    values = 1.0 / difference - half_cotangent(omega.M) / omega_alpha[None, :]
    np.fill_diagonal(
        values, -omega.omega_alpha_alpha.samples / (2 * omega_alpha**2)
    )
    if not np.all(np.isfinite(values)):
        raise InadmissibleShape("K kernel has non-finite entries")
    return KernelTable(values=values, stamp=id(omega), q1_min=q1)


def kernel_table(omega: OmegaData, tolerances: Tolerances | None = None) -> KernelTable:
    table = omega._kernel
    if table is None or table.stamp != id(omega):
        table = build_kernel(omega, tolerances)
        omega._kernel = table
    return table


def commutator_h(psi: SpectralField, f: SpectralField) -> SpectralField:
    """``[H, ψ]f = H(ψf) - ψ H(f)``"""
    return hilbert(psi * f) - psi * hilbert(f)


def k_op(
    omega: OmegaData, f: SpectralField, tolerances: Tolerances | None = None
) -> SpectralField:
    """
    ``K[ω]f = (1/2πi) ∫ f(α') [1/(ω(α)-ω(α')) - cot((α-α')/2)/(2ω_α(α'))] dα'``

    :raises SelfIntersection: If ``q1_min`` is below the hard floor.
    """
    table = kernel_table(omega, tolerances)
    return SpectralField.from_samples(table.values @ f.samples / (1j * omega.M))


def g_op(
    omega: OmegaData, f: SpectralField, tolerances: Tolerances | None = None
) -> SpectralField:
    """``G[ω]f = ω_α [H, 1/ω_α] f + 2i ω_α K[ω] f``"""
    omega_alpha = omega.omega_alpha.samples
    inverse = SpectralField.from_samples(1.0 / omega_alpha)
    commutator = commutator_h(inverse, f).samples
    kernel = k_op(omega, f, tolerances).samples
    return SpectralField.from_samples(omega_alpha * (commutator + 2j * kernel))


def f_op(
    omega: OmegaData, f: SpectralField, tolerances: Tolerances | None = None
) -> SpectralField:
    """
    ``F[ω]f = Re(G[ω]f / i)``, a real field.

    The Nyquist mode is dropped on input and output. The grid kernel maps it
    to about ``-f``, which leaves ``I + F`` singular.
    """
    applied = g_op(omega, drop_nyquist(f), tolerances)
    return drop_nyquist(SpectralField.from_samples(np.imag(applied.samples)))


def normal_velocity(
    state: ShapeState,
    omega: OmegaData,
    gamma: SpectralField,
    tolerances: Tolerances | None = None,
) -> SpectralField:
    """``U = (π/L) H[γ] + (π/L) Re(G[ω]γ)``"""
    scale = math.pi / state.L
    regular = np.real(g_op(omega, gamma, tolerances).samples)
    return SpectralField.from_samples(scale * (hilbert(gamma).samples + regular))


def tangent_velocity(
    state: ShapeState,
    omega: OmegaData,
    gamma: SpectralField,
    tolerances: Tolerances | None = None,
) -> SpectralField:
    """``W·t = (π/L) F[ω]γ``"""
    return f_op(omega, gamma, tolerances) * (math.pi / state.L)
