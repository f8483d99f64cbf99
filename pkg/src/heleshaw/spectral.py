"""Fourier toolkit for 2π-periodic functions sampled on a uniform grid.

Every operator here acts on coefficients with its exact symbol. Coefficients
use numpy's FFT ordering and the normalisation ``f(α_j) = Σ_k f̂(k) e^{ikα_j}``,
so ``f̂ = fft(samples) / M``. Odd symbols (derivatives of odd order, ``H`` and
``Λ``) annihilate the Nyquist mode so real fields stay real.
"""

from __future__ import annotations

import logging
from functools import cached_property, lru_cache
from typing import Callable, Tuple, Union

import numpy as np
from pydantic import validator

from .exceptions import InvalidGrid
from .models.common import HeleShawBaseModel

logger = logging.getLogger(__name__)

Scalar = Union[int, float, complex]


def check_grid(M: int) -> int:
    """
    Validate a working grid size.

    :param int M: Number of grid nodes.
    :raises InvalidGrid: If ``M`` is odd or smaller than 8.
    :return: ``M`` unchanged.
    """
    if M % 2 or M < 8:
        raise InvalidGrid(f"grid size must be even and at least 8, got M={M}")
    return M


@lru_cache(maxsize=None)
def grid(M: int) -> np.ndarray:
    nodes = 2 * np.pi * np.arange(check_grid(M)) / M
    nodes.flags.writeable = False
    return nodes


@lru_cache(maxsize=None)
def wavenumbers(M: int) -> np.ndarray:
    k = np.rint(np.fft.fftfreq(check_grid(M), d=1.0 / M)).astype(int)
    k.flags.writeable = False
    return k


def nyquist_index(M: int) -> int:
    return M // 2


class SpectralField(HeleShawBaseModel):
    """A real or complex 2π-periodic function on the grid ``α_j = 2πj/M``.

    The coefficients are the stored representation; samples are derived on
    first access and cached. Instances are treated as values: operators
    always return new fields and the stored arrays are read-only.
    """

    coeffs: np.ndarray
    is_real: bool = False

    @validator("coeffs", pre=True)
    def check_coeffs(cls, value):
        value = np.array(value, dtype=complex)
        if value.ndim != 1:
            raise ValueError("coefficients must be a one-dimensional array")
        check_grid(value.shape[0])
        value.flags.writeable = False
        return value

    @classmethod
    def from_samples(cls, samples) -> SpectralField:
        samples = np.asarray(samples)
        M = check_grid(samples.shape[0])
        is_real = not np.iscomplexobj(samples)
        field = cls(coeffs=np.fft.fft(samples) / M, is_real=is_real)
        cached = np.array(samples, dtype=float if is_real else complex)
        cached.flags.writeable = False
        field.__dict__["samples"] = cached
        return field

    @classmethod
    def from_coeffs(cls, coeffs, is_real: bool = False) -> SpectralField:
        return cls(coeffs=coeffs, is_real=is_real)

    @classmethod
    def from_function(cls, func: Callable[[np.ndarray], np.ndarray], M: int) -> SpectralField:
        return cls.from_samples(func(grid(M)))

    @classmethod
    def zeros(cls, M: int, is_real: bool = True) -> SpectralField:
        return cls(coeffs=np.zeros(M, dtype=complex), is_real=is_real)

    @classmethod
    def constant(cls, value: Scalar, M: int) -> SpectralField:
        coeffs = np.zeros(M, dtype=complex)
        coeffs[0] = value
        return cls(coeffs=coeffs, is_real=not np.iscomplexobj(value))

    @property
    def M(self) -> int:
        return self.coeffs.shape[0]

    @property
    def grid(self) -> np.ndarray:
        return grid(self.M)

    @property
    def mean(self) -> Scalar:
        return self.coeffs[0].real if self.is_real else self.coeffs[0]

    @cached_property
    def samples(self) -> np.ndarray:
        values = np.fft.ifft(self.coeffs) * self.M
        if self.is_real:
            values = values.real
        values.flags.writeable = False
        return values

    def real(self) -> SpectralField:
        return SpectralField.from_samples(np.real(self.samples))

    def imag(self) -> SpectralField:
        return SpectralField.from_samples(np.imag(self.samples))

    def conj(self) -> SpectralField:
        if self.is_real:
            return self
        return SpectralField.from_samples(np.conj(self.samples))

    def _combine(self, other, op) -> SpectralField:
        if isinstance(other, SpectralField):
            if other.M != self.M:
                raise InvalidGrid(f"cannot combine fields on grids {self.M} and {other.M}")
            return SpectralField(
                coeffs=op(self.coeffs, other.coeffs), is_real=self.is_real and other.is_real
            )
        constant = np.zeros(self.M, dtype=complex)
        constant[0] = other
        return SpectralField(
            coeffs=op(self.coeffs, constant),
            is_real=self.is_real and not np.iscomplexobj(other),
        )

    def __add__(self, other) -> SpectralField:
        return self._combine(other, np.add)

    __radd__ = __add__

    def __sub__(self, other) -> SpectralField:
        return self._combine(other, np.subtract)

    def __rsub__(self, other) -> SpectralField:
        return (-self) + other

    def __neg__(self) -> SpectralField:
        return SpectralField(coeffs=-self.coeffs, is_real=self.is_real)

    def __mul__(self, other) -> SpectralField:
        if isinstance(other, SpectralField):
            return SpectralField.from_samples(self.samples * other.samples)
        return SpectralField(
            coeffs=self.coeffs * other, is_real=self.is_real and not np.iscomplexobj(other)
        )

    __rmul__ = __mul__

    def __truediv__(self, other: Scalar) -> SpectralField:
        return self * (1.0 / other)

    def __repr__(self) -> str:
        kind = "real" if self.is_real else "complex"
        return f"<SpectralField {kind} M={self.M}>"


def transform(samples) -> SpectralField:
    """Forward transform of grid samples into a :class:`SpectralField`."""
    return SpectralField.from_samples(samples)


def inverse(coeffs, real: bool = False) -> np.ndarray:
    """
    Inverse transform of a coefficient array back to grid samples.

    :param coeffs: Fourier coefficients in FFT order.
    :param bool real: Drop the (round-off) imaginary part of the samples.
    :return: The samples ``Σ_k f̂(k) e^{ikα_j}``.
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    M = check_grid(coeffs.shape[0])
    values = np.fft.ifft(coeffs) * M
    return values.real if real else values


def _with_symbol(f: SpectralField, symbol: np.ndarray) -> SpectralField:
    return SpectralField(coeffs=f.coeffs * symbol, is_real=f.is_real)


def derivative(f: SpectralField, m: int = 1) -> SpectralField:
    k = wavenumbers(f.M)
    symbol = (1j * k) ** m
    if m % 2:
        symbol[nyquist_index(f.M)] = 0
    return _with_symbol(f, symbol)


def drop_nyquist(f: SpectralField) -> SpectralField:
    """Zero the Nyquist coefficient, which no odd operator can resolve."""
    symbol = np.ones(f.M, dtype=complex)
    symbol[nyquist_index(f.M)] = 0
    return _with_symbol(f, symbol)


def nyquist_projector(M: int) -> np.ndarray:
    """Real ``M×M`` matrix of :func:`drop_nyquist` acting on grid samples."""
    alternating = (-1.0) ** np.arange(check_grid(M)) / np.sqrt(M)
    return np.eye(M) - np.outer(alternating, alternating)


def hilbert_symbol(M: int) -> np.ndarray:
    """The multiplier ``-i sgn(k)`` of the periodic Hilbert transform."""
    symbol = -1j * np.sign(wavenumbers(M))
    symbol[nyquist_index(M)] = 0
    return symbol


def hilbert(f: SpectralField) -> SpectralField:
    return _with_symbol(f, hilbert_symbol(f.M))


def hilbert_matrix(M: int) -> np.ndarray:
    """Real ``M×M`` matrix of :func:`hilbert` acting on grid samples."""
    columns = np.fft.fft(np.eye(M), axis=0)
    return np.real(np.fft.ifft(hilbert_symbol(M)[:, None] * columns, axis=0))


def lambda_op(f: SpectralField) -> SpectralField:
    symbol = np.abs(wavenumbers(f.M)).astype(complex)
    symbol[nyquist_index(f.M)] = 0
    return _with_symbol(f, symbol)


def sobolev_norm(f: SpectralField, s: float) -> float:
    """
    The ``H^s`` norm in the coefficient-sum convention.

    :param f: The field to measure.
    :param float s: Sobolev index, may be fractional.
    :return: ``sqrt(Σ_{k≠0} |k|^{2s} |f̂(k)|² + |f̂(0)|²)``
    """
    weights = np.abs(wavenumbers(f.M)).astype(float) ** (2 * s)
    weights[0] = 1.0
    return float(np.sqrt(np.sum(weights * np.abs(f.coeffs) ** 2)))


def project_q1(f: SpectralField) -> SpectralField:
    keep = np.abs(wavenumbers(f.M)) > 1
    return _with_symbol(f, keep.astype(complex))


def project_pn(f: SpectralField, n: int) -> SpectralField:
    k = np.abs(wavenumbers(f.M))
    keep = (k > 1) & (k <= n)
    return _with_symbol(f, keep.astype(complex))


def cumulative_integral(f: SpectralField) -> Tuple[Scalar, SpectralField]:
    """
    Split ``∫₀^α f`` into a linear ramp and a periodic part.

    :param f: The integrand.
    :return: ``(ramp_slope, periodic_part)`` with ``ramp_slope = f̂(0)`` and
        ``periodic_part(0) = 0``.
    """
    k = wavenumbers(f.M)
    active = k != 0
    active[nyquist_index(f.M)] = False
    coeffs = np.zeros(f.M, dtype=complex)
    coeffs[active] = f.coeffs[active] / (1j * k[active])
    coeffs[0] = -coeffs.sum()
    return f.mean, SpectralField(coeffs=coeffs, is_real=f.is_real)


def interpolate(f: SpectralField, points) -> np.ndarray:
    """Evaluate the trigonometric interpolant of ``f`` at arbitrary ``α``."""
    points = np.atleast_1d(np.asarray(points, dtype=float))
    k = wavenumbers(f.M)
    basis = np.exp(1j * np.outer(points, k))
    nyquist = nyquist_index(f.M)
    basis[:, nyquist] = np.cos(k[nyquist] * points)
    values = basis @ f.coeffs
    return values.real if f.is_real else values


def resample(f: SpectralField, M: int) -> SpectralField:
    """Zero-pad or truncate ``f`` onto an ``M``-point grid, dropping Nyquist modes."""
    check_grid(M)
    band = min(f.M, M) // 2
    source = wavenumbers(f.M)
    target = wavenumbers(M)
    coeffs = np.zeros(M, dtype=complex)
    src_index = {kk: i for i, kk in enumerate(source) if abs(kk) < band}
    for j, kk in enumerate(target):
        if abs(kk) < band:
            coeffs[j] = f.coeffs[src_index[kk]]
    return SpectralField(coeffs=coeffs, is_real=f.is_real)


def inner_product(f: SpectralField, g: SpectralField) -> complex:
    """The ``L²`` pairing ``Σ_k f̂(k) ĝ(k)*``."""
    return complex(np.vdot(g.coeffs, f.coeffs))


__all__ = [
    "SpectralField",
    "check_grid",
    "cumulative_integral",
    "derivative",
    "drop_nyquist",
    "grid",
    "hilbert",
    "hilbert_matrix",
    "hilbert_symbol",
    "inner_product",
    "interpolate",
    "inverse",
    "lambda_op",
    "nyquist_projector",
    "project_pn",
    "project_q1",
    "resample",
    "sobolev_norm",
    "transform",
    "wavenumbers",
]
