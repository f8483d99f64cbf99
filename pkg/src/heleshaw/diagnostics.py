"""Energies, decay fits, conservation and bound checks, and boundedness probes."""

from __future__ import annotations

import logging
import math
from typing import TYPE_CHECKING, Dict, List, Sequence, Tuple

import numpy as np
import scipy.stats

from .closure import solve_theta_pm1
from .exceptions import MismatchedTimes, NonPositiveSeries
from .models.common import HeleShawBaseModel
from .models.params import Discretization, Tolerances
from .shape import OmegaData, ShapeState, build_omega
from .singular_ops import commutator_h, k_op
from .spectral import SpectralField, grid, resample, sobolev_norm

try:
    from typing import Literal
except ImportError:  # pragma: no cover
    from typing_extensions import Literal

if TYPE_CHECKING:
    from .evolution import Trajectory

logger = logging.getLogger(__name__)

CSV_HEADER = (
    "t",
    "L",
    "theta0",
    "r1",
    "r2",
    "area",
    "energy_r",
    "norm_1",
    "norm_r",
    "mode2_abs",
    "gamma_res",
    "closure_res",
    "q1_min",
)

#: Energies below this are treated as round-off in monotonicity checks
ENERGY_FLOOR = 1e-28

ProbeKind = Literal["commutator39", "commutator310", "k37"]
PROBE_KINDS = ("commutator39", "commutator310", "k37")


class TrajectoryRecord(HeleShawBaseModel):
    t: float
    L: float
    theta0: float
    r1: float
    r2: float
    area: float
    energy_r: float
    norm_1: float
    norm_r: float
    mode2_abs: float
    gamma_residual: float
    closure_residual: float
    q1_min: float
    #: ‖θ̃‖_{r+1}, kept for the higher-norm bound but not written to CSV
    norm_r_plus_1: float = 0.0

    @property
    def theta_hat_1_abs(self) -> float:
        return math.hypot(self.r1, self.r2)

    def as_row(self) -> List[float]:
        return [
            self.t,
            self.L,
            self.theta0,
            self.r1,
            self.r2,
            self.area,
            self.energy_r,
            self.norm_1,
            self.norm_r,
            self.mode2_abs,
            self.gamma_residual,
            self.closure_residual,
            self.q1_min,
        ]

    def is_finite(self) -> bool:
        return all(math.isfinite(value) for value in self.as_row())


class DecayFit(HeleShawBaseModel):
    rate: float
    intercept: float
    rsq: float
    window: Tuple[float, float]


class ConservationReport(HeleShawBaseModel):
    area_drift_rel: float
    L_limit_gap: float
    isoperimetric_gap_initial: float
    isoperimetric_gap_final: float
    gap_non_increasing: bool
    theta0_excursion: float


class BoundReport(HeleShawBaseModel):
    checks: Dict[str, bool]
    #: Worst ratio of observed value to allowed value per check
    margins: Dict[str, float]

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    @property
    def failures(self) -> List[str]:
        return [name for name, ok in self.checks.items() if not ok]


class ProbeTable(HeleShawBaseModel):
    kind: str
    s: float
    k: np.ndarray
    ratios: np.ndarray

    @property
    def sup(self) -> float:
        return float(np.max(self.ratios))

    @property
    def median(self) -> float:
        return float(np.median(self.ratios))

    @property
    def sup_over_median(self) -> float:
        if self.median == 0:
            return 0.0 if self.sup == 0 else math.inf
        return self.sup / self.median

    @property
    def growth_ratio(self) -> float:
        """Largest ratio in the upper half of ``k`` over the largest in the lower half."""
        half = len(self.ratios) // 2
        lower = float(np.max(self.ratios[:half]))
        upper = float(np.max(self.ratios[half:]))
        if lower == 0:
            return 0.0 if upper == 0 else math.inf
        return upper / lower

    def lines(self) -> List[str]:
        return [f"{k:d} {ratio!r}" for k, ratio in zip(self.k.tolist(), self.ratios.tolist())]


def energy(state: ShapeState | SpectralField, r: int) -> float:
    """``E = ½ Σ_k |k|^{2r} |θ̂(k)|²`` in the coefficient-sum convention."""
    theta_tilde = state.theta_tilde if isinstance(state, ShapeState) else state
    return 0.5 * sobolev_norm(theta_tilde, r) ** 2


def fit_decay_rate(times, values, transient: float = 0.1) -> DecayFit:
    """
    Fit ``value ≈ exp(intercept - rate·t)`` by least squares in log space.

    :param times: Sample times.
    :param values: Positive samples, at least 10.
    :param float transient: Leading fraction of samples left out of the fit.
    :raises NonPositiveSeries: If any value is zero or negative.
    :return: The fitted rate with its intercept and ``r²``.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.shape != values.shape or len(values) < 10:
        raise ValueError("a decay fit needs at least 10 matching (t, value) points")
    if np.any(values <= 0):
        raise NonPositiveSeries("decay fit values must be strictly positive")
    start = int(len(values) * transient)
    window_t = times[start:]
    fit = scipy.stats.linregress(window_t, np.log(values[start:]))
    return DecayFit(
        rate=-fit.slope,
        intercept=fit.intercept,
        rsq=fit.rvalue**2,
        window=(float(window_t[0]), float(window_t[-1])),
    )


def _column(records: Sequence[TrajectoryRecord], name: str) -> np.ndarray:
    return np.array([getattr(record, name) for record in records], dtype=float)


def conservation_report(records: Sequence[TrajectoryRecord]) -> ConservationReport:
    if not records:
        raise ValueError("conservation report needs at least one record")
    area = _column(records, "area")
    length = _column(records, "L")
    theta0 = _column(records, "theta0")
    gap = length - 2 * np.sqrt(math.pi * area)
    limit = 2 * math.sqrt(math.pi * area[0])
    return ConservationReport(
        area_drift_rel=float(np.max(np.abs(area - area[0])) / area[0]),
        L_limit_gap=float(abs(length[-1] - limit)),
        isoperimetric_gap_initial=float(gap[0]),
        isoperimetric_gap_final=float(gap[-1]),
        gap_non_increasing=bool(np.all(np.diff(gap) <= 1e-12 * length[0])),
        theta0_excursion=float(np.max(np.abs(theta0 - theta0[0]))),
    )


def _worst(observed: np.ndarray, allowed: np.ndarray) -> float:
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(allowed > 0, observed / allowed, np.where(observed > 0, np.inf, 0))
    return float(np.max(ratios)) if len(ratios) else 0.0


def bound_report(
    records: Sequence[TrajectoryRecord],
    sigma: float,
    tolerances: Tolerances | None = None,
    rel_tol: float = 1e-10,
) -> BoundReport:
    """
    Check a trajectory record by record against the decay and guard bounds.

    The exponential envelopes are loose: the observed rates sit far above
    them for smooth data, so a failure points at a broken run.
    """
    tolerances = tolerances or Tolerances()
    t = _column(records, "t") - records[0].t
    energy_r = _column(records, "energy_r")
    norm_r = _column(records, "norm_r")
    higher = _column(records, "norm_r_plus_1") ** 2
    slack = 1 + rel_tol

    allowed = {
        "energy_decay": energy_r[0] * np.exp(-sigma * t / 18) * slack,
        "norm_r_decay": norm_r[0] * np.exp(-sigma * t / 36) * slack,
        "higher_norm_decay": higher[0] * np.exp(-sigma * t / 18) * slack,
        "theta_hat_1": 0.5 * _column(records, "norm_1") + tolerances.closure_tol,
    }
    observed = {
        "energy_decay": energy_r,
        "norm_r_decay": norm_r,
        "higher_norm_decay": higher,
        "theta_hat_1": np.array([record.theta_hat_1_abs for record in records]),
    }
    checks = {name: bool(np.all(observed[name] <= allowed[name])) for name in allowed}
    margins = {name: _worst(observed[name], allowed[name]) for name in allowed}

    q1 = _column(records, "q1_min")
    checks["q1_lower_bound"] = bool(np.all(q1 >= tolerances.q1_warn))
    margins["q1_lower_bound"] = float(tolerances.q1_warn / np.min(q1)) if len(q1) else 0.0

    active = energy_r[:-1] > ENERGY_FLOOR
    dissipation = np.exp(
        -(math.pi**2) * sigma * np.diff(t) / np.max(_column(records, "L")) ** 2
    )
    later, earlier = energy_r[1:][active], energy_r[:-1][active]
    checks["dissipation_rate"] = bool(np.all(later <= earlier * dissipation[active] * slack))
    margins["dissipation_rate"] = _worst(later, earlier * dissipation[active])
    checks["energy_strictly_decreasing"] = bool(np.all(later < earlier))
    margins["energy_strictly_decreasing"] = _worst(later, earlier)

    report = BoundReport(checks=checks, margins=margins)
    if not report.passed:
        logger.warning("bound checks failed: %s", ", ".join(report.failures))
    return report


def cauchy_resolution_check(trajectories: Sequence[Trajectory]) -> List[np.ndarray]:
    """
    ``‖θ̃_n - θ̃_{2n}‖₁`` at matched times for successive pairs of resolutions.

    Each trajectory must keep its states. The coarser field is zero-padded onto
    the finer grid before differencing.

    :param trajectories: Runs of the same physics, ordered by increasing ``n``.
    :raises MismatchedTimes: If two runs were recorded at different times.
    :return: One array of differences per consecutive pair.
    """
    differences = []
    for coarse, fine in zip(trajectories, trajectories[1:]):
        if len(coarse.states) != len(fine.states) or not np.allclose(
            coarse.times, fine.times, rtol=0, atol=1e-12
        ):
            raise MismatchedTimes("trajectories were not recorded at the same times")
        differences.append(
            np.array(
                [
                    sobolev_norm(resample(a.theta_tilde, b.M) - b.theta_tilde, 1)
                    for a, b in zip(coarse.states, fine.states)
                ]
            )
        )
    return differences


def _probe_omega(M: int, epsilon: float) -> OmegaData:
    state = ShapeState.from_modes([(2, epsilon, 0.0)], Discretization(n=2, M=M))
    closure = solve_theta_pm1(state.theta_tilde)
    state = state.with_closure(closure.r1, closure.r2)
    return build_omega(state)


def operator_bound_probe(
    kind: ProbeKind,
    s: float = 3.0,
    kmax: int = 32,
    M: int = 256,
    epsilon: float = 0.05,
    psi: SpectralField | None = None,
) -> ProbeTable:
    """
    Output over input norm of an operator applied to ``sin kα``, ``k = 1..kmax``.

    ``commutator39`` measures ``[H, ψ]`` from ``H⁰`` into ``H^{s-1}``,
    ``commutator310`` from ``H¹`` into ``H^s``, both with ``ψ = e^{cos α}``
    unless ``psi`` is given. ``k37`` measures ``K[ω]`` from ``H⁰`` into
    ``H^{s-2}`` on the shape ``θ̃ = ε cos 2α`` (the circle when ``ε = 0``).
    """
    if kind not in PROBE_KINDS:
        raise ValueError(f"unknown probe kind {kind!r}, expected one of {PROBE_KINDS}")
    if not 2 <= kmax < M // 2:
        raise ValueError(f"kmax={kmax} must lie in [2, {M // 2})")
    alpha = grid(M)
    if psi is None:
        psi = SpectralField.from_samples(np.exp(np.cos(alpha)))
    omega = _probe_omega(M, epsilon) if kind == "k37" else None

    ks = np.arange(1, kmax + 1)
    ratios = np.empty(len(ks))
    for index, k in enumerate(ks):
        f = SpectralField.from_samples(np.sin(k * alpha))
        if kind == "commutator39":
            ratios[index] = sobolev_norm(commutator_h(psi, f), s - 1) / sobolev_norm(f, 0)
        elif kind == "commutator310":
            ratios[index] = sobolev_norm(commutator_h(psi, f), s) / sobolev_norm(f, 1)
        else:
            ratios[index] = sobolev_norm(k_op(omega, f), s - 2) / sobolev_norm(f, 0)
    return ProbeTable(kind=kind, s=s, k=ks, ratios=ratios)
