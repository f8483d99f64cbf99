from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .diagnostics import (
    CSV_HEADER,
    ProbeTable,
    TrajectoryRecord,
    bound_report,
    conservation_report,
    fit_decay_rate,
)
from .environment import HELE_OUT_DIR, resolve_out_dir
from .evolution import Trajectory, integrate
from .exceptions import HeleShawError
from .models.common import HeleShawBaseModel
from .models.config import RunConfig, SweepConfig
from .shape import ShapeState, export_curve

logger = logging.getLogger(__name__)

CSV_SCHEMA_VERSION = 1
SERIES_COLUMNS = ("L", "area", "energy_r", "norm_1", "norm_r", "mode2_abs", "q1_min")
SWEEP_COLUMNS = (
    "index",
    "sigma",
    "amu",
    "n",
    "ic_scale",
    "exit_code",
    "t_final",
    "L_final",
    "area_drift_rel",
    "mode2_rate",
    "bounds_passed",
)


class Simulation(HeleShawBaseModel):
    """A single configured run and the artifacts it leaves behind."""

    config: RunConfig
    keep_states: bool = False

    def initial_state(self) -> ShapeState:
        return self.config.initial_state()

    def run(self) -> Trajectory:
        config = self.config
        logger.info(
            "running n=%d M=%d sigma=%g amu=%g %s dt=%g to t=%g",
            config.discretization.n,
            config.discretization.M,
            config.sigma,
            config.amu,
            config.scheme,
            config.dt,
            config.t_final,
        )
        return integrate(
            self.initial_state(),
            config.physics,
            config.discretization,
            config.stepper,
            config.tolerances,
            keep_states=self.keep_states,
        )

    def summary(self, trajectory: Trajectory) -> Dict[str, Any]:
        records = trajectory.records
        summary: Dict[str, Any] = {
            "schema_version": CSV_SCHEMA_VERSION,
            "config": json.loads(self.config.json()),
            "status": "ok" if trajectory.ok else "failed",
            "exit_code": trajectory.exit_code,
            "error": None if trajectory.ok else str(trajectory.failure),
            "error_type": None if trajectory.ok else type(trajectory.failure).__name__,
            "records": len(records),
        }
        if not records:
            return summary
        conservation = conservation_report(records)
        bounds = bound_report(records, self.config.sigma, self.config.tolerances)
        summary.update(
            {
                "t_final": records[-1].t,
                "L_final": records[-1].L,
                "area_initial": records[0].area,
                "area_drift_rel": conservation.area_drift_rel,
                "L_limit_gap": conservation.L_limit_gap,
                "isoperimetric_gap_initial": conservation.isoperimetric_gap_initial,
                "isoperimetric_gap_final": conservation.isoperimetric_gap_final,
                "theta0_excursion": conservation.theta0_excursion,
                "mode2_rate": _rate(trajectory, "mode2_abs"),
                "energy_rate": _rate(trajectory, "energy_r"),
                "bound_checks": {
                    name: "PASS" if ok else "FAIL" for name, ok in bounds.checks.items()
                },
                "bounds_passed": bounds.passed,
            }
        )
        return summary


def _rate(trajectory: Trajectory, column: str) -> Optional[float]:
    values = trajectory.column(column)
    if len(values) < 10 or np.any(values <= 0):
        return None
    return fit_decay_rate(trajectory.times, values).rate


def output_dir(config: RunConfig | SweepConfig, stem: str, root: str | None = None) -> Path:
    """``out_path`` if configured, else ``runs/<stem>``, both under the output root."""
    base = resolve_out_dir(root if root is not None else HELE_OUT_DIR)
    relative = Path(config.out_path) if config.out_path else Path("runs") / stem
    return base / relative


def write_trajectory_csv(path: Path, records: List[TrajectoryRecord]) -> None:
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for record in records:
            writer.writerow([repr(float(value)) for value in record.as_row()])


def write_series(directory: Path, trajectory: Trajectory) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    times = trajectory.times
    for column in SERIES_COLUMNS:
        values = trajectory.column(column)
        lines = [f"{t!r} {value!r}" for t, value in zip(times.tolist(), values.tolist())]
        (directory / f"{column}.dat").write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_curve(path: Path, state: ShapeState, tolerances) -> None:
    x, y = export_curve(state, tolerances)
    lines = [f"{a!r} {b!r}" for a, b in zip(x.tolist(), y.tolist())]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def run_command(config: RunConfig, out_dir: Path) -> int:
    """
    Run one configuration and write its artifacts into ``out_dir``.

    The trajectory is written even when the run fails; the summary then names
    the failure and carries its exit code.

    :return: ``0`` on success, otherwise the exit code of the failure.
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    simulation = Simulation(config=config, keep_states=True)
    trajectory = simulation.run()
    write_trajectory_csv(out_dir / "trajectory.csv", trajectory.records)
    write_series(out_dir / "series", trajectory)
    if trajectory.states:
        tolerances = config.tolerances
        write_curve(out_dir / "curve_initial.dat", trajectory.states[0], tolerances)
        write_curve(out_dir / "curve_final.dat", trajectory.states[-1], tolerances)
    summary = simulation.summary(trajectory)
    (out_dir / "summary.json").write_text(
        json.dumps(summary, indent=2, allow_nan=True) + "\n", encoding="utf-8"
    )
    if not trajectory.ok:
        logger.error("run failed with exit code %d: %s", trajectory.exit_code, trajectory.failure)
    return trajectory.exit_code


def _child_name(index: int, point: Dict[str, float]) -> str:
    parts = [f"{name}={value:g}" for name, value in point.items()]
    return "_".join([f"{index:04d}"] + parts)


def _run_child(job: Tuple[int, Dict[str, float], RunConfig, str]) -> Dict[str, Any]:
    index, point, config, directory = job
    try:
        code = run_command(config, Path(directory))
    except HeleShawError as error:
        logger.error("sweep child %d failed: %s", index, error)
        code = error.exit_code
    summary_path = Path(directory) / "summary.json"
    summary = json.loads(summary_path.read_text("utf-8")) if summary_path.exists() else {}
    row = {"index": index, **point, "exit_code": code}
    for key in ("t_final", "L_final", "area_drift_rel", "mode2_rate", "bounds_passed"):
        row[key] = summary.get(key)
    return row


def sweep_command(sweep: SweepConfig, out_dir: Path, workers: int | None = None) -> int:
    """
    Run every child of a sweep, one directory each, then merge the summaries.

    Children run in a process pool when more than one worker is requested.

    :return: ``0`` if every child succeeded, else the largest child exit code.
    """
    workers = workers or sweep.workers
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = [
        (index, point, config, str(out_dir / _child_name(index, point)))
        for index, (point, config) in enumerate(sweep.children())
    ]
    logger.info("sweep of %d runs on %d workers", len(jobs), workers)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            rows = list(executor.map(_run_child, jobs))
    else:
        rows = [_run_child(job) for job in jobs]

    merged = {
        "schema_version": CSV_SCHEMA_VERSION,
        "base": json.loads(sweep.base.json()),
        "axes": sweep.axes,
        "children": rows,
    }
    (out_dir / "sweep_summary.json").write_text(
        json.dumps(merged, indent=2) + "\n", encoding="utf-8"
    )
    with (out_dir / "sweep.csv").open("w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(
            handle, fieldnames=SWEEP_COLUMNS, restval="", lineterminator="\n"
        )
        writer.writeheader()
        writer.writerows(rows)
    return max((row["exit_code"] for row in rows), default=0)


def format_probe(table: ProbeTable) -> str:
    lines = [
        f"# {table.kind} s={table.s:g}",
        f"# sup={table.sup:.6e} median={table.median:.6e} "
        f"sup/median={table.sup_over_median:.6g} growth={table.growth_ratio:.6g}",
    ]
    return "\n".join(lines + table.lines()) + "\n"
