from __future__ import annotations

import logging
from pathlib import Path

import click

from . import __version__
from .diagnostics import PROBE_KINDS, operator_bound_probe
from .environment import LOG_LEVEL, resolve_out_dir
from .exceptions import InvalidConfig
from .models.config import RunConfig, SweepConfig, parse_config
from .runner import format_probe, output_dir, run_command, sweep_command
from .verification import CRITERIA, run_criteria


def _load(config: str, expected: type) -> RunConfig | SweepConfig:
    parsed = parse_config(config)
    if not isinstance(parsed, expected):
        raise InvalidConfig([f"expected a {expected.__name__}, got a {type(parsed).__name__}"])
    return parsed


def _stem(config: str) -> str:
    return "inline" if config.lstrip().startswith("{") else Path(config).stem


def _fail(ctx: click.Context, error: InvalidConfig) -> None:
    click.secho("Invalid configuration:", fg="red")
    for message in error.errors:
        click.secho(f"  - {message}", fg="red")
    ctx.exit(error.exit_code)


@click.group()
@click.option("-v", "--verbose", count=True, help="Log more; repeat for debug output.")
@click.version_option(
    prog_name=click.style("heleshaw", bold=True),
    version=click.style(__version__, fg="yellow"),
)
@click.pass_context
def cli(ctx, verbose=0):
    """Simulate and verify a near-circular Hele-Shaw bubble."""
    level = LOG_LEVEL
    if verbose:
        level = logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    ctx.ensure_object(dict)


@cli.command()
@click.option("--config", "config_path", required=True, help="JSON file or inline JSON.")
@click.option(
    "--out-dir",
    envvar="HELE_OUT_DIR",
    default=None,
    help="Output root, defaults to the current directory.",
)
@click.pass_context
def run(ctx, config_path, out_dir=None):
    """Integrate one configuration and write its artifacts."""
    try:
        config = _load(config_path, RunConfig)
    except InvalidConfig as error:
        _fail(ctx, error)
    target = output_dir(config, _stem(config_path), out_dir)
    click.secho(f"Running into {target}", fg="yellow")
    code = run_command(config, target)
    if code:
        click.secho(f"Run failed with exit code {code}, see {target / 'summary.json'}", fg="red")
    else:
        click.secho("Run finished", fg="green")
    ctx.exit(code)


@cli.command()
@click.option("--config", "config_path", required=True, help="JSON file or inline JSON.")
@click.option(
    "--workers",
    type=click.IntRange(min=1),
    envvar="HELESHAW_WORKERS",
    default=None,
    help="Worker processes, overrides the configured count.",
)
@click.option("--out-dir", envvar="HELE_OUT_DIR", default=None, help="Output root.")
@click.pass_context
def sweep(ctx, config_path, workers=None, out_dir=None):
    """Run the cross product of a sweep configuration."""
    try:
        config = _load(config_path, SweepConfig)
        target = output_dir(config, _stem(config_path), out_dir)
        click.secho(f"Sweeping {config.size} runs into {target}", fg="yellow")
        code = sweep_command(config, target, workers)
    except InvalidConfig as error:
        _fail(ctx, error)
    if code:
        click.secho(f"Some sweep runs failed, worst exit code {code}", fg="red")
    else:
        click.secho("Sweep finished", fg="green")
    ctx.exit(code)


@cli.command()
@click.option(
    "--only",
    multiple=True,
    type=click.Choice(list(CRITERIA)),
    help="Run only this criterion; repeatable.",
)
@click.option("--gamma-tol", type=float, default=1e-12, show_default=True)
@click.pass_context
def verify(ctx, only=(), gamma_tol=1e-12):
    """Run the acceptance criteria and print a pass/fail table."""
    results = run_criteria(only, gamma_tol=gamma_tol)
    width = max(len(result.slug) for result in results)
    for result in results:
        status = "PASS" if result.passed else "FAIL"
        click.secho(
            f"{status}  {result.slug:<{width}}  {result.seconds:7.1f}s  {result.detail}",
            fg="green" if result.passed else "red",
        )
    failed = [result.slug for result in results if not result.passed]
    if failed:
        click.secho(f"Failed: {', '.join(failed)}", fg="red")
        ctx.exit(1)
    click.secho("All criteria passed", fg="green")
    ctx.exit(0)


@cli.command()
@click.option("--kind", type=click.Choice(PROBE_KINDS), required=True)
@click.option("--s", "s", type=float, default=3.0, show_default=True, help="Sobolev index.")
@click.option("--kmax", type=int, default=32, show_default=True)
@click.option("--out-dir", envvar="HELE_OUT_DIR", default=None, help="Output root.")
@click.pass_context
def probe(ctx, kind, s=3.0, kmax=32, out_dir=None):
    """Tabulate an operator norm ratio against frequency."""
    table = operator_bound_probe(kind, s=s, kmax=kmax)
    text = format_probe(table)
    click.echo(text, nl=False)
    target = resolve_out_dir(out_dir)
    target.mkdir(parents=True, exist_ok=True)
    (target / f"probe_{kind}.dat").write_text(text, encoding="utf-8")
    click.secho(f"Growth ratio {table.growth_ratio:.3g}", fg="green")
    ctx.exit(0)


if __name__ == "__main__":
    cli()
