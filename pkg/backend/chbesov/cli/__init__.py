from functools import wraps
from pathlib import Path
from typing import Optional

import click
from pydantic import ValidationError

from chbesov.config import DEFAULT_CONFIG_NAME, ExperimentConfig, apply_overrides, init_config, load_config
from chbesov.experiments import run_inflation_sweep, run_smooth_baseline
from chbesov.initial_data import InadmissibleSpecError
from chbesov.littlewood_paley import BesovParams, besov_norm, block_norms, partition_for
from chbesov.logger import set_debug
from chbesov.storage import load_field
from chbesov.verification import run_verification_suite
from chbesov.version import __version__


def _split_floats(ctx, param, value: Optional[str]):
    if value is None:
        return None
    try:
        return [float(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got '{value}'")


def _split_ints(ctx, param, value: Optional[str]):
    if value is None:
        return None
    try:
        return [int(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated integers, got '{value}'")


def experiment_options(func):
    """Flags overriding the configuration file, shared by the run commands."""
    options = [
        click.option("--d", type=int, help="Spatial dimension"),
        click.option("--k", type=int, help="Lacunarity: block n sits at dyadic index k*n"),
        click.option("--N", "big_n", type=int, help="Number of modulated blocks"),
        click.option("--sigma", type=float, help="Regularity index sigma"),
        click.option("--p", type=float, help="Lebesgue exponent"),
        click.option("--grid-m", type=int, help="Grid points along x_1 (power of two)"),
        click.option("--eps", callback=_split_floats, help="Comma-separated eps values"),
        click.option("--n-list", callback=_split_ints, help="Comma-separated block indices"),
        click.option("--out", type=click.Path(file_okay=False), help="Output directory"),
        click.option("--workers", type=int, help="Concurrent sweep cells"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _configure(ctx: click.Context, overrides: dict) -> ExperimentConfig:
    overrides["N"] = overrides.pop("big_n", None)
    try:
        cfg = apply_overrides(load_config(ctx.obj["config"]), **overrides)
        cfg.check()
        cfg.build_grid()
    except ValueError as e:
        raise click.UsageError(str(e))
    return cfg


def _usage_errors(func):
    @wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (InadmissibleSpecError, ValidationError) as e:
            raise click.UsageError(str(e))

    return wrapper


# Create the main command group for the chbesov CLI
@click.group(context_settings={"auto_envvar_prefix": "CHBESOV"})
@click.version_option(version=__version__, prog_name="chbesov")
@click.option(
    "-c",
    "--config",
    "config_path",
    default=None,
    type=click.Path(dir_okay=False),
    help=f"Configuration file (default: ./{DEFAULT_CONFIG_NAME})",
)
@click.option(
    "-d",
    "--debug",
    default=False,
    is_flag=True,
    help="Set the log level to debug",
)
@click.pass_context
def cli(ctx: click.Context, config_path: Optional[str], debug: bool):
    ctx.ensure_object(dict)
    ctx.obj["config"] = config_path
    if debug:
        set_debug()


@cli.command("init")
@click.argument("path", required=False, default=DEFAULT_CONFIG_NAME)
def chbesov_init(path: str):
    init_config(path, log=True)


@cli.command("sweep")
@experiment_options
@click.pass_context
@_usage_errors
def chbesov_sweep(ctx: click.Context, **overrides):
    cfg = _configure(ctx, overrides)
    result = run_inflation_sweep(cfg)
    click.echo(result.frame().to_string(index=False))
    click.echo(f"eps0 = {result.eps0:.6g}, crossover n = {result.crossover_n}")
    if result.incomplete:
        click.echo(f"{len(result.incomplete)} cells halted before their target time")


@cli.command("baseline")
@experiment_options
@click.pass_context
@_usage_errors
def chbesov_baseline(ctx: click.Context, **overrides):
    cfg = _configure(ctx, overrides)
    result = run_smooth_baseline(cfg)
    click.echo(result.frame().to_string(index=False))


@cli.command("verify")
@experiment_options
@click.option("--chi-shift", type=float, default=0.0, hidden=True)
@click.option(
    "--skip-experiments",
    default=False,
    is_flag=True,
    help="Only run the checks that need no time integration",
)
@click.pass_context
@_usage_errors
def chbesov_verify(ctx: click.Context, chi_shift: float, skip_experiments: bool, **overrides):
    cfg = _configure(ctx, overrides)
    report = run_verification_suite(
        cfg,
        chi_shift=chi_shift,
        out_dir=Path(cfg.experiment.out_dir),
        experiments=not skip_experiments,
    )
    for line in report.lines():
        click.echo(line)
    if not report.passed:
        click.echo(f"{len(report.failures)} checks failed", err=True)
        ctx.exit(1)


@cli.command("norms")
@click.argument("path", type=click.Path(dir_okay=False))
@click.option("--s", "s", type=float, required=True, help="Smoothness index")
@click.option("--p", "p", type=float, default=2.0, show_default=True)
@click.option("--r", "r", type=float, default=float("inf"), show_default=True)
def chbesov_norms(path: str, s: float, p: float, r: float):
    """Besov norm of a stored field snapshot."""
    try:
        field = load_field(path)
        params = BesovParams(s, p, r)
    except (FileNotFoundError, ValueError) as e:
        raise click.UsageError(str(e))
    part = partition_for(field.grid)
    blocks = block_norms(field, p, part)
    for j, value in zip(part.indices, blocks):
        click.echo(f"j={j:>3}  ||Delta_j f||_L{p:g} = {value:.17g}")
    click.echo(f"B^{s:g}_{p:g},{r:g} = {besov_norm(field, params, part):.17g}")
