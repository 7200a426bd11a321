"""Command-line entry point.

    esrsim run <experiment> --config cfg.yaml [--seed N] [--out DIR]
                            [--set key.path=value ...]
    esrsim validate --config cfg.yaml
    esrsim transitions --config cfg.yaml

Exit codes: 0 success, 1 physics/solver failure (diagnostic JSON on
stderr), 2 usage error.  The environment variable ``ESRSIM_OUTPUT_DIR``
overrides the output directory.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from .config import RunConfig
from .errors import ConfigError, EsrSimError, InvalidInputError
from .runner import EXPERIMENTS, format_crossing_table, run_experiment


def _load_config(path, seed=None, assignments=()):
    cfg = RunConfig.from_file(path)
    overrides = {}
    for item in assignments:
        key, _, value = item.partition("=")
        if not key or not value:
            raise click.UsageError(f"--set expects key.path=value, got {item!r}")
        overrides[key] = value
    if seed is not None:
        overrides["seed"] = str(seed)
    if overrides:
        cfg = cfg.with_overrides(overrides)
    return cfg


@click.group()
def main():
    """Pulsed ESR spectrometer simulator."""


@main.command()
@click.argument("experiment")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--seed", type=int, default=None, help="Override the run seed.")
@click.option("--out", "out_dir", default=None, help="Output directory.")
@click.option(
    "--set",
    "assignments",
    multiple=True,
    help="Dotted config override, e.g. --set sequence.tau_s=1e-3.",
)
def run(experiment, config_path, seed, out_dir, assignments):
    """Run a named experiment end to end."""
    if experiment not in EXPERIMENTS:
        raise click.UsageError(
            f"unknown experiment {experiment!r}; choose from {', '.join(sorted(EXPERIMENTS))}"
        )
    try:
        cfg = _load_config(config_path, seed, assignments)
        out = os.environ.get("ESRSIM_OUTPUT_DIR") or out_dir or cfg.output_dir
        manifest = run_experiment(cfg, experiment, Path(out) / experiment)
    except (EsrSimError, ConfigError) as err:
        diagnostic = {
            "error": type(err).__name__,
            "message": str(err),
            "experiment": experiment,
        }
        click.echo(json.dumps(diagnostic, indent=2), err=True)
        sys.exit(1)
    click.echo(json.dumps(manifest.to_dict(), indent=2))


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def validate(config_path):
    """List every configuration invariant violation."""
    try:
        cfg = RunConfig.from_file(config_path)
    except ConfigError as err:
        click.echo(str(err), err=True)
        sys.exit(1)
    problems = cfg.validate()
    if problems:
        for problem in problems:
            click.echo(problem)
        sys.exit(1)
    click.echo("configuration is valid")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def transitions(config_path):
    """Print the table of transitions crossing the cavity frequency."""
    try:
        cfg = RunConfig.from_file(config_path)
        click.echo(format_crossing_table(cfg))
    except (EsrSimError, ConfigError, InvalidInputError) as err:
        click.echo(str(err), err=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
