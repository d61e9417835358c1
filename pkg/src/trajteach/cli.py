"""Command-line entry points: study runner and the teaching service."""

from __future__ import annotations

import dataclasses
import logging
import os
import sys

import click

from .experiments import load_study_config, run_study, write_study_outputs


@click.group()
def main():
    """Trajectory reward learning from demonstrations, corrections, preferences."""


@main.group()
def experiment():
    """Run simulated teaching studies."""


@experiment.command("run")
@click.option(
    "--config",
    "config_path",
    type=click.Path(exists=True, dir_okay=False),
    required=True,
    help="Study config TOML.",
)
@click.option(
    "--out",
    "out_dir",
    type=click.Path(file_okay=False),
    required=True,
    help="Output directory for results.csv and summary.csv.",
)
@click.option("--seeds", type=int, default=None, help="Override the config's seed count.")
@click.option("--workers", type=int, default=1, help="Parallel session workers.")
def experiment_run(config_path, out_dir, seeds, workers):
    """Execute every seeded session and write CSV results."""
    cfg = load_study_config(config_path)
    if seeds is not None:
        cfg = dataclasses.replace(cfg, seeds=seeds)
    try:
        rows = run_study(cfg, workers=workers)
    except Exception as exc:
        click.echo(f"study failed: {exc}", err=True)
        sys.exit(1)
    results, summary = write_study_outputs(rows, out_dir)
    click.echo(f"wrote {results} and {summary}")


@main.command()
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option(
    "--data",
    "data_dir",
    type=click.Path(file_okay=False),
    default=None,
    help="Directory for session save/restore.",
)
def serve(port, host, data_dir):
    """Serve the interactive teaching API (and the UI when built)."""
    import uvicorn

    from .service import create_app

    level = os.environ.get("TRAJTEACH_LOG_LEVEL", "info")
    logging.basicConfig(level=level.upper())
    uvicorn.run(create_app(data_dir), host=host, port=port, log_level=level)


if __name__ == "__main__":
    main()
