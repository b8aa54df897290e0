"""Command-line entry point: one subcommand per pipeline plus ``report``."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .harness import DEFAULTS, PIPELINES, ConfigError, ExperimentReport, Metric, run_pipeline, write_outputs


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise click.BadParameter(f"cannot read config: {exc}", param_hint="--config") from exc
    if not isinstance(data, dict):
        raise click.BadParameter("config must be a JSON object", param_hint="--config")
    return data


def _summary(report: ExperimentReport) -> None:
    for m in report.metrics:
        status = "----" if m.passed is None else ("PASS" if m.passed else "FAIL")
        bound = "" if m.bound is None else f" (bound {m.bound:.6g})"
        click.echo(f"{status}  {m.stage}.{m.metric} = {m.value:.6g}{bound}")
    if report.error:
        click.echo(f"ERROR {report.error}")
    click.echo("passed" if report.passed else "failed")


def _make_command(pipeline: str) -> click.Command:
    @click.command(name=pipeline, help=f"Run the {pipeline} pipeline.")
    @click.option("--config", "config_path", type=click.Path(dir_okay=False), help="JSON config file.")
    @click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=None, help="Master seed (overrides config).")
    @click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None, help="Output directory.")
    @click.option("--quad-points", type=click.IntRange(2), default=None, help="Gauss-Legendre order per panel.")
    @click.option("--grid-h", type=float, default=None, help="Grid spacing for grid-based pipelines.")
    def command(config_path, seed, out_dir, quad_points, grid_h):
        config = _load_config(config_path)
        if config.get("pipeline", pipeline) != pipeline:
            raise click.BadParameter(f"config is for {config['pipeline']!r}", param_hint="--config")
        for flag, key, value in (("--quad-points", "quad_points", quad_points), ("--grid-h", "h", grid_h)):
            if value is None:
                continue
            if key not in DEFAULTS[pipeline]:
                raise click.UsageError(f"{flag} does not apply to {pipeline}")
            config[key] = value
        try:
            report = run_pipeline(pipeline, config, seed)
        except ConfigError as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(2)
        if out_dir is not None:
            write_outputs(report, out_dir)
        _summary(report)
        sys.exit(0 if report.passed else 1)

    return command


@click.group()
def main() -> None:
    """Constructive smooth Lipschitz approximation: checks and experiments."""


for _name in PIPELINES:
    main.add_command(_make_command(_name))


@main.command(name="report")
@click.option("--out", "out_dir", type=click.Path(exists=True, file_okay=False), required=True, help="Directory with report.json.")
def report_command(out_dir):
    """Print a saved report."""
    data = json.loads((Path(out_dir) / "report.json").read_text())
    metrics = [Metric(r["stage"], r["metric"], r["value"], r["bound"], r["pass"]) for r in data["metrics"]]
    rep = ExperimentReport(data["pipeline"], data["config"], data["seed"], metrics, data.get("error"))
    click.echo(f"pipeline {rep.pipeline}, seed {rep.seed}")
    _summary(rep)
    sys.exit(0 if rep.passed else 1)


if __name__ == "__main__":
    main()
