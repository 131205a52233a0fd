import sys
from pathlib import Path

import click
from pydantic import ValidationError

from Components.Config import load_config
from Components.Display import console, print_section, print_table, setup_logging
from Components.Experiment import derive_seed, parse_cell_spec, run_matrix
from Components.Regatta import WIND_CONFIGS, parse_course_label, run_episode
from Components.Reports import emit_plot_data, emit_reports, fou_curve_shape, load_plot_data
from Components.ResultStore import ResultStore


def _load_or_exit(config_path):
    try:
        return load_config(config_path)
    except (ValueError, ValidationError) as e:
        console.log(f"[red]Invalid config:[/red] {e}")
        sys.exit(1)


@click.group()
@click.option("--log-level", default="INFO", show_default=True,
              type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False))
def cli(log_level):
    """Type-1 vs interval type-2 fuzzy heading control on a simulated sailing course."""
    setup_logging(log_level)


@cli.command()
@click.option("--cell", "cell_spec", required=True, help="WIND:COURSE:CONTROLLER, e.g. A:Single-50:IT2-20")
@click.option("--seed", type=int, default=None, help="Episode seed; defaults to run 0 of the cell's environment")
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None, help="Per-run CSV log path")
def run(cell_spec, seed, config_path, out_path):
    """Sail a single episode and write its control-cycle log."""
    config = _load_or_exit(config_path)
    try:
        cell = parse_cell_spec(cell_spec)
    except ValueError as e:
        console.log(f"[red]{e}[/red]")
        sys.exit(1)

    if seed is None:
        seed = derive_seed(config.matrix.base_seed, cell.environment_id, 0)

    course = parse_course_label(cell.course, config.physics.leg_length)
    record = run_episode(course, WIND_CONFIGS[cell.wind_config], cell.controller_config(config.controller),
                         seed, config.physics)

    out = Path(out_path) if out_path else config.output_dir / "runs" / f"{cell.cell_id}_{seed}.csv"
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        record.to_frame().to_csv(out, index=False, float_format="%.6f")
    except OSError as e:
        console.log(f"[red]{cell.cell_id}: failed to write log: {e}[/red]")
        sys.exit(1)

    status = "[success]completed[/success]" if record.completed else "[warning]timed out[/warning]"
    print_section(
        cell.cell_id,
        f"Seed: {seed}\n"
        f"Status: {status} after {record.elapsed:.1f} s\n"
        f"Waypoints reached: {record.waypoints_reached}/{len(course.waypoints) - 1}\n"
        f"Heading RMSE: {record.rmse:.3f} deg\n"
        f"Log: {out}",
    )


@cli.command()
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None)
@click.option("--smoke", is_flag=True, help="3 runs per batch instead of the configured count")
@click.option("--workers", type=int, default=None, help="Overrides the config and FOU_REGATTA_WORKERS")
@click.option("--fresh", is_flag=True, help="Re-run batches already in the store")
def matrix(config_path, smoke, workers, fresh):
    """Run every type-1 baseline and FOU sweep cell of the experiment matrix."""
    config = _load_or_exit(config_path)
    outcome = run_matrix(config, smoke=smoke, workers=workers, fresh=fresh)

    if not outcome.ok:
        print_table("Failed cells", ["cell", "error"], sorted(outcome.failures.items()))
        sys.exit(1)
    console.log(f"[green]Batches stored in[/green] {config.output_dir}")


@cli.command()
@click.option("--store", "store_dir", required=True, type=click.Path(file_okay=False, exists=True))
@click.option("--exclude-incomplete", is_flag=True, help="Drop timed-out runs from the RMSE averages")
def analyze(store_dir, exclude_incomplete):
    """Compare every sweep batch with its type-1 baseline and write the report tables."""
    report = emit_reports(ResultStore(store_dir), include_incomplete=not exclude_incomplete)

    print_table(
        "Best FOU size per course",
        ["wind", "course", "T1 RMSE", "T2 RMSE", "FOU", "p-value"],
        [(row.wind_config, row.course, row.t1_mean_rmse, row.t2_mean_rmse, f"{row.fou_size:g}", row.p_value)
         for row in report.best_fou],
    )
    print_table(
        "Best FOU against type-1, by wind uncertainty",
        ["wind", "score", "course", "FOU", "difference", "p-value", "outcome"],
        [(g["wind_config"], g["uncertainty_score"], g["course"], f"{g['fou_size']:g}", g["rmse_difference"],
          g["p_value"], g["outcome"])
         for g in report.gains],
    )

    summary = report.summary
    print_section(
        "Summary",
        f"Significant improvements: {summary['significant_improvements']} of {summary['comparisons']} "
        f"({summary['significant_percent']}%)\n"
        f"Significantly worse: {summary['significantly_worse']}\n"
        f"FOU-0 sanity checks consistent: {summary['sanity_consistent']} of {summary['sanity_checked']}\n"
        f"Incomplete runs: {summary['incomplete_runs']}\n"
        f"Reports: {Path(store_dir) / 'reports'}",
        style="highlight",
    )


@cli.command("plot-data")
@click.option("--store", "store_dir", required=True, type=click.Path(file_okay=False, exists=True))
def plot_data(store_dir):
    """Write RMSE-vs-FOU curve points for every course and wind configuration."""
    path = emit_plot_data(ResultStore(store_dir))
    frame = load_plot_data(path)

    rows = []
    for course in frame["course"].drop_duplicates():
        shape = fou_curve_shape(frame, course)
        if shape.best_fou is None:
            continue
        rows.append((course, f"{shape.best_fou:g}", shape.curve[0.0], shape.curve[shape.best_fou],
                     "yes" if shape.improves_then_degrades else "no"))
    print_table("Averaged FOU curves", ["course", "best FOU", "RMSE at 0", "RMSE at best", "dips then rises"], rows)
    console.log(f"[green]Plot data written to[/green] {path}")


if __name__ == "__main__":
    cli()
