import pandas as pd
from click.testing import CliRunner

from Components.Regatta import LOG_COLUMNS
from main import cli


def _config(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text(
        f"output_dir: {tmp_path / 'results'}\n"
        "matrix:\n"
        "  wind_configs: [A]\n"
        "  fou_sizes: [0, 20]\n"
        "  vertical_movements: [25]\n"
        "  turn_counts: [1]\n"
        "  runs_per_batch: 2\n"
    )
    return path


def test_run_writes_log(tmp_path):
    out = tmp_path / "run.csv"
    result = CliRunner().invoke(cli, ["run", "--cell", "A:Single-50:IT2-20", "--seed", "3", "--out", str(out)])
    assert result.exit_code == 0, result.output
    log = pd.read_csv(out)
    assert list(log.columns) == LOG_COLUMNS
    assert len(log) > 0


def test_run_rejects_bad_cell(tmp_path):
    result = CliRunner().invoke(cli, ["run", "--cell", "Q:Single-50:T1", "--out", str(tmp_path / "x.csv")])
    assert result.exit_code == 1


def test_bad_config_exits_nonzero(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text("matrix:\n  fou_sizes: [-1]\n")
    result = CliRunner().invoke(cli, ["matrix", "--config", str(path)])
    assert result.exit_code == 1


def test_matrix_analyze_plot_data(tmp_path):
    runner = CliRunner()
    config = _config(tmp_path)
    store = tmp_path / "results"

    result = runner.invoke(cli, ["matrix", "--config", str(config), "--workers", "1"])
    assert result.exit_code == 0, result.output
    assert (store / "batch_summary.csv").exists()

    result = runner.invoke(cli, ["analyze", "--store", str(store)])
    assert result.exit_code == 0, result.output
    comparison = pd.read_csv(store / "reports" / "comparison.csv")
    assert len(comparison) == 2

    result = runner.invoke(cli, ["plot-data", "--store", str(store)])
    assert result.exit_code == 0, result.output
    plot = pd.read_csv(store / "reports" / "plot_data.csv")
    assert len(plot) == 2
    assert plot["fou_size"].tolist() == [0.0, 20.0]


def test_matrix_reports_failed_cells(tmp_path):
    config = _config(tmp_path)
    (tmp_path / "results" / "runs").mkdir(parents=True)
    (tmp_path / "results" / "runs" / "A_Single-25_IT2-20").write_text("")
    result = CliRunner().invoke(cli, ["matrix", "--config", str(config)])
    assert result.exit_code == 1
