import pytest

from Components.Config import ControllerConfig, ControllerKind, HarnessConfig, MatrixConfig
from Components.Experiment import (
    SMOKE_RUNS,
    Cell,
    HarnessError,
    derive_seed,
    expand_baselines,
    expand_matrix,
    parse_cell_spec,
    run_batch,
    run_matrix,
)
from Components.Metrics import compare_batches, cumulative_rmse
from Components.Regatta import WIND_CONFIGS
from Components.Reports import emit_reports, fou_curve_shape, load_plot_data
from Components.ResultStore import ResultStore

REDUCED = MatrixConfig(wind_configs=("A", "F"), fou_sizes=(0, 20), vertical_movements=(25,), turn_counts=(1,),
                       runs_per_batch=2)


def test_full_matrix_size():
    cells = expand_matrix(MatrixConfig())
    assert len(cells) == 324
    assert len(set(cells)) == 324
    assert all(cell.controller_kind is ControllerKind.INTERVAL_TYPE2 for cell in cells)


def test_benchmark_adds_straight_course():
    cells = expand_matrix(MatrixConfig(benchmark=True))
    assert len(cells) == 378
    assert sum(cell.course == "Single-0" for cell in cells) == 54


def test_baselines():
    assert len(expand_baselines(MatrixConfig())) == 54
    assert len(expand_baselines(MatrixConfig(benchmark=True))) == 63
    assert all(cell.controller_kind is ControllerKind.TYPE1 for cell in expand_baselines(MatrixConfig()))


def test_matrix_ordering():
    cells = expand_matrix(MatrixConfig())
    assert cells[0] == Cell("A", "Single-25", ControllerKind.INTERVAL_TYPE2, 0)
    assert cells[5] == Cell("A", "Single-25", ControllerKind.INTERVAL_TYPE2, 25)
    assert cells[6].course == "Single-50"
    assert cells[18].course == "Double-25"
    assert cells[-1] == Cell("I", "Double-100", ControllerKind.INTERVAL_TYPE2, 25)


def test_single_cell_matrix():
    matrix = MatrixConfig(wind_configs=("C",), fou_sizes=(20,), vertical_movements=(50,), turn_counts=(1,))
    assert expand_matrix(matrix) == [Cell("C", "Single-50", ControllerKind.INTERVAL_TYPE2, 20)]


def test_seeds_are_injective_per_environment():
    environments = {cell.environment_id for cell in expand_baselines(MatrixConfig(benchmark=True))}
    seeds = {derive_seed(0, environment, run) for environment in environments for run in range(30)}
    assert len(seeds) == len(environments) * 30


def test_seeds_shared_across_controllers():
    t1 = Cell("B", "Double-50")
    it2 = Cell("B", "Double-50", ControllerKind.INTERVAL_TYPE2, 15)
    assert t1.environment_id == it2.environment_id
    assert t1.cell_id != it2.cell_id
    assert derive_seed(3, t1.environment_id, 4) == derive_seed(3, it2.environment_id, 4)
    assert derive_seed(3, t1.environment_id, 4) != derive_seed(4, t1.environment_id, 4)


@pytest.mark.parametrize("spec,expected", [
    ("A:Single-50:IT2-20", Cell("A", "Single-50", ControllerKind.INTERVAL_TYPE2, 20)),
    ("C:Double-100:T1", Cell("C", "Double-100")),
    ("I:Single-0:IT2-0", Cell("I", "Single-0", ControllerKind.INTERVAL_TYPE2, 0)),
])
def test_parse_cell_spec(spec, expected):
    cell = parse_cell_spec(spec)
    assert cell == expected
    assert cell.spec == spec


@pytest.mark.parametrize("spec", ["A:Single-50", "Z:Single-50:T1", "A:Single-30:T1", "A:Single-50:T3",
                                  "A:Single-50:IT2-x", "A:Single-50:IT2--5"])
def test_parse_cell_spec_rejects(spec):
    with pytest.raises(ValueError):
        parse_cell_spec(spec)


def test_cell_controller_config():
    template = ControllerConfig(rudder_limit=20.0)
    ctrl = Cell("A", "Single-25", ControllerKind.INTERVAL_TYPE2, 15).controller_config(template)
    assert ctrl.kind is ControllerKind.INTERVAL_TYPE2
    assert ctrl.fou_size_m == 15.0
    assert ctrl.rudder_limit == 20.0


def test_smoke_batch_is_non_canonical(tmp_path):
    store = ResultStore(tmp_path)
    cell = Cell("B", "Single-25", ControllerKind.INTERVAL_TYPE2, 10)
    batch = run_batch(cell, runs=SMOKE_RUNS, store=store)
    assert batch.runs == 3
    assert not batch.canonical
    assert batch.cell_id == cell.cell_id
    assert list(batch.seeds) == [derive_seed(0, cell.environment_id, i) for i in range(3)]

    for index, seed in enumerate(batch.seeds):
        log = store.load_run_log(cell.cell_id, index, seed)
        assert cumulative_rmse(log["error"]) == pytest.approx(batch.rmse_values[index], abs=1e-5)
        cfg = WIND_CONFIGS["B"]
        assert log["wind_dir"].between(cfg.dir_lower, cfg.dir_upper).all()
        assert log["wind_speed"].between(cfg.speed_lower, cfg.speed_upper).all()

    assert store.load_batch(cell.cell_id, 3, 0) == batch
    assert store.load_batch(cell.cell_id, 30, 0) is None


def test_batch_is_deterministic():
    cell = Cell("G", "Double-25")
    assert run_batch(cell, runs=2, base_seed=5) == run_batch(cell, runs=2, base_seed=5)


def test_batch_write_failure_names_cell(tmp_path):
    store = ResultStore(tmp_path)
    # A file where the cell's run directory should be
    (store.runs_dir / "A_Single-25_T1").write_text("")
    with pytest.raises(HarnessError, match="A_Single-25_T1"):
        run_batch(Cell("A", "Single-25"), runs=1, store=store)


def test_fou_zero_sanity_batch():
    t1 = run_batch(Cell("A", "Single-25"), runs=5)
    it2 = run_batch(Cell("A", "Single-25", ControllerKind.INTERVAL_TYPE2, 0), runs=5)
    assert t1.rmse_values == it2.rmse_values
    assert t1.seeds == it2.seeds
    row = compare_batches(t1, it2)
    assert row.degenerate
    assert row.rmse_difference == 0.0
    assert not row.significant


@pytest.mark.parametrize("cell", [Cell("A", "Single-0")] + [
    Cell("A", "Single-0", ControllerKind.INTERVAL_TYPE2, m) for m in (0, 5, 10, 15)
])
def test_benchmark_course_smoke(cell):
    batch = run_batch(cell, runs=SMOKE_RUNS)
    assert batch.completion_count == SMOKE_RUNS
    assert batch.mean_rmse() < 0.5


@pytest.mark.slow
@pytest.mark.parametrize("cell", [Cell("A", "Single-0")] + [
    Cell("A", "Single-0", ControllerKind.INTERVAL_TYPE2, m) for m in (0, 5, 10, 15)
])
def test_benchmark_course_full(cell):
    batch = run_batch(cell)
    assert batch.completion_count == 30
    assert batch.mean_rmse() < 0.5


def _reduced_config(output_dir, matrix=REDUCED, workers=1):
    return HarnessConfig(output_dir=output_dir, workers=workers, matrix=matrix)


def test_reduced_matrix_is_reproducible(tmp_path):
    first = run_matrix(_reduced_config(tmp_path / "first"))
    second = run_matrix(_reduced_config(tmp_path / "second"))
    assert first.ok and second.ok
    assert len(first.batches) == 6
    assert (tmp_path / "first" / "batch_summary.csv").read_bytes() == \
        (tmp_path / "second" / "batch_summary.csv").read_bytes()


def test_matrix_resumes_from_store(tmp_path):
    config = _reduced_config(tmp_path)
    run_matrix(config)
    summary = (tmp_path / "batch_summary.csv").read_bytes()

    resumed = run_matrix(config)
    assert resumed.reused == 6
    assert (tmp_path / "batch_summary.csv").read_bytes() == summary

    fresh = run_matrix(config, fresh=True)
    assert fresh.reused == 0
    assert (tmp_path / "batch_summary.csv").read_bytes() == summary


def test_smoke_flag_overrides_runs(tmp_path):
    outcome = run_matrix(_reduced_config(tmp_path, REDUCED.model_copy(update={"runs_per_batch": 30})), smoke=True)
    assert all(batch.runs == SMOKE_RUNS for batch in outcome.batches)


def test_parallel_matrix_matches_serial(tmp_path):
    run_matrix(_reduced_config(tmp_path / "serial"))
    run_matrix(_reduced_config(tmp_path / "parallel"), workers=2)
    assert (tmp_path / "serial" / "batch_summary.csv").read_bytes() == \
        (tmp_path / "parallel" / "batch_summary.csv").read_bytes()


def test_failed_cell_is_collected(tmp_path):
    config = _reduced_config(tmp_path)
    ResultStore(tmp_path)
    (tmp_path / "runs" / "F_Single-25_IT2-20").write_text("")
    outcome = run_matrix(config)
    assert not outcome.ok
    assert list(outcome.failures) == ["F_Single-25_IT2-20"]
    assert len(outcome.batches) == 5


@pytest.mark.slow
def test_full_smoke_matrix(tmp_path):
    matrix = MatrixConfig(benchmark=True)
    first = run_matrix(_reduced_config(tmp_path / "first", matrix), smoke=True)
    second = run_matrix(_reduced_config(tmp_path / "second", matrix), smoke=True)
    assert first.ok and second.ok
    assert len(first.batches) == 378 + 63
    assert (tmp_path / "first" / "batch_summary.csv").read_bytes() == \
        (tmp_path / "second" / "batch_summary.csv").read_bytes()

    store = ResultStore(tmp_path / "first")
    for batch in first.batches:
        cfg = WIND_CONFIGS[batch.wind_config]
        for index, seed in enumerate(batch.seeds):
            log = store.load_run_log(batch.cell_id, index, seed)
            assert log["wind_dir"].between(cfg.dir_lower, cfg.dir_upper).all()
            assert log["wind_speed"].between(cfg.speed_lower, cfg.speed_upper).all()


SINGLE_50_SWEEP = MatrixConfig(vertical_movements=(50,), turn_counts=(1,))


def _single_50_curve(output_dir, smoke):
    outcome = run_matrix(_reduced_config(output_dir, SINGLE_50_SWEEP, workers=4), smoke=smoke)
    assert outcome.ok
    assert len(outcome.batches) == 9 * 7
    plot = load_plot_data(emit_reports(ResultStore(output_dir)).paths["plot_data"])
    return plot, fou_curve_shape(plot, "Single-50")


def test_single_50_fou_curve_smoke(tmp_path):
    plot, shape = _single_50_curve(tmp_path, smoke=True)
    assert len(plot) == 54
    assert plot["mean_rmse"].notna().all()
    assert sorted(shape.curve) == [0.0, 5.0, 10.0, 15.0, 20.0, 25.0]
    assert shape.best_fou in (10.0, 15.0, 20.0)
    # FOU 0 sails the same runs as type-1
    fou_zero = plot[plot["fou_size"] == 0.0]
    assert fou_zero["mean_rmse"].to_numpy() == pytest.approx(fou_zero["t1_mean_rmse"].to_numpy())


@pytest.mark.slow
def test_single_50_fou_curve_dips_then_rises(tmp_path):
    _, shape = _single_50_curve(tmp_path, smoke=False)
    assert shape.improves, shape.curve
    assert shape.degrades, shape.curve
