import hashlib
import logging
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from rich.progress import Progress

from Components.Config import (
    ControllerConfig,
    ControllerKind,
    HarnessConfig,
    MatrixConfig,
    PhysicsConfig,
    resolve_workers,
)
from Components.Display import console
from Components.Metrics import CANONICAL_RUNS, BatchResult
from Components.Regatta import WIND_CONFIGS, build_course, parse_course_label, run_episode
from Components.ResultStore import ResultStore

logger = logging.getLogger(__name__)

SMOKE_RUNS = 3
BENCHMARK_COURSE = "Single-0"


class HarnessError(RuntimeError):
    pass


@dataclass(frozen=True)
class Cell:
    wind_config: str
    course: str
    controller_kind: ControllerKind = ControllerKind.TYPE1
    fou_size: float = 0.0

    @property
    def controller_label(self) -> str:
        if self.controller_kind is ControllerKind.TYPE1:
            return "T1"
        return f"IT2-{self.fou_size:g}"

    @property
    def cell_id(self) -> str:
        return f"{self.wind_config}_{self.course}_{self.controller_label}"

    @property
    def environment_id(self) -> str:
        """Wind and course only: every controller in an environment sails the same seeds."""
        return f"{self.wind_config}_{self.course}"

    @property
    def spec(self) -> str:
        return f"{self.wind_config}:{self.course}:{self.controller_label}"

    def controller_config(self, template: ControllerConfig) -> ControllerConfig:
        return template.model_copy(update={"kind": self.controller_kind, "fou_size_m": float(self.fou_size)})


def parse_cell_spec(spec: str) -> Cell:
    """'A:Single-50:IT2-20' or 'C:Double-100:T1'."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise ValueError(f"Invalid cell spec {spec!r}, expected WIND:COURSE:CONTROLLER")
    wind, course, controller = parts

    if wind not in WIND_CONFIGS:
        raise ValueError(f"Unknown wind configuration {wind!r}")
    parse_course_label(course)

    if controller.upper() == "T1":
        return Cell(wind, course)
    if controller.upper().startswith("IT2-"):
        try:
            fou_size = float(controller[4:])
        except ValueError:
            raise ValueError(f"Invalid FOU size in {controller!r}")
        if fou_size < 0:
            raise ValueError(f"FOU size must be >= 0, got {fou_size}")
        return Cell(wind, course, ControllerKind.INTERVAL_TYPE2, fou_size)
    raise ValueError(f"Invalid controller {controller!r}, expected T1 or IT2-<fou>")


def matrix_courses(m: MatrixConfig) -> list[str]:
    courses = [BENCHMARK_COURSE] if m.benchmark else []
    courses += [build_course(turns, vertical).label for turns in m.turn_counts for vertical in m.vertical_movements]
    return courses


def expand_matrix(m: MatrixConfig) -> list[Cell]:
    """The type-2 FOU sweep, ordered by wind, course, FOU size."""
    return [
        Cell(wind, course, ControllerKind.INTERVAL_TYPE2, fou_size)
        for wind in m.wind_configs
        for course in matrix_courses(m)
        for fou_size in m.fou_sizes
    ]


def expand_baselines(m: MatrixConfig) -> list[Cell]:
    """One type-1 cell per (wind, course) environment of the sweep."""
    return [Cell(wind, course) for wind in m.wind_configs for course in matrix_courses(m)]


def derive_seed(base_seed: int, environment_id: str, run_index: int) -> int:
    digest = hashlib.md5(f"{base_seed}:{environment_id}:{run_index}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def run_batch(cell: Cell, runs: int = CANONICAL_RUNS, base_seed: int = 0,
              physics: PhysicsConfig = PhysicsConfig(),
              controller: ControllerConfig = ControllerConfig(),
              store: Optional[ResultStore] = None) -> BatchResult:
    """
    Sail `runs` episodes of one cell and summarise them.

    Run logs and the batch file go to `store` when one is given; any I/O failure
    is re-raised as HarnessError naming the cell.
    """
    course = parse_course_label(cell.course, physics.leg_length)
    wind = WIND_CONFIGS[cell.wind_config]
    ctrl = cell.controller_config(controller)

    seeds, rmse_values, completed = [], [], []
    for run_index in range(runs):
        seed = derive_seed(base_seed, cell.environment_id, run_index)
        record = run_episode(course, wind, ctrl, seed, physics)
        if store is not None:
            try:
                store.save_run_log(cell.cell_id, run_index, record)
            except OSError as e:
                raise HarnessError(f"{cell.cell_id}: failed to write run {run_index} log: {e}") from e
        seeds.append(seed)
        rmse_values.append(record.rmse)
        completed.append(record.completed)

    batch = BatchResult(cell.wind_config, cell.course, cell.controller_kind, float(cell.fou_size),
                        tuple(seeds), tuple(rmse_values), tuple(completed))
    if runs != CANONICAL_RUNS:
        logger.info(f"{cell.cell_id}: non-canonical batch of {runs} runs")

    if store is not None:
        try:
            store.save_batch(batch, base_seed)
        except OSError as e:
            raise HarnessError(f"{cell.cell_id}: failed to save batch: {e}") from e
    return batch


def _run_cell_task(cell: Cell, runs: int, base_seed: int, physics: PhysicsConfig,
                   controller: ControllerConfig, store_dir: Path) -> BatchResult:
    # Worker processes open their own handle on the store
    return run_batch(cell, runs, base_seed, physics, controller, ResultStore(store_dir))


@dataclass
class MatrixOutcome:
    batches: list[BatchResult] = field(default_factory=list)
    failures: dict[str, str] = field(default_factory=dict)
    reused: int = 0

    @property
    def ok(self) -> bool:
        return not self.failures


def run_matrix(config: HarnessConfig, smoke: bool = False, workers: Optional[int] = None,
               fresh: bool = False) -> MatrixOutcome:
    """
    Run every baseline and sweep cell of the configured matrix.

    Stored batches with matching settings are reused unless `fresh`. A failing
    cell is logged and recorded; the rest of the matrix still runs.
    """
    runs = SMOKE_RUNS if smoke else config.matrix.runs_per_batch
    base_seed = config.matrix.base_seed
    store = ResultStore(config.output_dir)
    workers = resolve_workers(config, workers)

    cells = expand_baselines(config.matrix) + expand_matrix(config.matrix)
    outcome = MatrixOutcome()
    pending = []
    for cell in cells:
        cached = None if fresh else store.load_batch(cell.cell_id, runs, base_seed)
        if cached is not None:
            outcome.batches.append(cached)
            outcome.reused += 1
        else:
            pending.append(cell)

    console.log(f"[cyan]Matrix:[/cyan] {len(cells)} cells, {len(pending)} to run, "
                f"{outcome.reused} reused, {runs} runs per batch, {workers} worker(s)")

    with Progress(console=console) as progress:
        task = progress.add_task("[cyan]Running batches...", total=len(pending))

        if workers == 1:
            for cell in pending:
                try:
                    outcome.batches.append(
                        run_batch(cell, runs, base_seed, config.physics, config.controller, store))
                except Exception as e:
                    logger.error(f"Cell {cell.cell_id} failed: {e}")
                    outcome.failures[cell.cell_id] = str(e)
                progress.advance(task)
        else:
            with ProcessPoolExecutor(max_workers=workers) as executor:
                futures = {
                    executor.submit(_run_cell_task, cell, runs, base_seed, config.physics,
                                    config.controller, store.store_dir): cell
                    for cell in pending
                }
                for future in as_completed(futures):
                    cell = futures[future]
                    try:
                        outcome.batches.append(future.result())
                    except Exception as e:
                        logger.error(f"Cell {cell.cell_id} failed: {e}")
                        outcome.failures[cell.cell_id] = str(e)
                    progress.advance(task)

    store.write_batch_summary(outcome.batches, config.include_incomplete)
    if outcome.failures:
        console.log(f"[red]{len(outcome.failures)} cell(s) failed[/red]")
    else:
        console.log(f"[green]All {len(cells)} cells complete[/green]")
    return outcome
