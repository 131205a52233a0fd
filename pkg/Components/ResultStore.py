import hashlib
import json
import logging
from pathlib import Path
from typing import Optional

import pandas as pd

from Components.Config import ControllerKind
from Components.Metrics import BatchResult
from Components.Regatta import RunRecord, parse_course_label

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = ["cell_id", "wind_config", "course", "controller", "fou_size", "runs",
                   "completion_count", "mean_rmse", "std_rmse", "canonical"]


def course_sort_key(course: str):
    spec = parse_course_label(course)
    return (spec.turns, spec.vertical_movement)


def batch_sort_key(batch: BatchResult):
    """Wind config, then course, then type-1 ahead of the FOU sweep."""
    return (batch.wind_config, course_sort_key(batch.course),
            batch.controller_kind is ControllerKind.INTERVAL_TYPE2, batch.fou_size)


class ResultStore:
    """
    On-disk layout of an experiment:

        runs/<cell_id>/run_<index>_<seed>.csv   per-run control-cycle logs
        batches/<cell_id>.json                   batch results, reused on resume
        batch_summary.csv                        one row per batch
        reports/                                 comparison, best-FOU and plot data

    Every file belongs to exactly one cell, so concurrent batches never write the same path.
    """

    def __init__(self, store_dir="results"):
        self.store_dir = Path(store_dir)
        self.runs_dir = self.store_dir / "runs"
        self.batches_dir = self.store_dir / "batches"
        self.reports_dir = self.store_dir / "reports"
        for directory in (self.runs_dir, self.batches_dir, self.reports_dir):
            directory.mkdir(parents=True, exist_ok=True)

    @property
    def summary_path(self) -> Path:
        return self.store_dir / "batch_summary.csv"

    def get_cache_key(self, cell_id: str, runs: int, base_seed: int) -> str:
        """A batch is only reusable for the same cell, run count and base seed"""
        return hashlib.md5(f"{cell_id}|{runs}|{base_seed}".encode()).hexdigest()

    def run_log_path(self, cell_id: str, run_index: int, seed: int) -> Path:
        return self.runs_dir / cell_id / f"run_{run_index:03d}_{seed}.csv"

    def save_run_log(self, cell_id: str, run_index: int, record: RunRecord) -> Path:
        path = self.run_log_path(cell_id, run_index, record.seed)
        path.parent.mkdir(parents=True, exist_ok=True)
        record.to_frame().to_csv(path, index=False, float_format="%.6f")
        return path

    def load_run_log(self, cell_id: str, run_index: int, seed: int) -> pd.DataFrame:
        return pd.read_csv(self.run_log_path(cell_id, run_index, seed))

    def save_batch(self, batch: BatchResult, base_seed: int) -> Path:
        batch_file = self.batches_dir / f"{batch.cell_id}.json"
        data = {
            "cache_key": self.get_cache_key(batch.cell_id, batch.runs, base_seed),
            "base_seed": base_seed,
            "wind_config": batch.wind_config,
            "course": batch.course,
            "controller_kind": batch.controller_kind.value,
            "fou_size": batch.fou_size,
            "seeds": list(batch.seeds),
            "rmse_values": list(batch.rmse_values),
            "completed": list(batch.completed),
        }
        with open(batch_file, "w", encoding="utf-8") as f:
            json.dump(data, f, indent=2)
        logger.debug(f"Saved batch {batch.cell_id}: {batch.completion_count}/{batch.runs} completed")
        return batch_file

    def _read_batch(self, batch_file: Path) -> tuple[Optional[BatchResult], Optional[dict]]:
        try:
            with open(batch_file, "r", encoding="utf-8") as f:
                data = json.load(f)
            batch = BatchResult(
                wind_config=data["wind_config"],
                course=data["course"],
                controller_kind=ControllerKind(data["controller_kind"]),
                fou_size=float(data["fou_size"]),
                seeds=tuple(int(seed) for seed in data["seeds"]),
                rmse_values=tuple(float(value) for value in data["rmse_values"]),
                completed=tuple(bool(flag) for flag in data["completed"]),
            )
            return batch, data
        except Exception as e:
            logger.error(f"Error reading batch file {batch_file}: {e}")
            return None, None

    def load_batch(self, cell_id: str, runs: Optional[int] = None,
                   base_seed: Optional[int] = None) -> Optional[BatchResult]:
        """Retrieve a stored batch; with runs and base_seed given, only if it matches them."""
        batch_file = self.batches_dir / f"{cell_id}.json"
        if not batch_file.exists():
            return None

        batch, data = self._read_batch(batch_file)
        if batch is None:
            return None

        if runs is not None and base_seed is not None:
            if data.get("cache_key") != self.get_cache_key(cell_id, runs, base_seed):
                logger.info(f"Stored batch {cell_id} was run with different settings, ignoring it")
                return None
        return batch

    def list_batches(self) -> list[BatchResult]:
        batches = []
        for batch_file in self.batches_dir.glob("*.json"):
            batch, _ = self._read_batch(batch_file)
            if batch is not None:
                batches.append(batch)
        return sorted(batches, key=batch_sort_key)

    def write_batch_summary(self, batches: Optional[list[BatchResult]] = None,
                            include_incomplete: bool = True) -> Path:
        batches = sorted(self.list_batches() if batches is None else batches, key=batch_sort_key)
        rows = []
        for batch in batches:
            values = batch.values(include_incomplete)
            rows.append({
                "cell_id": batch.cell_id,
                "wind_config": batch.wind_config,
                "course": batch.course,
                "controller": batch.controller_kind.value,
                "fou_size": None if batch.controller_kind is ControllerKind.TYPE1 else batch.fou_size,
                "runs": batch.runs,
                "completion_count": batch.completion_count,
                "mean_rmse": batch.mean_rmse(include_incomplete),
                "std_rmse": float(pd.Series(values, dtype=float).std(ddof=1)) if len(values) > 1 else 0.0,
                "canonical": batch.canonical,
            })
        pd.DataFrame(rows, columns=SUMMARY_COLUMNS).to_csv(self.summary_path, index=False, float_format="%.6f")
        logger.info(f"Wrote batch summary with {len(rows)} rows to {self.summary_path}")
        return self.summary_path
