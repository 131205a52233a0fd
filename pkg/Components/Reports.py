"""
Report emission: everything here is a pure function of the batches in a
ResultStore, so re-emitting over the same store rewrites identical files.
"""
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import NamedTuple, Optional

import pandas as pd

from Components.Config import ControllerKind
from Components.Metrics import ComparisonRow, BatchResult, compare_batches
from Components.Regatta import WIND_CONFIGS, parse_course_label, wind_configs_by_uncertainty
from Components.ResultStore import ResultStore, batch_sort_key, course_sort_key

logger = logging.getLogger(__name__)

COMPARISON_COLUMNS = ["wind_config", "course", "fou_size", "t1_mean_rmse", "t2_mean_rmse",
                      "rmse_difference", "p_value", "significant", "degenerate"]
BEST_FOU_COLUMNS = ["wind_config", "t1_rmse", "t2_rmse", "vertical_movement", "fou_size", "p_value", "turns"]
GAIN_COLUMNS = ["wind_config", "uncertainty_score", "course", "fou_size", "t1_mean_rmse", "t2_mean_rmse",
                "rmse_difference", "p_value", "p_value_worse", "outcome"]
SANITY_COLUMNS = ["wind_config", "course", "t1_mean_rmse", "t2_mean_rmse", "p_value", "p_value_worse",
                  "degenerate", "consistent"]
SPREAD_COLUMNS = ["course", "fou_size", "min_mean_rmse", "max_mean_rmse", "spread"]
PLOT_COLUMNS = ["course", "wind_config", "fou_size", "mean_rmse", "t1_mean_rmse"]

# FOU sizes where the sweep is expected to bottom out
CURVE_MIDDLE_SIZES = (10.0, 15.0, 20.0)


@dataclass
class AnalysisReport:
    comparisons: list[ComparisonRow] = field(default_factory=list)
    best_fou: list[ComparisonRow] = field(default_factory=list)
    gains: list[dict] = field(default_factory=list)
    sanity: list[dict] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    paths: dict[str, Path] = field(default_factory=dict)


def _environment(batch: BatchResult) -> tuple[str, str]:
    return batch.wind_config, batch.course


def _split_batches(batches: list[BatchResult]):
    baselines = {}
    sweep = []
    for batch in sorted(batches, key=batch_sort_key):
        if batch.controller_kind is ControllerKind.TYPE1:
            baselines[_environment(batch)] = batch
        else:
            sweep.append(batch)
    return baselines, sweep


def comparison_rows(batches: list[BatchResult], include_incomplete: bool = True) -> list[ComparisonRow]:
    """One row per sweep batch against its environment's type-1 baseline."""
    baselines, sweep = _split_batches(batches)
    rows = []
    for batch in sweep:
        baseline = baselines.get(_environment(batch))
        if baseline is None:
            logger.warning(f"No type-1 baseline for {batch.cell_id}, skipping comparison")
            continue
        try:
            rows.append(compare_batches(baseline, batch, include_incomplete))
        except ValueError as e:
            logger.warning(f"Skipping {batch.cell_id}: {e}")
    return rows


def _by_environment(rows: list[ComparisonRow]) -> dict[tuple[str, str], list[ComparisonRow]]:
    grouped: dict[tuple[str, str], list[ComparisonRow]] = {}
    for row in rows:
        grouped.setdefault((row.wind_config, row.course), []).append(row)
    return grouped


def _best_row(rows: list[ComparisonRow]) -> ComparisonRow:
    # Ties go to the smaller FOU
    return min(rows, key=lambda row: (row.t2_mean_rmse, row.fou_size))


def best_fou_rows(rows: list[ComparisonRow]) -> list[ComparisonRow]:
    """Best FOU size per environment, leaving out environments where no size beats type-1."""
    best = []
    for environment_rows in _by_environment(rows).values():
        row = _best_row(environment_rows)
        if row.rmse_difference < 0:
            best.append(row)
    return sorted(best, key=lambda row: (course_sort_key(row.course), row.wind_config))


def classify_gain(row: ComparisonRow) -> str:
    if row.significant:
        return "improved"
    if row.significantly_worse:
        return "worse"
    return "unchanged"


def gain_rows(rows: list[ComparisonRow]) -> list[dict]:
    """Best FOU size per environment against type-1, least uncertain wind first."""
    rank = {cfg.label: position for position, cfg in enumerate(wind_configs_by_uncertainty())}
    gains = []
    for (wind, course), environment_rows in _by_environment(rows).items():
        row = _best_row(environment_rows)
        gains.append({
            "wind_config": wind,
            "uncertainty_score": WIND_CONFIGS[wind].uncertainty_score,
            "course": course,
            "fou_size": row.fou_size,
            "t1_mean_rmse": row.t1_mean_rmse,
            "t2_mean_rmse": row.t2_mean_rmse,
            "rmse_difference": row.rmse_difference,
            "p_value": row.p_value,
            "p_value_worse": row.p_value_worse,
            "outcome": classify_gain(row),
        })
    return sorted(gains, key=lambda g: (rank[g["wind_config"]], course_sort_key(g["course"])))


def sanity_rows(rows: list[ComparisonRow]) -> list[dict]:
    """Type-1 against FOU size 0: the two should be indistinguishable."""
    checks = []
    for row in rows:
        if row.fou_size != 0:
            continue
        checks.append({
            "wind_config": row.wind_config,
            "course": row.course,
            "t1_mean_rmse": row.t1_mean_rmse,
            "t2_mean_rmse": row.t2_mean_rmse,
            "p_value": row.p_value,
            "p_value_worse": row.p_value_worse,
            "degenerate": row.degenerate,
            "consistent": not (row.significant or row.significantly_worse),
        })
    return checks


def best_fou_tex(rows: list[ComparisonRow]) -> str:
    """'&'-separated table rows, one block per turn count."""
    lines = []
    for turns in sorted({parse_course_label(row.course).turns for row in rows}):
        lines.append(f"% {'Double' if turns == 2 else 'Single'} turn courses")
        for row in rows:
            course = parse_course_label(row.course)
            if course.turns != turns:
                continue
            lines.append(
                f"{row.wind_config} & {row.t1_mean_rmse:.2f} & {row.t2_mean_rmse:.2f} & "
                f"{course.vertical_movement:g} & {row.fou_size:g} & {row.p_value:.2e} \\\\"
            )
    return "\n".join(lines) + "\n" if lines else ""


def plot_frame(batches: list[BatchResult], include_incomplete: bool = True) -> pd.DataFrame:
    """
    RMSE-vs-FOU curve points, one per sweep batch, each carrying its type-1
    baseline. An environment with a baseline but no sweep batches gets a single
    row with an empty fou_size, so its flat baseline can still be drawn.
    """
    baselines, sweep = _split_batches(batches)
    rows = []
    for batch in sweep:
        baseline = baselines.get(_environment(batch))
        rows.append({
            "course": batch.course,
            "wind_config": batch.wind_config,
            "fou_size": batch.fou_size,
            "mean_rmse": batch.mean_rmse(include_incomplete),
            "t1_mean_rmse": baseline.mean_rmse(include_incomplete) if baseline else None,
        })
    swept = {_environment(batch) for batch in sweep}
    for (wind, course), baseline in baselines.items():
        if (wind, course) in swept:
            continue
        t1_rmse = baseline.mean_rmse(include_incomplete)
        rows.append({"course": course, "wind_config": wind, "fou_size": None,
                     "mean_rmse": t1_rmse, "t1_mean_rmse": t1_rmse})

    rows.sort(key=lambda row: (course_sort_key(row["course"]), row["wind_config"],
                               -1.0 if row["fou_size"] is None else row["fou_size"]))
    return pd.DataFrame(rows, columns=PLOT_COLUMNS)


def spread_frame(plot: pd.DataFrame) -> pd.DataFrame:
    """How far apart the wind configurations land, per course and FOU size."""
    sweep = plot.dropna(subset=["fou_size"])
    if sweep.empty:
        return pd.DataFrame(columns=SPREAD_COLUMNS)
    grouped = sweep.groupby(["course", "fou_size"], sort=False)["mean_rmse"]
    spread = grouped.agg(min_mean_rmse="min", max_mean_rmse="max").reset_index()
    spread["spread"] = spread["max_mean_rmse"] - spread["min_mean_rmse"]
    return spread[SPREAD_COLUMNS]


class FouCurveShape(NamedTuple):
    curve: dict[float, float]
    best_fou: Optional[float]
    improves: bool
    degrades: bool

    @property
    def improves_then_degrades(self) -> bool:
        return self.improves and self.degrades


def fou_curve_shape(plot: pd.DataFrame, course: str) -> FouCurveShape:
    """
    Average the course's curves over wind configurations and check the expected
    shape: some middle FOU size at least matches FOU 0, and the largest size
    does no better than that best middle size.
    """
    sweep = plot[(plot["course"] == course)].dropna(subset=["fou_size"])
    curve = {float(m): float(v) for m, v in sweep.groupby("fou_size")["mean_rmse"].mean().items()}
    middle = {m: curve[m] for m in CURVE_MIDDLE_SIZES if m in curve}
    if 0.0 not in curve or not middle:
        return FouCurveShape(curve, None, False, False)

    best_fou = min(middle, key=lambda m: (middle[m], m))
    improves = middle[best_fou] <= curve[0.0]
    largest = max(curve)
    degrades = largest > best_fou and curve[largest] >= middle[best_fou]
    return FouCurveShape(curve, best_fou, improves, degrades)


def _rows_frame(rows: list, columns: list[str]) -> pd.DataFrame:
    records = [asdict(row) if isinstance(row, ComparisonRow) else row for row in rows]
    return pd.DataFrame(records, columns=columns)


def emit_reports(store: ResultStore, include_incomplete: bool = True) -> AnalysisReport:
    """Write comparison, best-FOU, gain, sanity, spread and plot-data tables plus a JSON summary into reports/."""
    batches = store.list_batches()
    if not batches:
        logger.warning(f"No batches found in {store.store_dir}")

    report = AnalysisReport()
    report.comparisons = comparison_rows(batches, include_incomplete)
    report.best_fou = best_fou_rows(report.comparisons)
    report.gains = gain_rows(report.comparisons)
    report.sanity = sanity_rows(report.comparisons)

    reports_dir = store.reports_dir
    comparison = pd.DataFrame(
        [{**asdict(row), "significant": row.significant} for row in report.comparisons],
        columns=COMPARISON_COLUMNS,
    )
    report.paths["comparison"] = reports_dir / "comparison.csv"
    comparison.to_csv(report.paths["comparison"], index=False, float_format="%.6g")

    best = pd.DataFrame(
        [{
            "wind_config": row.wind_config,
            "t1_rmse": row.t1_mean_rmse,
            "t2_rmse": row.t2_mean_rmse,
            "vertical_movement": parse_course_label(row.course).vertical_movement,
            "fou_size": row.fou_size,
            "p_value": row.p_value,
            "turns": parse_course_label(row.course).turns,
        } for row in report.best_fou],
        columns=BEST_FOU_COLUMNS,
    )
    report.paths["best_fou"] = reports_dir / "best_fou.csv"
    best.to_csv(report.paths["best_fou"], index=False, float_format="%.6g")

    report.paths["best_fou_tex"] = reports_dir / "best_fou.tex"
    report.paths["best_fou_tex"].write_text(best_fou_tex(report.best_fou), encoding="utf-8")

    report.paths["gain"] = reports_dir / "gain.csv"
    _rows_frame(report.gains, GAIN_COLUMNS).to_csv(report.paths["gain"], index=False, float_format="%.6g")

    report.paths["sanity"] = reports_dir / "sanity.csv"
    _rows_frame(report.sanity, SANITY_COLUMNS).to_csv(report.paths["sanity"], index=False, float_format="%.6g")

    plot = plot_frame(batches, include_incomplete)
    report.paths["spread"] = reports_dir / "spread.csv"
    spread_frame(plot).to_csv(report.paths["spread"], index=False, float_format="%.6g")
    report.paths["plot_data"] = _write_plot_data(store, plot)

    significant = sum(row.significant for row in report.comparisons)
    total = len(report.comparisons)
    report.summary = {
        "batches": len(batches),
        "comparisons": total,
        "significant_improvements": significant,
        "significant_percent": round(100.0 * significant / total, 2) if total else 0.0,
        "significantly_worse": sum(row.significantly_worse for row in report.comparisons),
        "gain_outcomes": {outcome: sum(g["outcome"] == outcome for g in report.gains)
                          for outcome in ("improved", "worse", "unchanged")},
        "sanity_consistent": sum(check["consistent"] for check in report.sanity),
        "sanity_checked": len(report.sanity),
        "non_canonical_batches": sum(not batch.canonical for batch in batches),
        "incomplete_runs": sum(batch.runs - batch.completion_count for batch in batches),
        "include_incomplete": include_incomplete,
    }
    report.paths["summary"] = reports_dir / "summary.json"
    with open(report.paths["summary"], "w", encoding="utf-8") as f:
        json.dump(report.summary, f, indent=2, sort_keys=True)

    logger.info(f"Wrote {len(report.paths)} report files to {reports_dir}")
    return report


def _write_plot_data(store: ResultStore, frame: pd.DataFrame) -> Path:
    path = store.reports_dir / "plot_data.csv"
    frame.to_csv(path, index=False, float_format="%.6f")
    logger.info(f"Wrote {len(frame)} plot points to {path}")
    return path


def emit_plot_data(store: ResultStore, include_incomplete: bool = True) -> Path:
    return _write_plot_data(store, plot_frame(store.list_batches(), include_incomplete))


def load_plot_data(path: str | Path) -> pd.DataFrame:
    frame = pd.read_csv(path)
    frame["fou_size"] = frame["fou_size"].astype(float)
    return frame
