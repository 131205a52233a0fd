import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Sequence, Tuple

import numpy as np
from scipy.stats import norm, rankdata, tiecorrect

from Components.Config import ControllerKind

logger = logging.getLogger(__name__)

CANONICAL_RUNS = 30
SIGNIFICANCE_LEVEL = 0.0005
EXACT_MAX_N = 12


def cumulative_rmse(errors: Sequence[float]) -> float:
    """Root-mean-square heading error over every control cycle, in degrees."""
    values = np.asarray(errors, dtype=np.float64)
    if values.size == 0:
        raise ValueError("Cannot compute RMSE of an empty error list")
    return float(np.sqrt(np.mean(np.square(values))))


class RankSumResult(NamedTuple):
    statistic: float
    p_value: float
    method: str
    degenerate: bool = False


@lru_cache(maxsize=None)
def _rank_sum_counts(n_a: int, n: int) -> Tuple[int, ...]:
    """
    counts[s] = number of ways to pick n_a distinct ranks from 1..n summing to s.

    Same recursion as counting partitions into unequal parts, done bottom-up.
    """
    max_sum = sum(range(n - n_a + 1, n + 1))
    table = [[0] * (max_sum + 1) for _ in range(n_a + 1)]
    table[0][0] = 1
    for rank in range(1, n + 1):
        for size in range(min(rank, n_a), 0, -1):
            previous = table[size - 1]
            current = table[size]
            for s in range(max_sum - rank, -1, -1):
                if previous[s]:
                    current[s + rank] += previous[s]
    return tuple(table[n_a])


def _exact_p(rank_sum: float, n_a: int, n: int, alternative: str) -> float:
    counts = _rank_sum_counts(n_a, n)
    observed = int(round(rank_sum))
    total = sum(counts)
    if alternative == "less":
        favourable = sum(counts[: observed + 1])
    else:
        favourable = sum(counts[observed:])
    return favourable / total


def wilcoxon_rank_sum_one_sided(a: Sequence[float], b: Sequence[float], alternative: str = "less",
                                method: str = "auto") -> RankSumResult:
    """
    One-sided Wilcoxon rank-sum (Mann-Whitney) test.

    alternative="less" tests whether `a` is stochastically smaller than `b`.
    The statistic is the midrank sum of `a`. With method="auto" the p-value is
    exact (full enumeration of rank assignments) for n_a + n_b <= 12 without
    ties, otherwise the tie- and continuity-corrected normal approximation.
    """
    if alternative not in ("less", "greater"):
        raise ValueError(f"alternative should be 'less' or 'greater', got {alternative!r}")
    if method not in ("auto", "exact", "normal"):
        raise ValueError(f"method should be 'auto', 'exact' or 'normal', got {method!r}")

    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    n_a, n_b = len(x), len(y)
    if n_a == 0 or n_b == 0:
        raise ValueError("Both samples must be non-empty")

    n = n_a + n_b
    ranks = rankdata(np.concatenate((x, y)))
    rank_sum = float(np.sum(ranks[:n_a]))
    tie_factor = tiecorrect(ranks)

    if tie_factor == 0:
        return RankSumResult(rank_sum, 0.5, "degenerate", degenerate=True)

    has_ties = tie_factor < 1.0
    if method == "exact" and has_ties:
        raise ValueError("Exact enumeration needs samples without ties")
    if method == "exact" or (method == "auto" and n <= EXACT_MAX_N and not has_ties):
        return RankSumResult(rank_sum, _exact_p(rank_sum, n_a, n, alternative), "exact")

    mean = n_a * (n + 1) / 2.0
    sd = np.sqrt(n_a * n_b * (n + 1) / 12.0 * tie_factor)
    if alternative == "less":
        p_value = norm.cdf((rank_sum - mean + 0.5) / sd)
    else:
        p_value = norm.sf((rank_sum - mean - 0.5) / sd)
    return RankSumResult(rank_sum, float(p_value), "normal")


@dataclass(frozen=True)
class BatchResult:
    wind_config: str
    course: str
    controller_kind: ControllerKind
    fou_size: float
    seeds: Tuple[int, ...]
    rmse_values: Tuple[float, ...]
    completed: Tuple[bool, ...]

    def __post_init__(self):
        if not (len(self.seeds) == len(self.rmse_values) == len(self.completed)):
            raise ValueError(f"{self.cell_id}: seeds, RMSEs and completion flags differ in length")
        if any(value < 0 for value in self.rmse_values):
            raise ValueError(f"{self.cell_id}: negative RMSE")

    @property
    def controller_label(self) -> str:
        if self.controller_kind is ControllerKind.TYPE1:
            return "T1"
        return f"IT2-{self.fou_size:g}"

    @property
    def cell_id(self) -> str:
        return f"{self.wind_config}_{self.course}_{self.controller_label}"

    @property
    def runs(self) -> int:
        return len(self.rmse_values)

    @property
    def canonical(self) -> bool:
        return self.runs == CANONICAL_RUNS

    @property
    def completion_count(self) -> int:
        return sum(self.completed)

    @property
    def completion_rate(self) -> float:
        return self.completion_count / self.runs

    def values(self, include_incomplete: bool = True) -> list[float]:
        if include_incomplete:
            return list(self.rmse_values)
        return [value for value, done in zip(self.rmse_values, self.completed) if done]

    def mean_rmse(self, include_incomplete: bool = True) -> float:
        values = self.values(include_incomplete)
        return float(np.mean(values)) if values else float("nan")


@dataclass(frozen=True)
class ComparisonRow:
    wind_config: str
    course: str
    t1_mean_rmse: float
    t2_mean_rmse: float
    rmse_difference: float
    fou_size: float
    p_value: float
    # p-value of the opposite direction: type-2 worse than type-1
    p_value_worse: float
    degenerate: bool = False

    @property
    def significant(self) -> bool:
        return self.p_value < SIGNIFICANCE_LEVEL

    @property
    def significantly_worse(self) -> bool:
        return self.p_value_worse < SIGNIFICANCE_LEVEL


def compare_batches(t1: BatchResult, t2: BatchResult, include_incomplete: bool = True) -> ComparisonRow:
    """Is the type-2 batch's RMSE stochastically smaller than the type-1 batch's?"""
    if (t1.wind_config, t1.course) != (t2.wind_config, t2.course):
        raise ValueError(f"Cannot compare batches from different cells: {t1.cell_id} vs {t2.cell_id}")

    t1_values = t1.values(include_incomplete)
    t2_values = t2.values(include_incomplete)
    if not t1_values or not t2_values:
        raise ValueError(f"No completed runs to compare for {t1.cell_id} vs {t2.cell_id}")

    better = wilcoxon_rank_sum_one_sided(t2_values, t1_values, alternative="less")
    worse = wilcoxon_rank_sum_one_sided(t2_values, t1_values, alternative="greater")
    if better.degenerate:
        logger.warning(f"Degenerate rank-sum test for {t2.cell_id}: every RMSE is identical")

    t1_mean = float(np.mean(t1_values))
    t2_mean = float(np.mean(t2_values))
    return ComparisonRow(
        wind_config=t1.wind_config,
        course=t1.course,
        t1_mean_rmse=t1_mean,
        t2_mean_rmse=t2_mean,
        rmse_difference=t2_mean - t1_mean,
        fou_size=t2.fou_size,
        p_value=better.p_value,
        p_value_worse=worse.p_value,
        degenerate=better.degenerate,
    )
