"""
Type-1 fuzzy machinery: triangular membership functions, five-label banks,
the error x delta-error rule matrix, Mamdani inference and centroid defuzzification.

Everything here is an immutable value or a pure function, so instances can be
shared freely between threads and worker processes.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Tuple

import numpy as np
import numpy.typing as npt
import skfuzzy as fuzz

logger = logging.getLogger(__name__)

LABELS = ("NB", "NS", "Z", "PS", "PB")
DEFAULT_GRID_POINTS = 201


def triangle(x, left: float, apex: float, right: float) -> npt.NDArray[np.float64]:
    """Triangular membership of x in any shape; a zero-length side is a vertical edge."""
    x = np.asarray(x, dtype=np.float64)
    return fuzz.trimf(x.ravel(), [left, apex, right]).reshape(x.shape)


@dataclass(frozen=True)
class TriangularMF:
    left_foot: float
    apex: float
    right_foot: float
    label: str = "Z"

    def __post_init__(self):
        if not (self.left_foot <= self.apex <= self.right_foot):
            raise ValueError(
                "Invalid triangular membership function: feet must straddle the apex. "
                f"Got left_foot={self.left_foot}, apex={self.apex}, right_foot={self.right_foot}."
            )
        if self.label not in LABELS:
            raise ValueError(f"Unknown linguistic label {self.label!r}, expected one of {LABELS}")

    @property
    def half_width(self) -> float:
        return (self.right_foot - self.left_foot) / 2.0

    def grade(self, x) -> npt.NDArray[np.float64]:
        return triangle(x, self.left_foot, self.apex, self.right_foot)


def mf_grade(mf: TriangularMF, x: float) -> float:
    """The degree to which x belongs to mf."""
    return float(mf.grade(x))


@dataclass(frozen=True)
class MFBank:
    universe_min: float
    universe_max: float
    mfs: Tuple[TriangularMF, ...]

    def __post_init__(self):
        if self.universe_min >= self.universe_max:
            raise ValueError(f"Empty universe [{self.universe_min}, {self.universe_max}]")
        if len(self.mfs) != len(LABELS):
            raise ValueError(f"A bank holds exactly {len(LABELS)} membership functions, got {len(self.mfs)}")

        apexes = [mf.apex for mf in self.mfs]
        if any(b <= a for a, b in zip(apexes, apexes[1:])):
            raise ValueError(f"Apexes must be strictly increasing, got {apexes}")
        for current, following in zip(self.mfs, self.mfs[1:]):
            if current.right_foot <= following.left_foot:
                raise ValueError(f"{current.label} and {following.label} do not overlap")

        sweep = np.arange(self.universe_min, self.universe_max + 0.5, 1.0)
        sweep = np.clip(sweep, self.universe_min, self.universe_max)
        if np.any(self.grades(sweep).sum(axis=0) <= 0.0):
            raise ValueError("Bank leaves part of the universe uncovered")

    @classmethod
    def symmetric(cls, half_range: float) -> "MFBank":
        """
        Five 50%-overlap triangles over [-half_range, half_range].

        The edge functions are full triangles centred on the universe bounds, so
        once inputs are clamped they behave as half-triangles.
        """
        half_width = half_range / 2.0
        apexes = np.linspace(-half_range, half_range, len(LABELS))
        mfs = tuple(
            TriangularMF(float(a - half_width), float(a), float(a + half_width), label)
            for a, label in zip(apexes, LABELS)
        )
        return cls(-half_range, half_range, mfs)

    def clamp(self, x: float) -> float:
        return float(min(max(x, self.universe_min), self.universe_max))

    def grades(self, x) -> npt.NDArray[np.float64]:
        """Grades of x in every MF, shape (5,) + shape(x)."""
        return np.stack([mf.grade(x) for mf in self.mfs])


@dataclass(frozen=True)
class RuleBase:
    """consequent_index[i + 2][j + 2] is the output label index for (error i, delta j)."""

    consequent_index: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        n = len(LABELS)
        if len(self.consequent_index) != n or any(len(row) != n for row in self.consequent_index):
            raise ValueError("Rule base must be a 5x5 matrix")
        for i in range(-2, 3):
            for j in range(-2, 3):
                value = self.consequent(i, j)
                if value not in range(-2, 3):
                    raise ValueError(f"Consequent index {value} out of range at ({i}, {j})")
                if self.consequent(-i, -j) != -value:
                    raise ValueError(f"Rule base is not point-symmetric at ({i}, {j})")

    @classmethod
    def macvicar_whelan(cls) -> "RuleBase":
        return cls(tuple(
            tuple(int(np.clip(i + j, -2, 2)) for j in range(-2, 3))
            for i in range(-2, 3)
        ))

    def consequent(self, error_index: int, delta_index: int) -> int:
        return self.consequent_index[error_index + 2][delta_index + 2]

    def as_array(self) -> npt.NDArray[np.int64]:
        """Consequent positions 0..4, shaped like the firing matrix."""
        return np.asarray(self.consequent_index, dtype=np.int64) + 2


@dataclass(frozen=True, eq=False)
class OutputFuzzySet:
    z: npt.NDArray[np.float64]
    mu: npt.NDArray[np.float64]

    def __post_init__(self):
        check_grid(self.z, minimum_points=DEFAULT_GRID_POINTS)
        if self.mu.shape != self.z.shape:
            raise ValueError("Grades and grid differ in length")
        if np.any(self.mu < 0.0) or np.any(self.mu > 1.0):
            raise ValueError("Membership grades must lie in [0, 1]")

    @property
    def domain_min(self) -> float:
        return float(self.z[0])

    @property
    def domain_max(self) -> float:
        return float(self.z[-1])

    @property
    def samples(self) -> list[tuple[float, float]]:
        return list(zip(self.z.tolist(), self.mu.tolist()))


class Defuzzified(NamedTuple):
    value: float
    # All-zero output: a hole in rule coverage
    vacuous: bool = False


def check_grid(z: npt.NDArray[np.float64], minimum_points: int):
    if z.ndim != 1 or len(z) < minimum_points:
        raise ValueError(f"Output grid needs at least {minimum_points} points, got {len(z)}")
    steps = np.diff(z)
    if np.any(steps <= 0.0) or not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12):
        raise ValueError("Output grid must be uniform and increasing")


@lru_cache(maxsize=64)
def consequent_surface(output_bank: MFBank, grid_points: int = DEFAULT_GRID_POINTS):
    """Output grid and the grade of every grid point in every consequent MF."""
    z = np.linspace(output_bank.universe_min, output_bank.universe_max, grid_points)
    grades = output_bank.grades(z)
    z.setflags(write=False)
    grades.setflags(write=False)
    return z, grades


def rule_strengths(rules: RuleBase, firing: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    """Per output label, the strongest firing among rules concluding that label."""
    positions = rules.as_array()
    strengths = np.zeros(len(LABELS))
    for k in range(len(LABELS)):
        matched = firing[positions == k]
        if matched.size:
            strengths[k] = matched.max()
    return strengths


def clip_and_aggregate(strengths, consequent_grades) -> npt.NDArray[np.float64]:
    """Min-implication of each consequent, max-aggregation across them."""
    return np.max(np.minimum(strengths[:, None], consequent_grades), axis=0)


def infer_t1(rules: RuleBase, error: float, delta: float, banks: Tuple[MFBank, MFBank],
             output_bank: MFBank, grid_points: int = DEFAULT_GRID_POINTS) -> OutputFuzzySet:
    error_bank, delta_bank = banks
    error_grades = error_bank.grades(error_bank.clamp(error))
    delta_grades = delta_bank.grades(delta_bank.clamp(delta))

    firing = np.minimum.outer(error_grades, delta_grades)
    z, consequent_grades = consequent_surface(output_bank, grid_points)
    mu = clip_and_aggregate(rule_strengths(rules, firing), consequent_grades)
    return OutputFuzzySet(z, mu)


def weighted_centroid(z: npt.NDArray[np.float64], weights: npt.NDArray[np.float64]) -> float:
    return float(np.sum(z * weights) / np.sum(weights))


def centroid_defuzz(fuzzy_set: OutputFuzzySet) -> Defuzzified:
    if not np.any(fuzzy_set.mu > 0.0):
        return Defuzzified(0.0, vacuous=True)
    return Defuzzified(weighted_centroid(fuzzy_set.z, fuzzy_set.mu))


def default_banks(error_range: float = 90.0, delta_range: float = 30.0,
                  output_range: float = 15.0) -> Tuple[MFBank, MFBank, MFBank]:
    """Error, delta-error and rudder-change banks."""
    return (MFBank.symmetric(error_range),
            MFBank.symmetric(delta_range),
            MFBank.symmetric(output_range))
