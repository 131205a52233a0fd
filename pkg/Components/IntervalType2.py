"""
Interval type-2 extension of FuzzyCore.

The footprint of uncertainty comes from sliding each type-1 antecedent
horizontally by up to +/- m: the upper membership function is the envelope of
every shifted copy (a flat-top trapezoid) and the lower one is what all copies
share. Consequents stay type-1; the output becomes interval valued through the
interval firing strengths, and is reduced with Karnik-Mendel.

Once m reaches an MF's half-width its lower function is empty, so whole lower
output surfaces can be zero; km_type_reduce handles that case in closed form.
"""
import logging
from dataclasses import dataclass, field
from typing import NamedTuple, Tuple

import numpy as np
import numpy.typing as npt
import skfuzzy as fuzz

from Components.FuzzyCore import (
    DEFAULT_GRID_POINTS,
    MFBank,
    RuleBase,
    TriangularMF,
    check_grid,
    clip_and_aggregate,
    consequent_surface,
    rule_strengths,
    weighted_centroid,
)

logger = logging.getLogger(__name__)

KM_MAX_ITERATIONS = 100
# Fraction of the grid step
SWITCH_SNAP = 1e-9


class TypeReductionError(RuntimeError):
    pass


@dataclass(frozen=True)
class IntervalMF:
    source: TriangularMF
    shift_m: float

    def __post_init__(self):
        if self.shift_m < 0:
            raise ValueError(f"FOU shift must be >= 0, got {self.shift_m}")

    @property
    def umf_params(self) -> Tuple[float, float, float, float]:
        """Trapezoid feet and shoulders of the upper membership function."""
        m = self.shift_m
        mf = self.source
        return (mf.left_foot - m, mf.apex - m, mf.apex + m, mf.right_foot + m)

    def upper(self, x) -> npt.NDArray[np.float64]:
        x = np.asarray(x, dtype=np.float64)
        return fuzz.trapmf(x.ravel(), list(self.umf_params)).reshape(x.shape)

    def lower(self, x) -> npt.NDArray[np.float64]:
        x = np.asarray(x, dtype=np.float64)
        return np.minimum(self.source.grade(x - self.shift_m), self.source.grade(x + self.shift_m))


def blur_mf(mf: TriangularMF, m: float) -> IntervalMF:
    return IntervalMF(mf, float(m))


def interval_grade(imf: IntervalMF, x: float) -> Tuple[float, float]:
    return float(imf.lower(x)), float(imf.upper(x))


@dataclass(frozen=True)
class IntervalMFBank:
    bank: MFBank
    shift_m: float
    imfs: Tuple[IntervalMF, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "imfs", tuple(blur_mf(mf, self.shift_m) for mf in self.bank.mfs))

    def clamp(self, x: float) -> float:
        return self.bank.clamp(x)

    def grades(self, x) -> Tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
        lower = np.stack([imf.lower(x) for imf in self.imfs])
        upper = np.stack([imf.upper(x) for imf in self.imfs])
        return lower, upper


def blur_bank(bank: MFBank, m: float) -> IntervalMFBank:
    if m < 0:
        raise ValueError(f"FOU shift must be >= 0, got {m}")
    return IntervalMFBank(bank, float(m))


@dataclass(frozen=True, eq=False)
class IntervalOutputSet:
    z: npt.NDArray[np.float64]
    lower: npt.NDArray[np.float64]
    upper: npt.NDArray[np.float64]

    def __post_init__(self):
        check_grid(self.z, minimum_points=2)
        if self.lower.shape != self.z.shape or self.upper.shape != self.z.shape:
            raise ValueError("Membership bounds and grid differ in length")
        if np.any(self.lower < 0.0) or np.any(self.upper > 1.0) or np.any(self.lower > self.upper):
            raise ValueError("Need 0 <= lower <= upper <= 1 at every sample")

    @property
    def samples(self) -> list[tuple[float, float, float]]:
        return list(zip(self.z.tolist(), self.lower.tolist(), self.upper.tolist()))


class CentroidInterval(NamedTuple):
    c_left: float
    c_right: float
    vacuous: bool = False


def infer_it2(rules: RuleBase, error: float, delta: float,
              blurred_banks: Tuple[IntervalMFBank, IntervalMFBank], output_bank: MFBank,
              grid_points: int = DEFAULT_GRID_POINTS) -> IntervalOutputSet:
    error_bank, delta_bank = blurred_banks
    error_lower, error_upper = error_bank.grades(error_bank.clamp(error))
    delta_lower, delta_upper = delta_bank.grades(delta_bank.clamp(delta))

    z, consequent_grades = consequent_surface(output_bank, grid_points)
    lower = clip_and_aggregate(
        rule_strengths(rules, np.minimum.outer(error_lower, delta_lower)), consequent_grades)
    upper = clip_and_aggregate(
        rule_strengths(rules, np.minimum.outer(error_upper, delta_upper)), consequent_grades)
    return IntervalOutputSet(z, lower, upper)


def _km_endpoint(z, lower, upper, left: bool, max_iterations: int) -> float:
    """
    One Karnik-Mendel endpoint on an increasing grid. The switch index k
    brackets the running centroid: z[k] <= c < z[k+1] for the left end, where
    upper grades weight indices up to k, and z[k-1] < c <= z[k] for the right
    end, where they weight indices from k. Stops when k repeats.
    """
    # A centroid within rounding of a grid point counts as sitting on it
    snap = SWITCH_SNAP * (z[1] - z[0])
    index = np.arange(len(z))
    centroid = weighted_centroid(z, (lower + upper) / 2.0)
    previous = None
    for _ in range(max_iterations):
        if left:
            k = int(np.searchsorted(z, centroid + snap, side="right")) - 1
            switch = index <= k
        else:
            k = int(np.searchsorted(z, centroid - snap, side="left"))
            switch = index >= k
        if k == previous:
            return centroid
        weights = np.where(switch, upper, lower)
        if not np.sum(weights) > 0.0:
            raise TypeReductionError(f"Karnik-Mendel switch index {k} leaves no weight on the output grid")
        centroid = weighted_centroid(z, weights)
        previous = k
    raise TypeReductionError(
        f"Karnik-Mendel {'left' if left else 'right'} endpoint did not converge in {max_iterations} iterations"
    )


def km_type_reduce(fuzzy_set: IntervalOutputSet, max_iterations: int = KM_MAX_ITERATIONS) -> CentroidInterval:
    z, lower, upper = fuzzy_set.z, fuzzy_set.lower, fuzzy_set.upper
    support = np.flatnonzero(upper > 0.0)
    if support.size == 0:
        return CentroidInterval(0.0, 0.0, vacuous=True)
    if not np.any(lower > 0.0):
        # Only the upper surface carries weight: the extreme embedded sets are its first and last point
        return CentroidInterval(float(z[support[0]]), float(z[support[-1]]))

    c_left = _km_endpoint(z, lower, upper, left=True, max_iterations=max_iterations)
    c_right = _km_endpoint(z, lower, upper, left=False, max_iterations=max_iterations)
    return CentroidInterval(c_left, c_right)


def defuzz_interval(c: CentroidInterval) -> float:
    return (c.c_left + c.c_right) / 2.0
