import logging
import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Tuple

from Components.Config import ControllerConfig, ControllerKind
from Components.FuzzyCore import (
    Defuzzified,
    MFBank,
    RuleBase,
    centroid_defuzz,
    default_banks,
    infer_t1,
)
from Components.IntervalType2 import (
    IntervalMFBank,
    blur_bank,
    defuzz_interval,
    infer_it2,
    km_type_reduce,
)

logger = logging.getLogger(__name__)

Point = Tuple[float, float]


@dataclass(frozen=True)
class HelmState:
    previous_error: float = 0.0
    current_rudder: float = 0.0


def wrap_angle(angle: float) -> float:
    """Signed angle in (-180, 180]."""
    wrapped = (angle + 180.0) % 360.0 - 180.0
    return 180.0 if wrapped == -180.0 else wrapped


def bearing(origin: Point, target: Point) -> float:
    """Compass bearing from origin to target: 0 is north (+y), 90 is east (+x)."""
    dx = target[0] - origin[0]
    dy = target[1] - origin[1]
    return math.degrees(math.atan2(dx, dy)) % 360.0


def compute_errors(current_heading: float, boat_position: Point, target_waypoint: Point,
                   previous_error: float) -> Tuple[float, float]:
    """
    Heading error towards the waypoint and its change since the last cycle.

    A boat sitting exactly on the waypoint has zero error; waypoint capture
    deals with that state before it matters.
    """
    if math.dist(boat_position, target_waypoint) == 0.0:
        error = 0.0
    else:
        error = wrap_angle(bearing(boat_position, target_waypoint) - current_heading)
    return error, wrap_angle(error - previous_error)


def default_rulebase() -> RuleBase:
    return RuleBase.macvicar_whelan()


@dataclass(frozen=True)
class FuzzyPipeline:
    """Type-1 or interval type-2 map from (error, delta error) to a rudder change."""

    rules: RuleBase
    banks: Tuple[MFBank, MFBank]
    output_bank: MFBank
    grid_points: int
    blurred_banks: Tuple[IntervalMFBank, IntervalMFBank] | None = None

    def __call__(self, error: float, delta: float) -> Defuzzified:
        if self.blurred_banks is None:
            return centroid_defuzz(
                infer_t1(self.rules, error, delta, self.banks, self.output_bank, self.grid_points))

        interval = km_type_reduce(
            infer_it2(self.rules, error, delta, self.blurred_banks, self.output_bank, self.grid_points))
        return Defuzzified(defuzz_interval(interval), interval.vacuous)


@lru_cache(maxsize=32)
def build_pipeline(cfg: ControllerConfig) -> FuzzyPipeline:
    error_bank, delta_bank, output_bank = default_banks(cfg.error_range, cfg.delta_range, cfg.output_range)
    blurred = None
    if cfg.kind is ControllerKind.INTERVAL_TYPE2:
        blurred = (blur_bank(error_bank, cfg.fou_size_m), blur_bank(delta_bank, cfg.fou_size_m))
    return FuzzyPipeline(default_rulebase(), (error_bank, delta_bank), output_bank, cfg.grid_points, blurred)


def step_controller(cfg: ControllerConfig, state: HelmState, error: float,
                    delta_error: float) -> Tuple[float, HelmState]:
    """One 1 Hz control cycle: fuzzy rudder change, integrated into a clamped rudder angle."""
    output = build_pipeline(cfg)(error, delta_error)
    rudder_change = output.value
    if output.vacuous:
        logger.warning(f"Vacuous fuzzy output for error={error:.3f}, delta={delta_error:.3f} ({cfg.label}); holding rudder")
        rudder_change = 0.0
    elif not math.isfinite(rudder_change):
        logger.warning(f"Non-finite fuzzy output for error={error:.3f}, delta={delta_error:.3f} ({cfg.label}); holding rudder")
        rudder_change = 0.0

    rudder = min(max(state.current_rudder + rudder_change, -cfg.rudder_limit), cfg.rudder_limit)
    return rudder_change, replace(state, previous_error=error, current_rudder=rudder)
