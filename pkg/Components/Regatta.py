"""
Seedable sailing world: wind configurations, course geometry, a kinematic boat
and the episode loop that ties them to the helm.

Compass convention throughout: 0 is north (+y), 90 is east (+x). Courses run
eastwards, so the default wind from 180 is a beam reach.
"""
import logging
import math
from dataclasses import dataclass, replace
from typing import Tuple

import numpy as np
import pandas as pd

from Components.Config import ControllerConfig, PhysicsConfig
from Components.Helm import HelmState, Point, bearing, compute_errors, step_controller, wrap_angle
from Components.Metrics import cumulative_rmse

logger = logging.getLogger(__name__)

# level -> (uncertainty score, lower limit, upper limit)
DIRECTION_LEVELS = {"None": (0, 180.0, 180.0), "Low": (1, 160.0, 200.0), "High": (2, 140.0, 220.0)}
SPEED_LEVELS = {"None": (0, 7.0, 7.0), "Low": (1, 4.0, 10.0), "High": (2, 1.0, 13.0)}

# label -> (speed uncertainty, direction uncertainty)
WIND_TABLE = {
    "A": ("None", "None"),
    "B": ("Low", "None"),
    "C": ("None", "Low"),
    "D": ("Low", "Low"),
    "E": ("High", "None"),
    "F": ("None", "High"),
    "G": ("High", "Low"),
    "H": ("Low", "High"),
    "I": ("High", "High"),
}

VERTICAL_MOVEMENTS = (0, 25, 50, 100)
LOG_COLUMNS = ["t", "x", "y", "heading", "speed", "rudder", "desired", "error",
               "rudder_change", "wind_dir", "wind_speed"]


@dataclass(frozen=True)
class WindConfig:
    label: str
    dir_lower: float
    dir_upper: float
    speed_lower: float
    speed_upper: float
    dir_score: int
    speed_score: int

    def __post_init__(self):
        if self.dir_lower > self.dir_upper or self.speed_lower > self.speed_upper:
            raise ValueError(f"Wind config {self.label}: lower bound above upper bound")

    @property
    def uncertainty_score(self) -> int:
        return self.dir_score + self.speed_score

    def contains(self, wind: "Wind") -> bool:
        return (self.dir_lower <= wind.direction_from <= self.dir_upper
                and self.speed_lower <= wind.speed <= self.speed_upper)


def _wind_config(label: str) -> WindConfig:
    speed_level, direction_level = WIND_TABLE[label]
    dir_score, dir_lower, dir_upper = DIRECTION_LEVELS[direction_level]
    speed_score, speed_lower, speed_upper = SPEED_LEVELS[speed_level]
    return WindConfig(label, dir_lower, dir_upper, speed_lower, speed_upper, dir_score, speed_score)


WIND_CONFIGS = {label: _wind_config(label) for label in WIND_TABLE}


def wind_configs_by_uncertainty() -> list[WindConfig]:
    return sorted(WIND_CONFIGS.values(), key=lambda cfg: (cfg.uncertainty_score, cfg.label))


@dataclass(frozen=True)
class CourseSpec:
    waypoints: Tuple[Point, ...]
    turns: int
    vertical_movement: float

    def __post_init__(self):
        if len(self.waypoints) != self.turns + 2:
            raise ValueError(f"A {self.turns}-turn course needs {self.turns + 2} waypoints")
        if self.waypoints[0] != (0.0, 0.0):
            raise ValueError("Courses start at the origin")

    @property
    def label(self) -> str:
        return f"{'Double' if self.turns == 2 else 'Single'}-{self.vertical_movement:g}"

    def leg_headings(self) -> list[float]:
        return [bearing(a, b) for a, b in zip(self.waypoints, self.waypoints[1:])]

    def turn_angles(self) -> list[float]:
        """Absolute heading change required at each intermediate waypoint."""
        headings = self.leg_headings()
        return [abs(wrap_angle(b - a)) for a, b in zip(headings, headings[1:])]


def build_course(turns: int, vertical: float, leg_length: float = 250.0) -> CourseSpec:
    if turns not in (0, 1, 2):
        raise ValueError(f"Courses have 0, 1 or 2 turns, got {turns}")
    if vertical not in VERTICAL_MOVEMENTS:
        raise ValueError(f"Vertical movement must be one of {VERTICAL_MOVEMENTS}, got {vertical}")
    if turns == 0 and vertical != 0:
        raise ValueError("A straight course has no vertical movement")

    L = float(leg_length)
    v = float(vertical)
    if turns == 0:
        waypoints = ((0.0, 0.0), (2 * L, 0.0))
    elif turns == 1:
        waypoints = ((0.0, 0.0), (L, 0.0), (2 * L, v))
    else:
        # Up then back down, so the second heading change is twice the first
        waypoints = ((0.0, 0.0), (L, 0.0), (2 * L, v), (3 * L, 0.0))
    return CourseSpec(waypoints, turns, v)


def parse_course_label(label: str, leg_length: float = 250.0) -> CourseSpec:
    """'Single-50' -> one turn with 50 m vertical movement; 'Single-0' is the straight benchmark."""
    try:
        kind, vertical_text = label.split("-")
        vertical = float(vertical_text)
    except ValueError:
        raise ValueError(f"Invalid course label {label!r}, expected e.g. 'Single-50' or 'Double-100'")

    if kind == "Single":
        turns = 0 if vertical == 0 else 1
    elif kind == "Double":
        turns = 2
    else:
        raise ValueError(f"Invalid course label {label!r}")
    return build_course(turns, int(vertical) if vertical.is_integer() else vertical, leg_length)


@dataclass(frozen=True)
class Wind:
    direction_from: float
    speed: float


@dataclass(frozen=True)
class BoatState:
    x: float
    y: float
    heading: float
    speed: float
    rudder: float = 0.0

    @property
    def position(self) -> Point:
        return (self.x, self.y)


@dataclass(frozen=True)
class CycleLog:
    t: float
    state: BoatState
    desired: float
    error: float
    rudder_change: float
    wind: Wind


@dataclass(frozen=True)
class RunRecord:
    seed: int
    log: Tuple[CycleLog, ...]
    completed: bool
    rmse: float
    elapsed: float
    waypoints_reached: int

    @property
    def errors(self) -> list[float]:
        return [row.error for row in self.log]

    def to_frame(self) -> pd.DataFrame:
        """Per-cycle log in the CSV column order."""
        return pd.DataFrame(
            [(row.t, row.state.x, row.state.y, row.state.heading, row.state.speed, row.state.rudder,
              row.desired, row.error, row.rudder_change, row.wind.direction_from, row.wind.speed)
             for row in self.log],
            columns=LOG_COLUMNS,
        )


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 (128-bit LCG state, 64-bit output) gives bit-identical streams on every platform."""
    return np.random.Generator(np.random.PCG64(seed))


def sample_wind(cfg: WindConfig, rng: np.random.Generator) -> Wind:
    # Both channels always draw, so every config consumes the stream identically
    draws = rng.standard_normal(2)
    direction = (cfg.dir_lower + cfg.dir_upper) / 2.0 + draws[0] * (cfg.dir_upper - cfg.dir_lower) / 4.0
    speed = (cfg.speed_lower + cfg.speed_upper) / 2.0 + draws[1] * (cfg.speed_upper - cfg.speed_lower) / 4.0
    return Wind(
        float(np.clip(direction, cfg.dir_lower, cfg.dir_upper)),
        float(np.clip(speed, cfg.speed_lower, cfg.speed_upper)),
    )


def polar_speed(wind_speed: float, off_wind_angle: float, physics: PhysicsConfig = PhysicsConfig()) -> float:
    """Boat speed for a wind speed and an angle off the wind; zero inside the no-go cone."""
    factor = np.interp(off_wind_angle, physics.polar_angles, physics.polar_factors)
    return float(wind_speed * factor)


def step_physics(state: BoatState, wind: Wind, dt: float, physics: PhysicsConfig = PhysicsConfig()) -> BoatState:
    # Rudder bites in proportion to speed, saturating at 2 m/s
    turn_rate = physics.rudder_gain * state.rudder * min(state.speed / 2.0, 1.0)
    heading = (state.heading + turn_rate * dt) % 360.0

    target = polar_speed(wind.speed, abs(wrap_angle(state.heading - wind.direction_from)), physics)
    speed = target + (state.speed - target) * math.exp(-dt / physics.speed_time_constant)

    radians = math.radians(heading)
    return BoatState(
        x=state.x + speed * math.sin(radians) * dt,
        y=state.y + speed * math.cos(radians) * dt,
        heading=heading,
        speed=speed,
        rudder=state.rudder,
    )


def run_episode(course: CourseSpec, wind_cfg: WindConfig, ctrl: ControllerConfig, seed: int,
                physics: PhysicsConfig = PhysicsConfig()) -> RunRecord:
    """
    Sail one course: physics every dt, the helm once per control period and a
    fresh wind sample every wind period. Ends on the last waypoint or at the timeout.
    """
    rng = make_rng(seed)
    waypoints = course.waypoints
    target_index = 1

    state = BoatState(*waypoints[0], heading=bearing(waypoints[0], waypoints[1]), speed=0.0)
    initial_error, _ = compute_errors(state.heading, state.position, waypoints[1], 0.0)
    helm = HelmState(previous_error=initial_error, current_rudder=0.0)

    log = []
    wind = None
    completed = False
    elapsed = physics.timeout
    total_steps = int(round(physics.timeout / physics.dt))

    for step in range(total_steps):
        target = waypoints[target_index]

        if step % physics.steps_per_wind == 0:
            wind = sample_wind(wind_cfg, rng)

        if step % physics.steps_per_control == 0:
            desired = bearing(state.position, target)
            error, delta = compute_errors(state.heading, state.position, target, helm.previous_error)
            rudder_change, helm = step_controller(ctrl, helm, error, delta)
            state = replace(state, rudder=helm.current_rudder)
            log.append(CycleLog(step * physics.dt, state, desired, error, rudder_change, wind))

        state = step_physics(state, wind, physics.dt, physics)

        if math.dist(state.position, target) <= physics.capture_radius:
            target_index += 1
            if target_index == len(waypoints):
                completed = True
                elapsed = (step + 1) * physics.dt
                break

    record = RunRecord(
        seed=seed,
        log=tuple(log),
        completed=completed,
        rmse=cumulative_rmse([row.error for row in log]),
        elapsed=elapsed,
        waypoints_reached=target_index - 1,
    )
    if not completed:
        logger.debug(f"Seed {seed} timed out on {course.label} with wind {wind_cfg.label} ({ctrl.label})")
    return record
