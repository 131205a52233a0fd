import logging
import os
from enum import Enum
from pathlib import Path
from typing import Optional, Tuple

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

logger = logging.getLogger(__name__)

WORKERS_ENV_VAR = "FOU_REGATTA_WORKERS"
WIND_LABELS = tuple("ABCDEFGHI")


class ControllerKind(str, Enum):
    TYPE1 = "T1"
    INTERVAL_TYPE2 = "IT2"


class ControllerConfig(BaseModel):
    """Which fuzzy pipeline steers the boat, plus the fuzzy-core geometry it is built on."""

    model_config = ConfigDict(frozen=True)

    kind: ControllerKind = ControllerKind.TYPE1
    fou_size_m: float = Field(0.0, ge=0.0)
    rudder_limit: float = Field(30.0, gt=0.0)
    error_range: float = Field(90.0, gt=0.0)
    delta_range: float = Field(30.0, gt=0.0)
    output_range: float = Field(15.0, gt=0.0)
    grid_points: int = Field(201, ge=201)

    @property
    def label(self) -> str:
        if self.kind is ControllerKind.TYPE1:
            return "T1"
        return f"IT2-{self.fou_size_m:g}"


class PhysicsConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    dt: float = Field(0.25, gt=0.0)
    control_period: float = Field(1.0, gt=0.0)
    wind_period: float = Field(4.0, gt=0.0)
    capture_radius: float = Field(10.0, gt=0.0)
    timeout: float = Field(1800.0, gt=0.0)
    speed_time_constant: float = Field(3.0, gt=0.0)
    rudder_gain: float = Field(0.5, ge=0.0)
    leg_length: float = Field(250.0, gt=0.0)
    polar_angles: Tuple[float, ...] = (0.0, 40.0, 90.0, 120.0, 180.0)
    polar_factors: Tuple[float, ...] = (0.0, 0.0, 0.30, 0.35, 0.25)

    @model_validator(mode="after")
    def check_periods_and_polar(self):
        for name in ("control_period", "wind_period"):
            steps = getattr(self, name) / self.dt
            if abs(steps - round(steps)) > 1e-9:
                raise ValueError(f"{name}={getattr(self, name)} is not a multiple of dt={self.dt}")
        if len(self.polar_angles) != len(self.polar_factors):
            raise ValueError("polar_angles and polar_factors must have the same length")
        if self.polar_angles[0] != 0.0 or self.polar_angles[-1] != 180.0:
            raise ValueError("polar_angles must span 0..180")
        if any(b <= a for a, b in zip(self.polar_angles, self.polar_angles[1:])):
            raise ValueError("polar_angles must be strictly increasing")
        return self

    @property
    def steps_per_control(self) -> int:
        return int(round(self.control_period / self.dt))

    @property
    def steps_per_wind(self) -> int:
        return int(round(self.wind_period / self.dt))


class MatrixConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    wind_configs: Tuple[str, ...] = WIND_LABELS
    fou_sizes: Tuple[float, ...] = (0, 5, 10, 15, 20, 25)
    vertical_movements: Tuple[int, ...] = (25, 50, 100)
    turn_counts: Tuple[int, ...] = (1, 2)
    runs_per_batch: int = Field(30, ge=1)
    base_seed: int = Field(0, ge=0)
    benchmark: bool = False

    @field_validator("wind_configs")
    @classmethod
    def known_wind_labels(cls, value):
        unknown = [label for label in value if label not in WIND_LABELS]
        if unknown:
            raise ValueError(f"Unknown wind configurations: {unknown}")
        return value

    @field_validator("fou_sizes")
    @classmethod
    def non_negative_fou(cls, value):
        if any(m < 0 for m in value):
            raise ValueError(f"FOU sizes must be >= 0, got {value}")
        return value


class HarnessConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    output_dir: Path = Path("results")
    workers: int = Field(1, ge=1)
    # Timed-out runs keep their partial RMSE unless this is switched off
    include_incomplete: bool = True
    matrix: MatrixConfig = MatrixConfig()
    physics: PhysicsConfig = PhysicsConfig()
    controller: ControllerConfig = ControllerConfig()


def load_config(config_path: Optional[str | Path] = None) -> HarnessConfig:
    """
    Load a harness configuration from YAML.

    Missing sections fall back to the defaults; no path gives the full default config.
    """
    if config_path is None:
        return HarnessConfig()

    path = Path(config_path)
    if not path.exists():
        raise ValueError(f"Config file not found: {path}")

    with open(path, "r", encoding="utf-8") as f:
        raw = yaml.safe_load(f) or {}

    if not isinstance(raw, dict):
        raise ValueError(f"Config file {path} must contain a mapping at the top level")

    config = HarnessConfig.model_validate(raw)
    logger.info(f"Loaded config from {path}")
    return config


def resolve_workers(config: HarnessConfig, override: Optional[int] = None) -> int:
    """Flag beats environment beats config file."""
    if override is not None:
        return max(1, override)

    env_value = os.environ.get(WORKERS_ENV_VAR)
    if env_value:
        try:
            return max(1, int(env_value))
        except ValueError:
            logger.warning(f"Ignoring non-integer {WORKERS_ENV_VAR}={env_value!r}")

    return config.workers
