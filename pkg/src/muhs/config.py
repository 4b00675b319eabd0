"""JSON experiment configuration."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from muhs.dynamics import Params
from muhs.grid import PeriodicGrid
from muhs.mollify import RoughInitialData, profile_from_dict
from muhs.timestep import TimeStepConfig

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_config"]


class ConfigError(ValueError):
    """Raised for unreadable or invalid configuration files."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class InitialConfig(_Strict):
    u: dict[str, Any]
    rho: dict[str, Any]
    alpha: float = 0.0

    @field_validator("u", "rho")
    @classmethod
    def _profile(cls, v):
        profile_from_dict(v)
        return v


class TimeConfig(_Strict):
    t_end: float = Field(ge=0)
    cfl_number: float = Field(0.3, gt=0, le=1)
    dt_max: float = Field(1e-2, gt=0)
    record_every: int = Field(1, ge=1)
    blowup_threshold: float = Field(1e6, gt=0)
    fixed_dt: Optional[float] = Field(None, gt=0)
    energy_drift_limit: Optional[float] = Field(None, gt=0)


class ExperimentConfig(_Strict):
    grid: int = 256
    gamma: float = 0.0
    dealias: bool = False
    initial: InitialConfig
    mollifier: Optional[int] = Field(None, ge=2)
    n_list: list[int] = []
    time: TimeConfig
    probe_times: list[float] = []
    output_dir: str = "out"
    seed: int = 0
    declare_global: bool = False

    @field_validator("grid")
    @classmethod
    def _grid(cls, v):
        PeriodicGrid(v)
        return v

    @field_validator("n_list")
    @classmethod
    def _n_list(cls, v):
        if any(n < 2 for n in v):
            raise ValueError("mollifier indices must be >= 2")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("n_list must be strictly increasing")
        return v

    def make_grid(self) -> PeriodicGrid:
        return PeriodicGrid(self.grid)

    def params(self) -> Params:
        return Params(self.gamma, self.dealias)

    def timestep(self) -> TimeStepConfig:
        return TimeStepConfig(**self.time.model_dump())

    def data(self) -> RoughInitialData:
        return RoughInitialData(
            profile_from_dict(self.initial.u), profile_from_dict(self.initial.rho), self.initial.alpha
        )


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}: top level must be a JSON object")
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as exc:
        lines = []
        for err in exc.errors():
            loc = ".".join(str(p) for p in err["loc"]) or "<root>"
            lines.append(f"{source}: {loc}: {err['msg']}")
        raise ConfigError("\n".join(lines)) from None


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    return parse_config(text, str(path))
