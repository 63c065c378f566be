"""Experiment configuration: TOML files, CLI overrides and named presets."""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, fields, replace

import tomli
import tomli_w

from .mms import ALPHA_TEST, ALPHA_TRAIN, ALPHA_VAL, SOLUTION_IDS, SpatialGrid, TimeGrid, get_solution
from .neural import LEAKY_SLOPE
from .training import Mode, TrainConfig

WORKERS_ENV = "COSTA_WORKERS"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    solution: str = "1"
    n_cells: int = 20
    n_levels: int = 5001
    x_min: float = 0.0
    x_max: float = 1.0
    t0: float = 0.0
    t_end: float = 5.0
    alpha_train: tuple[float, ...] = ALPHA_TRAIN
    alpha_val: tuple[float, ...] = ALPHA_VAL
    alpha_test: tuple[float, ...] = ALPHA_TEST
    withhold_source: bool = True
    hidden_layers: int = 4
    hidden_width: int = 80
    slope: float = LEAKY_SLOPE
    learning_rate: float = 1e-5
    batch_size: int = 32
    validation_period: int = 100
    overfit_limit: int = 20
    max_iterations: int = 200_000
    seed: int = 0
    workers: int = field(default_factory=lambda: int(os.environ.get(WORKERS_ENV, "1")))

    def __post_init__(self) -> None:
        object.__setattr__(self, "solution", str(self.solution).upper())
        for name in ("alpha_train", "alpha_val", "alpha_test"):
            object.__setattr__(self, name, tuple(float(a) for a in getattr(self, name)))
        self.validate()

    def validate(self) -> None:
        if self.solution not in SOLUTION_IDS:
            raise ConfigError(f"solution: unknown id {self.solution!r}; expected one of {', '.join(SOLUTION_IDS)}")
        if self.n_cells < 3:
            raise ConfigError("n_cells: must be at least 3")
        if self.n_levels < 2:
            raise ConfigError("n_levels: must be at least 2")
        if not self.x_max > self.x_min:
            raise ConfigError("x_max: must exceed x_min")
        if not self.t_end > self.t0:
            raise ConfigError("t_end: must exceed t0")
        for name in ("alpha_train", "alpha_val", "alpha_test"):
            if not getattr(self, name):
                raise ConfigError(f"{name}: must not be empty")
        sets = {"alpha_train": self.alpha_train, "alpha_val": self.alpha_val, "alpha_test": self.alpha_test}
        names = list(sets)
        for i, a in enumerate(names):
            for b in names[i + 1 :]:
                common = sorted(set(sets[a]) & set(sets[b]))
                if common:
                    raise ConfigError(f"{a}/{b}: alpha-sets must be disjoint, both contain {common}")
        for name in ("hidden_layers", "hidden_width", "batch_size", "validation_period", "overfit_limit", "workers"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name}: must be positive")
        if self.max_iterations < 0:
            raise ConfigError("max_iterations: must be non-negative")
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate: must be positive")

    @property
    def grid(self) -> SpatialGrid:
        return SpatialGrid(self.n_cells, self.x_min, self.x_max)

    @property
    def time_grid(self) -> TimeGrid:
        return TimeGrid(self.n_levels, self.t0, self.t_end)

    @property
    def manufactured(self):
        return get_solution(self.solution)

    @property
    def layer_dims(self) -> tuple[int, ...]:
        return (self.n_cells + 2,) + (self.hidden_width,) * self.hidden_layers + (self.n_cells,)

    def mode_seed(self, mode: Mode | str) -> int:
        # DDM and HAM get distinct seeds by default
        return self.seed if Mode(mode) is Mode.DDM else self.seed + 1

    def train_config(self, mode: Mode | str) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
            validation_period=self.validation_period,
            overfit_limit=self.overfit_limit,
            max_iterations=self.max_iterations,
            seed=self.mode_seed(mode),
            mode=Mode(mode),
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        for name in ("alpha_train", "alpha_val", "alpha_test"):
            d[name] = list(d[name])
        return d

    def dumps(self) -> str:
        return tomli_w.dumps(self.to_dict())


def from_dict(data: dict, base: ExperimentConfig | None = None) -> ExperimentConfig:
    known = {f.name: f for f in fields(ExperimentConfig)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"{unknown[0]}: unknown configuration key")
    base = base or ExperimentConfig()
    values = {}
    for key, value in data.items():
        default = getattr(base, key)
        try:
            if isinstance(default, bool):
                if not isinstance(value, bool):
                    raise TypeError
                values[key] = value
            elif isinstance(default, tuple):
                values[key] = tuple(float(v) for v in value)
            elif isinstance(default, int):
                if isinstance(value, bool) or int(value) != value:
                    raise TypeError
                values[key] = int(value)
            elif isinstance(default, float):
                values[key] = float(value)
            else:
                values[key] = str(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{key}: invalid value {value!r} (expected {type(default).__name__})") from None
    return replace(base, **values)


def loads(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"config syntax error: {exc}") from None
    return from_dict(data, base)


PRESETS: dict[str, dict] = {
    "s0": {"solution": "0", "withhold_source": False},
    "s1": {"solution": "1", "withhold_source": True},
    "s2": {"solution": "2", "withhold_source": True},
    "s3": {"solution": "3", "withhold_source": True},
    "s3-fine": {"solution": "3", "withhold_source": False, "n_cells": 200},
    "s4": {"solution": "4", "withhold_source": True},
}


def preset(tag: str) -> ExperimentConfig:
    try:
        return from_dict(PRESETS[tag])
    except KeyError:
        raise ConfigError(f"unknown experiment tag {tag!r}; expected one of {', '.join(PRESETS)}") from None
