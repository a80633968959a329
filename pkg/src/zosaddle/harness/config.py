"""Experiment configuration: TOML files plus command-line overrides."""
from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

from ..algorithms import ALGORITHMS, OUTPUT_MODES
from ..exceptions import ConfigError
from ..oracles import DELTA_KINDS, DIRECTION_MODES, ESTIMATOR_KINDS

__all__ = ["CellSpec", "ProblemConfig", "NoiseConfig", "ExperimentConfig", "load_config",
           "apply_overrides", "OUTPUT_DIR_ENV"]

OUTPUT_DIR_ENV = "ZOSADDLE_OUTPUT_DIR"
PROBLEM_KINDS = ("matrix_game", "sc_quadratic", "lagrangian_toy")
GEOMETRIES = ("default", "entropy", "euclidean")


@dataclass
class CellSpec:
    """One solver configuration of the experiment grid."""

    algorithm: str
    estimator: str
    gamma: float
    tau: float
    output_mode: str | None = None
    direction_mode: str = "joint_split"
    geometry: str = "default"
    label: str | None = None

    @property
    def cell_id(self) -> str:
        return self.label or f"{self.algorithm}/{self.estimator}"

    def validate(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        if self.estimator not in ESTIMATOR_KINDS:
            raise ConfigError(f"unknown estimator {self.estimator!r}")
        if not (self.gamma > 0 and self.tau > 0):
            raise ConfigError(f"cell {self.cell_id}: gamma and tau must be positive")
        if self.output_mode is not None and self.output_mode not in OUTPUT_MODES:
            raise ConfigError(f"unknown output mode {self.output_mode!r}")
        if self.direction_mode not in DIRECTION_MODES:
            raise ConfigError(f"unknown direction mode {self.direction_mode!r}")
        if self.geometry not in GEOMETRIES:
            raise ConfigError(f"unknown geometry {self.geometry!r}")


@dataclass
class ProblemConfig:
    kind: str = "matrix_game"
    matrix_source: str = "paper_generator"
    n: int = 200
    matrix_seed: int = 0
    csv_path: str | None = None
    n_x: int = 5
    n_y: int = 5
    mu: float = 1.0
    radius: float = 10.0
    quadratic_seed: int = 0
    lambda_upper: float = 10.0

    def validate(self) -> None:
        if self.kind not in PROBLEM_KINDS:
            raise ConfigError(f"unknown problem kind {self.kind!r}")
        if self.kind == "matrix_game":
            if self.matrix_source not in ("paper_generator", "csv"):
                raise ConfigError(f"unknown matrix source {self.matrix_source!r}")
            if self.matrix_source == "csv" and not self.csv_path:
                raise ConfigError("matrix_source = 'csv' needs csv_path")
            if self.matrix_source == "paper_generator" and self.n < 2:
                raise ConfigError("matrix size must be >= 2")


@dataclass
class NoiseConfig:
    sigma: float = 0.0
    delta_cap: float = 0.0
    delta_kind: str = "zero"
    delta_seed: int = 0

    def validate(self) -> None:
        if self.sigma < 0 or self.delta_cap < 0:
            raise ConfigError("noise scales must be nonnegative")
        if self.delta_kind not in DELTA_KINDS or self.delta_kind == "custom":
            raise ConfigError(f"delta kind {self.delta_kind!r} is not available from a config file")


@dataclass
class ExperimentConfig:
    """A grid of cells run for ``trials`` seeds each.

    Give ``iterations`` (``N``), ``oracle_budget``, or both (the budget then
    stops runs early). ``trace_points``, when set, picks a per-cell trace
    cadence that yields roughly that many records.
    """

    problem: ProblemConfig
    cells: list[CellSpec]
    trials: int = 1
    base_seed: int = 0
    iterations: int | None = None
    oracle_budget: int | None = None
    trace_every: int = 1
    trace_points: int | None = None
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    output_dir: str = "results"
    name: str = "experiment"
    jobs: int = 1
    notes: list[str] = field(default_factory=list)

    def validate(self) -> None:
        if not self.cells:
            raise ConfigError("experiment needs at least one cell")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.iterations is None and self.oracle_budget is None:
            raise ConfigError("set iterations or oracle_budget")
        if self.iterations is not None and self.iterations < 0:
            raise ConfigError("iterations must be >= 0")
        if self.oracle_budget is not None and self.oracle_budget < 1:
            raise ConfigError("oracle_budget must be positive")
        if self.trace_every < 1 or (self.trace_points is not None and self.trace_points < 1):
            raise ConfigError("trace cadence must be positive")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        ids = [c.cell_id for c in self.cells]
        if len(set(ids)) != len(ids):
            raise ConfigError(f"cell ids must be unique: {ids}")
        self.problem.validate()
        self.noise.validate()
        for c in self.cells:
            c.validate()

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ExperimentConfig":
        data = dict(data)
        try:
            problem = ProblemConfig(**data.pop("problem", {}))
            noise = NoiseConfig(**data.pop("noise", {}))
            cells = [CellSpec(**c) for c in data.pop("cells", [])]
            cfg = cls(problem=problem, cells=cells, noise=noise, **data)
        except TypeError as exc:
            raise ConfigError(f"bad config field: {exc}") from exc
        return cfg


def _parse_value(text: str) -> Any:
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_overrides(data: dict[str, Any], overrides: list[str]) -> dict[str, Any]:
    """Apply ``dotted.key=value`` overrides (values parsed as TOML literals) to a config dict.

    ``cells.0.gamma=0.1`` addresses list entries by index.
    """
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        parts = key.strip().split(".")
        node: Any = data
        for part in parts[:-1]:
            if isinstance(node, list):
                node = node[int(part)]
            else:
                node = node.setdefault(part, {})
        last = parts[-1]
        if isinstance(node, list):
            node[int(last)] = _parse_value(raw.strip())
        else:
            node[last] = _parse_value(raw.strip())
    return data


def load_config(path, overrides: list[str] | None = None) -> ExperimentConfig:
    with open(Path(path), "rb") as fh:
        data = tomllib.load(fh)
    if overrides:
        data = apply_overrides(data, overrides)
    return ExperimentConfig.from_dict(data)
