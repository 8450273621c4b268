"""Experiment configuration: flat key=value files plus CLI overrides.

Precedence is CLI flag > config file > built-in default.  Grids are
comma-separated lists.  Unknown keys are a usage error.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_config_file"]

EXPERIMENTS = (
    "mse-vs-k",
    "mse-vs-eps",
    "mse-vs-n2",
    "exact-ci-gaussian",
    "ace-demo",
    "topic-check",
    "ci-report",
)


class ConfigError(ValueError):
    """Invalid configuration key or value (maps to exit code 2)."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Harness run description; defaults mirror the desk-scale study."""

    experiment: str = "mse-vs-k"
    d1: int = 50
    d2: int = 40
    n1: int = 4000
    n2: int = 1000
    k: int = 2
    alpha: float = 0.0
    k_grid: tuple[int, ...] = (2, 4, 8, 16)
    alpha_grid: tuple[float, ...] = (0.0, 0.25, 0.5, 0.75, 1.0)
    n2_grid: tuple[int, ...] = (250, 500, 1000, 2000)
    trials: int = 30
    seed: int = 0
    ridge: float = 0.0
    pca: int | None = None
    eval_n: int = 10_000
    output_dir: str = "."
    plot: bool = False

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment '{self.experiment}'")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        for name in ("k_grid", "alpha_grid", "n2_grid"):
            if len(getattr(self, name)) == 0:
                raise ConfigError(f"{name} must be nonempty")


_INT_KEYS = {"d1", "d2", "n1", "n2", "k", "trials", "seed", "pca", "eval_n"}
_FLOAT_KEYS = {"alpha", "ridge"}
_GRID_INT_KEYS = {"k_grid", "n2_grid"}
_GRID_FLOAT_KEYS = {"alpha_grid"}
_STR_KEYS = {"experiment", "output_dir"}
_BOOL_KEYS = {"plot"}
_ALL_KEYS = (
    _INT_KEYS | _FLOAT_KEYS | _GRID_INT_KEYS | _GRID_FLOAT_KEYS | _STR_KEYS | _BOOL_KEYS
)


def _parse_value(key: str, raw: str):
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
        if key in _GRID_INT_KEYS:
            return tuple(int(v) for v in raw.split(",") if v.strip())
        if key in _GRID_FLOAT_KEYS:
            return tuple(float(v) for v in raw.split(",") if v.strip())
        if key in _BOOL_KEYS:
            if raw.lower() in ("1", "true", "yes"):
                return True
            if raw.lower() in ("0", "false", "no"):
                return False
            raise ValueError(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for '{key}': {raw!r}") from exc


def parse_config_file(path: str | Path) -> dict:
    """Read key=value lines; '#' starts a comment; blank lines ignored."""
    values: dict = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in _ALL_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key '{key}'")
        values[key] = _parse_value(key, raw)
    return values


def load_config(
    path: str | Path | None = None, overrides: dict | None = None
) -> ExperimentConfig:
    """Merge defaults, an optional config file, and CLI overrides."""
    values: dict = {}
    if path is not None:
        values.update(parse_config_file(path))
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in _ALL_KEYS:
            raise ConfigError(f"unknown option '{key}'")
        values[key] = value
    known = {f.name for f in fields(ExperimentConfig)}
    assert set(values) <= known
    return ExperimentConfig(**values)
