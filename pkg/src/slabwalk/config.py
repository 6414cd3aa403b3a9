"""Flat ``key = value`` run configuration."""
from __future__ import annotations

import dataclasses
import typing
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

__all__ = ["RunConfig", "ConfigError", "parse_config", "load_config"]

ALL_CHECKS = ("delmotte", "volume_doubling", "poincare", "lazy_smoothing")


class ConfigError(ValueError):
    pass


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.replace(",", " ").split())


def _word_list(text: str) -> tuple[str, ...]:
    return tuple(x for x in text.replace(",", " ").split())


def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass
class RunConfig:
    d: int = 2
    s: int = 1
    scales: int = 2
    box_radius: int = 64
    T: int = 63
    a_seed: int = 2
    gamma_cap: Optional[int] = None
    delta_override: Optional[float] = None
    factor: float = 3.0
    output_dir: str = "out"
    allow_approximate: bool = False
    # smallest scale index entering the halves; 1 lets the seed scale shape the odd half
    first_scale: int = 2
    sides: str = "eo"
    glue: str = "weighted"
    segment_length: int = 1
    constants_horizon: int = 32
    max_vertices: int = 4_000_000
    schedule_file: Optional[str] = None
    decompose_gamma: Optional[int] = None
    decompose_times: tuple[int, ...] = ()
    verify_graph: str = "lattice"
    d_eff: Optional[float] = None
    checks: tuple[str, ...] = ALL_CHECKS
    delmotte_start: int = 10
    delmotte_max_ratio: float = 3.0
    doubling_bound: Optional[float] = None
    poincare_radii: tuple[int, ...] = ()
    poincare_stability: float = 2.0
    smoothing_times: tuple[int, ...] = ()
    smoothing_stability: float = 2.0

    def validate(self) -> "RunConfig":
        if not 1 <= self.s < self.d:
            raise ConfigError(f"need d > s >= 1, got d={self.d}, s={self.s}")
        if self.a_seed < 2 or self.a_seed % 2:
            raise ConfigError(f"a_seed must be a positive even integer, got {self.a_seed}")
        if self.scales < 1:
            raise ConfigError("scales must be >= 1")
        if self.box_radius < 1 or self.T < 0:
            raise ConfigError("box_radius must be >= 1 and T >= 0")
        if self.gamma_cap is not None and self.gamma_cap < 1:
            raise ConfigError("gamma_cap must be >= 1")
        if self.delta_override is not None and not 0 < self.delta_override <= 1:
            raise ConfigError("delta_override must lie in (0, 1]")
        if self.factor <= 0:
            raise ConfigError("factor must be positive")
        if self.first_scale not in (1, 2):
            raise ConfigError("first_scale must be 1 or 2")
        if self.sides not in ("eo", "ee", "oo"):
            raise ConfigError(f"sides must be eo, ee or oo, got {self.sides!r}")
        if self.glue not in ("weighted", "unweighted"):
            raise ConfigError(f"glue must be weighted or unweighted, got {self.glue!r}")
        if self.segment_length < 1:
            raise ConfigError("segment_length must be >= 1")
        if self.verify_graph not in ("lattice", "H_e", "H_o", "F_e", "F_o", "G"):
            raise ConfigError(f"unknown verify_graph {self.verify_graph!r}")
        unknown = set(self.checks) - set(ALL_CHECKS)
        if unknown:
            raise ConfigError(f"unknown checks: {', '.join(sorted(unknown))}")
        return self

    @property
    def effective_d(self) -> float:
        return self.d if self.d_eff is None else self.d_eff

    @property
    def effective_doubling_bound(self) -> float:
        return 1.125 * 2**self.d if self.doubling_bound is None else self.doubling_bound


_CONVERTERS = {
    int: int,
    float: float,
    str: str,
    bool: _bool,
    Optional[int]: int,
    Optional[float]: float,
    Optional[str]: str,
    tuple[int, ...]: _int_list,
    tuple[str, ...]: _word_list,
}


def _field_types() -> dict:
    hints = {}
    resolved = typing.get_type_hints(RunConfig)
    for f in dataclasses.fields(RunConfig):
        hints[f.name] = resolved[f.name]
    return hints


def parse_config(text: str) -> RunConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment, unknown keys are errors."""
    types = _field_types()
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in types:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = _CONVERTERS[types[key]](value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
    return RunConfig(**values).validate()


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)
