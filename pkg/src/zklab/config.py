"""
TOML configuration with strict validation.

Every section maps onto one frozen parameter record; keys are its field names.
Unknown sections or keys, wrong types and violated constraints raise ConfigError
naming the section, the key and the constraint, before any computation starts.
"""

from __future__ import annotations

import dataclasses
import sys
import types
import typing
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import experiments as xp
from . import suites
from .errors import ConfigError

SECTIONS: dict[str, type] = {
    "spectral": suites.SpectralParams,
    "fundsol": suites.FundsolParams,
    "evolve": suites.EvolveParams,
    "equivalence": suites.EquivalenceParams,
    "weights": suites.WeightsParams,
    "interp": suites.InterpParams,
    "carleman": suites.CarlemanParams,
    "smoothing": suites.SmoothingParams,
    "decay15": xp.Decay15Spec,
    "persistence": xp.PersistenceSpec,
    "annulus": xp.AnnulusSpec,
}


@dataclass(frozen=True)
class GlobalParams:
    out: str | None = None
    threads: int = 1
    tol_scale: float = 1.0
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if not self.tol_scale > 0:
            raise ValueError("tol_scale must be positive")
        if self.seed is not None and not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class LabConfig:
    globals: GlobalParams = field(default_factory=GlobalParams)
    sections: dict = field(default_factory=dict)

    def section(self, name: str):
        return self.sections.get(name) or SECTIONS[name]()

    def canonical(self, name: str) -> dict:
        """Result-relevant settings of one job: its section plus tol_scale and seed."""
        return {"section": name, "params": dataclasses.asdict(self.section(name)),
                "tol_scale": self.globals.tol_scale, "seed": self.globals.seed}


def _type_name(tp) -> str:
    return getattr(tp, "__name__", None) or str(tp).replace("typing.", "")


def _convert(value, tp, where: str):
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if origin in (typing.Union, types.UnionType):
        if value is None and type(None) in args:
            return None
        errors = []
        for a in args:
            if a is type(None):
                continue
            try:
                return _convert(value, a, where)
            except ConfigError as exc:
                errors.append(str(exc))
        raise ConfigError(errors[0] if errors else f"{where}: invalid value {value!r}")
    if origin is tuple:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{where}: expected an array, got {type(value).__name__}")
        if len(args) == 2 and args[1] is Ellipsis:
            return tuple(_convert(v, args[0], f"{where}[{i}]") for i, v in enumerate(value))
        if len(value) != len(args):
            raise ConfigError(f"{where}: expected an array of {len(args)} entries, got {len(value)}")
        return tuple(_convert(v, a, f"{where}[{i}]") for i, (v, a) in enumerate(zip(value, args)))
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true or false, got {value!r}")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
        return value
    raise ConfigError(f"{where}: unsupported field type {_type_name(tp)}")


def build_section(cls: type, name: str, table: dict):
    if not isinstance(table, dict):
        raise ConfigError(f"[{name}] must be a table")
    hints = typing.get_type_hints(cls)
    fields = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(table) - fields)
    if unknown:
        raise ConfigError(f"[{name}] unknown key {unknown[0]!r}; allowed keys: {', '.join(sorted(fields))}")
    kwargs = {k: _convert(v, hints[k], f"[{name}] {k}") for k, v in table.items()}
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"[{name}] {exc}") from exc


def parse_config(data: dict) -> LabConfig:
    unknown = sorted(set(data) - set(SECTIONS) - {"global"})
    if unknown:
        raise ConfigError(f"unknown section [{unknown[0]}]; allowed: global, {', '.join(SECTIONS)}")
    glob = build_section(GlobalParams, "global", data.get("global", {}))
    sections = {name: build_section(SECTIONS[name], name, data[name]) for name in SECTIONS if name in data}
    return LabConfig(glob, sections)


def load_config(path: str | Path | None = None) -> LabConfig:
    """Parse a config file; None loads the shipped defaults."""
    if path is None:
        text = resources.files("zklab").joinpath("default_config.toml").read_text(encoding="utf-8")
        where = "default config"
    else:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        text = p.read_text(encoding="utf-8")
        where = str(p)
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    return parse_config(data)
