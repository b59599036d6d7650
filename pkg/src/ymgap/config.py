"""Run configuration: JSON file -> schema validation -> frozen dataclasses.

Every field has a default, so ``{}`` is a valid configuration.  Unknown keys
are rejected so typos surface immediately.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, is_dataclass
from pathlib import Path

import jsonschema

__all__ = ["ConfigError", "RunConfig", "SCHEMA", "load_config", "parse_config"]


class ConfigError(ValueError):
    """Configuration failed validation; ``errors`` lists ``(field path, message)``."""

    def __init__(self, errors: list[tuple[str, str]]):
        self.errors = errors
        super().__init__("; ".join(f"{p}: {m}" for p, m in errors))


_pos_int = {"type": "integer", "minimum": 1}
_nonneg_int = {"type": "integer", "minimum": 0}
_pos_num = {"type": "number", "exclusiveMinimum": 0}
_complex_list = {"type": "array", "items": {"type": "array", "items": {"type": "number"},
                                            "minItems": 2, "maxItems": 2}}


def _obj(props: dict) -> dict:
    return {"type": "object", "additionalProperties": False, "properties": props}


SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "ymgap run configuration",
    **_obj({
        "gauge_group": {"type": "string", "pattern": "^(su|so)([0-9]+|N|n)?$"},
        "N": {"type": ["integer", "null"], "minimum": 2},
        "grid": _obj({"n": {"type": "integer", "minimum": 2}, "h": _pos_num}),
        "modes": _obj({"M": _pos_int, "k_max": _pos_int}),
        "fock": _obj({"n_max": _nonneg_int, "ordering_s": {"type": "number"}}),
        "solver": _obj({
            "tol": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            "max_iter": {"type": ["integer", "null"], "minimum": 1},
            "deflate_tol": {"type": "number", "minimum": 0},
        }),
        "coupling": {"type": "number"},
        "evolve": _obj({"dt": _pos_num, "steps": _pos_int, "amplitude": _pos_num}),
        "propagate": _obj({
            "t": {"type": "number"},
            "N": _pos_int,
            "N_list": {"type": "array", "items": _pos_int, "minItems": 1},
            "method": {"enum": ["taylor", "quadrature"]},
            "order": {"type": ["integer", "null"], "minimum": 1},
            "z0": {"oneOf": [{"type": "null"}, _complex_list]},
            "zt": {"oneOf": [{"type": "null"}, _complex_list]},
        }),
        "scan": _obj({
            "M": {"type": "array", "items": _pos_int, "minItems": 1},
            "n_max": {"type": "array", "items": {"type": "integer", "minimum": 5}, "minItems": 1},
            "coupling": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        }),
        "trials": _pos_int,
        "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
        "output_dir": {"type": "string", "minLength": 1},
    }),
}


@dataclass(frozen=True)
class GridCfg:
    n: int = 8
    h: float = 1.0


@dataclass(frozen=True)
class ModesCfg:
    M: int = 3
    k_max: int = 1


@dataclass(frozen=True)
class FockCfg:
    n_max: int = 6
    ordering_s: float = 1.0


@dataclass(frozen=True)
class SolverCfg:
    tol: float = 1e-8
    max_iter: int | None = None
    deflate_tol: float = 1e-10


@dataclass(frozen=True)
class EvolveCfg:
    dt: float = 0.05
    steps: int = 20
    amplitude: float = 0.3


@dataclass(frozen=True)
class PropagateCfg:
    t: float = 0.005
    N: int = 64
    N_list: tuple = (4, 8, 16, 32, 64)
    method: str = "taylor"
    order: int | None = None
    z0: tuple | None = None
    zt: tuple | None = None


@dataclass(frozen=True)
class ScanCfg:
    M: tuple = (3,)
    n_max: tuple = (6,)
    coupling: tuple = (0.0, 0.5, 1.0)


@dataclass(frozen=True)
class RunConfig:
    gauge_group: str = "su2"
    N: int | None = None
    grid: GridCfg = field(default_factory=GridCfg)
    modes: ModesCfg = field(default_factory=ModesCfg)
    fock: FockCfg = field(default_factory=FockCfg)
    solver: SolverCfg = field(default_factory=SolverCfg)
    coupling: float = 1.0
    evolve: EvolveCfg = field(default_factory=EvolveCfg)
    propagate: PropagateCfg = field(default_factory=PropagateCfg)
    scan: ScanCfg = field(default_factory=ScanCfg)
    trials: int = 20
    seed: int = 0
    output_dir: str = "ymgap-out"

    def to_dict(self) -> dict:
        return _to_dict(self)


def _to_dict(obj):
    if is_dataclass(obj):
        return {f.name: _to_dict(getattr(obj, f.name)) for f in fields(obj)}
    if isinstance(obj, tuple):
        return [_to_dict(x) for x in obj]
    return obj


def _freeze(value):
    if isinstance(value, list):
        return tuple(_freeze(v) for v in value)
    return value


def _build(cls, data: dict):
    kwargs = {}
    for f in fields(cls):
        if f.name not in data:
            continue
        sub = data[f.name]
        default = cls.__dataclass_fields__[f.name]
        factory = default.default_factory
        if isinstance(sub, dict) and factory is not None and is_dataclass(factory):
            kwargs[f.name] = _build(factory, sub)
        elif f.type in ("float", "float | None") and isinstance(sub, int):
            kwargs[f.name] = float(sub)
        else:
            kwargs[f.name] = _freeze(sub)
    return cls(**kwargs)


def parse_config(data: dict) -> RunConfig:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        raise ConfigError([("/".join(str(p) for p in e.absolute_path) or "<root>", e.message) for e in errors])
    return _build(RunConfig, data)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError([("<file>", f"invalid JSON: {exc}")]) from exc
    if not isinstance(data, dict):
        raise ConfigError([("<root>", "configuration must be a JSON object")])
    return parse_config(data)
