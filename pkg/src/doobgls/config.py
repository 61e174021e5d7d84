"""JSON vocabulary for tails, generating functions, grids and run settings.

Every object is ``{"kind": ..., "params": {...}}``; a bare string is a kind
without parameters.  Unknown kinds, parameters or top-level keys are
rejected with :class:`ConfigError`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .errors import DomainError
from .gls import (
    ConstantPsi,
    DeltaBetaTransform,
    GeneratingFunction,
    NaturalOf,
    NuGamma,
    PsiML,
    SubgaussianPsi,
    Tabulated,
)
from .quadrature import DEFAULT_CONFIG, QuadratureConfig
from .tail_model import (
    EmpiricalTable,
    Exponential,
    LogSquare,
    PowerLog,
    Scaled,
    SlowlyVarying,
    Subgaussian,
    TailFunction,
    point_mass,
)

__all__ = ["ConfigError", "parse_tail", "parse_psi", "parse_L", "parse_grid", "parse_quadrature",
           "RunConfig", "load_config"]


class ConfigError(DomainError):
    pass


def _split(spec, allowed):
    if isinstance(spec, str):
        kind, params = spec, {}
    elif isinstance(spec, dict):
        extra = set(spec) - {"kind", "params"}
        if extra or "kind" not in spec:
            raise ConfigError(f"descriptor needs exactly 'kind' and optional 'params', got {sorted(spec)}")
        kind, params = spec["kind"], dict(spec.get("params") or {})
    else:
        raise ConfigError(f"descriptor must be a string or an object, got {type(spec).__name__}")
    if kind not in allowed:
        raise ConfigError(f"unknown kind {kind!r}; expected one of {sorted(allowed)}")
    unknown = set(params) - set(allowed[kind])
    if unknown:
        raise ConfigError(f"unknown parameters for {kind}: {sorted(unknown)}")
    return kind, params


def parse_L(spec) -> SlowlyVarying:
    """``null``/number/``{"r": r}`` -> (ln(x+1))**r."""
    if spec is None:
        return SlowlyVarying()
    if isinstance(spec, (int, float)):
        return SlowlyVarying(float(spec))
    if isinstance(spec, dict) and set(spec) <= {"r"}:
        return SlowlyVarying(float(spec.get("r", 0.0)))
    raise ConfigError(f"bad slowly varying descriptor {spec!r}")


_TAILS = {
    "Exponential": (),
    "Subgaussian": ("c",),
    "LogSquare": ("gamma",),
    "PowerLog": ("beta", "gamma", "L"),
    "Scaled": ("inner", "factor"),
    "EmpiricalTable": ("t", "tail", "csv"),
    "PointMass": ("value",),
}


def parse_tail(spec) -> TailFunction:
    kind, p = _split(spec, _TAILS)
    if kind == "Exponential":
        return Exponential()
    if kind == "Subgaussian":
        return Subgaussian(float(p.get("c", 1.0)))
    if kind == "LogSquare":
        return LogSquare(float(p.get("gamma", 1.0)))
    if kind == "PowerLog":
        if "beta" not in p:
            raise ConfigError("PowerLog needs beta")
        return PowerLog(float(p["beta"]), float(p.get("gamma", 0.0)), parse_L(p.get("L")))
    if kind == "Scaled":
        return Scaled(parse_tail(p["inner"]), float(p["factor"]))
    if kind == "EmpiricalTable":
        if "csv" in p:
            return EmpiricalTable.from_csv(p["csv"])
        return EmpiricalTable(tuple(p["t"]), tuple(p["tail"]))
    return point_mass(float(p.get("value", 1.0)))


_PSIS = {
    "PsiML": ("m", "L"),
    "Subgaussian": (),
    "NuGamma": ("gamma",),
    "Natural": ("tail",),
    "DeltaBeta": ("inner", "delta", "beta"),
    "Tabulated": ("p", "psi"),
    "Constant": ("value", "lower"),
}


def parse_psi(spec, tail: TailFunction | None = None, cfg: QuadratureConfig = DEFAULT_CONFIG) -> GeneratingFunction:
    """``Natural`` without a ``tail`` parameter uses ``tail``."""
    kind, p = _split(spec, _PSIS)
    if kind == "PsiML":
        return PsiML(float(p["m"]), parse_L(p.get("L")))
    if kind == "Subgaussian":
        return SubgaussianPsi()
    if kind == "NuGamma":
        return NuGamma(float(p["gamma"]))
    if kind == "Natural":
        T = parse_tail(p["tail"]) if "tail" in p else tail
        if T is None:
            raise ConfigError("Natural generating function needs a tail")
        return NaturalOf(T, cfg)
    if kind == "DeltaBeta":
        return DeltaBetaTransform(parse_psi(p["inner"], tail, cfg), float(p["delta"]), float(p["beta"]))
    if kind == "Tabulated":
        return Tabulated(tuple(p["p"]), tuple(p["psi"]))
    return ConstantPsi(float(p.get("value", 1.0)), float(p.get("lower", 1.0)))


def parse_grid(spec, name: str = "grid"):
    """A list of numbers, or ``{"linspace"|"geomspace": [lo, hi, n]}``; None passes through."""
    if spec is None:
        return None
    if isinstance(spec, (int, float)):
        spec = [spec]
    if isinstance(spec, dict):
        if len(spec) != 1 or next(iter(spec)) not in ("linspace", "geomspace"):
            raise ConfigError(f"{name}: expected a list or a single linspace/geomspace entry")
        how, args = next(iter(spec.items()))
        if not (isinstance(args, list) and len(args) == 3):
            raise ConfigError(f"{name}: {how} needs [lo, hi, n]")
        lo, hi, n = float(args[0]), float(args[1]), int(args[2])
        if how == "geomspace" and not lo > 0:
            raise ConfigError(f"{name}: geomspace needs lo > 0")
        arr = getattr(np, how)(lo, hi, n)
    else:
        arr = np.asarray(spec, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ConfigError(f"{name} must be a non-empty list")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{name} must contain finite numbers")
    return arr


def parse_quadrature(spec) -> QuadratureConfig:
    if spec is None:
        return DEFAULT_CONFIG
    allowed = {f.name for f in fields(QuadratureConfig)}
    unknown = set(spec) - allowed
    if unknown:
        raise ConfigError(f"unknown quadrature keys {sorted(unknown)}")
    return QuadratureConfig(**spec)


@dataclass
class RunConfig:
    """Every setting a subcommand can read; absent entries take defaults."""

    tail: object = "Exponential"
    tail_X: object = None
    coupling: str = "identical"
    psi: object = None
    action: str = "norm"
    Delta: float = 1.0
    beta: float = 1.0
    C: float = 1.0
    p: object = None
    d: int | None = None
    k: float = 1.0
    t: object = None
    p_max: float = 100.0
    method: str = "analytic"
    bound: float | None = None
    p_grid: object = None
    t_grid: object = None
    theta_grid: object = None
    r_grid: object = None
    u_grid: object = None
    quadrature: dict | None = None
    seed: int = 0
    n: int = 100_000
    workers: int = 1
    out: str | None = None
    format: str = "json"

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names - {"schema"}
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        cfg = cls(**{k: v for k, v in data.items() if k in names})
        cfg.validate()
        return cfg

    def merged(self, overrides: dict) -> "RunConfig":
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        data.update({k: v for k, v in overrides.items() if v is not None})
        return RunConfig.from_dict(data)

    def validate(self) -> None:
        if self.coupling not in ("identical", "independent"):
            raise ConfigError("coupling must be 'identical' or 'independent'")
        if self.coupling == "independent" and self.tail_X is None:
            raise ConfigError("independent coupling needs tail_X")
        if self.format not in ("json", "csv"):
            raise ConfigError("format must be 'json' or 'csv'")
        for name in ("Delta", "beta", "C", "k", "p_max"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be a positive finite number")
        if not (isinstance(self.seed, int) and 0 <= self.seed < 1 << 64):
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if not (isinstance(self.n, int) and self.n >= 1):
            raise ConfigError("n must be a positive integer")
        for name in ("p", "t", "p_grid", "t_grid", "theta_grid", "r_grid", "u_grid"):
            parse_grid(getattr(self, name), name)
        if self.p is not None and np.any(parse_grid(self.p, "p") <= 0):
            raise ConfigError("p values must be positive")
        parse_quadrature(self.quadrature)

    @property
    def quad(self) -> QuadratureConfig:
        return parse_quadrature(self.quadrature)

    def grid(self, name):
        return parse_grid(getattr(self, name), name)


def load_config(path) -> RunConfig:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    return RunConfig.from_dict(data)
