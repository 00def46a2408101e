"""JSON model specs and run configs.

A model spec is an object with a ``kind`` key:

    {"kind": "identity"}
    {"kind": "constant", "h": [h1, h2, h3]}
    {"kind": "diagonal", "h1": 4, "h2": 1}
    {"kind": "table", "rows": [[t, h1, h2, h3], ...]}
    {"kind": "powerlog", "alpha": 2, "beta1": 1, "beta2": 3, "t_max": 0.5}
    {"kind": "hpl", "p": 0.5, "l": 0.5}             (also "r3"; optional xi_base, t_frac, n_max)
    {"kind": "free"}
    {"kind": "string", "coef": 1, "exponent": 1, "atoms": [[x, m], ...]}   (alias "from_string")
    {"kind": "sl", "p": 1, "q": 0, "w": 1, "xi": 0, "a": 0}                 (alias "from_sl")
    {"kind": "prescribed_angle", "f": 0, "f_prime": 0, "g": {...}, "a": 0, "b": 1, "c": 0}
    {"kind": "zoo", "name": "powerlog"}

SL coefficients and the prescribed-angle functions f, f_prime, g are a number, {"kind": "power", "coef": c, "exponent": k}
(c t^k) or {"kind": "polynomial", "coefs": [c0, c1, ...]}.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from .errors import ConfigError
from .hamiltonian_core import HamiltonianModel, constant, diagonal, identity, table
from .model_zoo import (HplParams, PowerLogParams, PrescribedAngleSpec, ZOO_NAMES, make_hpl,
                        make_powerlog, make_prescribed_angle, make_r3_variant)
from .numerics import log_grid
from .strings_sl import (KreinString, SLProblem, free_schrodinger, sl_to_hamiltonian,
                         string_to_hamiltonian, uniform_string)


def _require(spec: dict, key: str, where: str) -> Any:
    if key not in spec:
        raise ConfigError(f"{where}: missing key '{key}'")
    return spec[key]


def _number(spec: dict, key: str, where: str, default: Any = None) -> float:
    val = spec.get(key, default) if default is not None else _require(spec, key, where)
    try:
        return float(val)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: key '{key}' must be a number, got {val!r}") from None


def _check_keys(spec: dict, allowed: set[str], where: str) -> None:
    extra = set(spec) - allowed - {"kind", "name"}
    if extra:
        raise ConfigError(f"{where}: unknown key '{sorted(extra)[0]}'")


def coefficient(spec: Any, where: str) -> Callable[[float], float]:
    if isinstance(spec, (int, float)):
        val = float(spec)
        return lambda t: val
    if not isinstance(spec, dict):
        raise ConfigError(f"{where}: coefficient must be a number or an object")
    kind = _require(spec, "kind", where)
    if kind == "power":
        c, k = _number(spec, "coef", where), _number(spec, "exponent", where)
        return lambda t: c * t ** k
    if kind == "polynomial":
        coefs = [float(x) for x in _require(spec, "coefs", where)]
        return lambda t: sum(c * t ** i for i, c in enumerate(coefs))
    raise ConfigError(f"{where}: unknown coefficient kind '{kind}'")


def zoo_model(name: str) -> HamiltonianModel:
    """The fixed example models used by the acceptance suite."""
    if name == "identity":
        return identity()
    if name == "diag41":
        return diagonal(4.0, 1.0)
    if name == "powerlog":
        return make_powerlog(PowerLogParams(2.0, 1.0, 3.0))
    if name == "hpl":
        return make_hpl(HplParams(0.5, 0.5))
    if name == "hpl_13_23":
        return make_hpl(HplParams(1.0 / 3.0, 2.0 / 3.0))
    if name == "r3":
        return make_r3_variant(HplParams(0.25, 0.6, variant="r3"))
    if name == "free":
        return free_schrodinger()
    if name == "string":
        return string_to_hamiltonian(uniform_string())
    raise ConfigError(f"unknown zoo model '{name}' (choose from {', '.join(ZOO_NAMES)})")


def build_string(spec: dict, where: str = "string") -> KreinString:
    _check_keys(spec, {"coef", "exponent", "atoms"}, where)
    atoms = spec.get("atoms", [])
    try:
        atoms = tuple((float(x), float(m)) for x, m in atoms)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: key 'atoms' must be a list of [position, mass] pairs") from None
    return KreinString(_number(spec, "coef", where, 1.0), _number(spec, "exponent", where, 1.0),
                       atoms, name=spec.get("name", "string"))


def build_sl(spec: dict, where: str = "sl") -> SLProblem:
    _check_keys(spec, {"p", "q", "w", "xi", "a"}, where)
    return SLProblem(coefficient(spec.get("p", 1.0), f"{where}.p"),
                     coefficient(spec.get("q", 0.0), f"{where}.q"),
                     coefficient(spec.get("w", 1.0), f"{where}.w"),
                     _number(spec, "a", where, 0.0), math.inf, _number(spec, "xi", where, 0.0),
                     name=spec.get("name", "sturm-liouville"), spec=dict(spec))


def build_model(spec: dict, where: str = "model") -> HamiltonianModel:
    if not isinstance(spec, dict):
        raise ConfigError(f"{where}: model spec must be an object")
    kind = _require(spec, "kind", where)
    if kind == "identity":
        _check_keys(spec, set(), where)
        return identity()
    if kind == "constant":
        _check_keys(spec, {"h", "a"}, where)
        h = _require(spec, "h", where)
        if not isinstance(h, list) or len(h) != 3:
            raise ConfigError(f"{where}: key 'h' must be [h1, h2, h3]")
        return constant(*(float(x) for x in h), a=_number(spec, "a", where, 0.0))
    if kind == "diagonal":
        _check_keys(spec, {"h1", "h2", "a"}, where)
        return diagonal(_number(spec, "h1", where), _number(spec, "h2", where),
                        _number(spec, "a", where, 0.0))
    if kind == "table":
        _check_keys(spec, {"rows"}, where)
        rows = _require(spec, "rows", where)
        if not isinstance(rows, list) or not all(isinstance(r, list) and len(r) == 4 for r in rows):
            raise ConfigError(f"{where}: key 'rows' must be a list of [t, h1, h2, h3]")
        return table(rows, name=spec.get("name", "table"))
    if kind == "powerlog":
        _check_keys(spec, {"alpha", "beta1", "beta2", "t_max"}, where)
        params = PowerLogParams(_number(spec, "alpha", where), _number(spec, "beta1", where),
                                _number(spec, "beta2", where), _number(spec, "t_max", where, 0.5))
        return make_powerlog(params)
    if kind in ("hpl", "r3"):
        _check_keys(spec, {"p", "l", "xi_base", "t_frac", "n_max"}, where)
        params = HplParams(_number(spec, "p", where), _number(spec, "l", where),
                           _number(spec, "xi_base", where, 0.25), _number(spec, "t_frac", where, 0.5),
                           int(spec.get("n_max", 14)), kind)
        return make_hpl(params) if kind == "hpl" else make_r3_variant(params)
    if kind == "free":
        _check_keys(spec, set(), where)
        return free_schrodinger()
    if kind in ("string", "from_string"):
        return string_to_hamiltonian(build_string(spec, where))
    if kind in ("sl", "from_sl"):
        return sl_to_hamiltonian(build_sl(spec, where))
    if kind == "prescribed_angle":
        _check_keys(spec, {"f", "f_prime", "g", "a", "b", "c"}, where)
        pa = PrescribedAngleSpec(coefficient(spec.get("f", 0.0), f"{where}.f"),
                                 coefficient(spec.get("f_prime", 0.0), f"{where}.f_prime"),
                                 coefficient(_require(spec, "g", where), f"{where}.g"),
                                 _number(spec, "a", where, 0.0), _number(spec, "b", where, 1.0),
                                 _number(spec, "c", where, 0.0), name=spec.get("name", "prescribed_angle"))
        return make_prescribed_angle(pa)
    if kind == "zoo":
        _check_keys(spec, set(), where)
        return zoo_model(_require(spec, "name", where))
    raise ConfigError(f"{where}: unknown model kind '{kind}'")


@dataclass
class RunConfig:
    command: str
    model: dict | None = None
    r_min: float = 1e-2
    r_max: float = 1e2
    per_decade: int = 8
    eta: float = 2.0
    theta: float = math.pi / 2
    k: float = 2.0
    tol: float = 1e-10
    tol_factor: float = 1e-4
    exponent: float = 1.0
    output: str | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (0 < self.r_min <= self.r_max):
            raise ConfigError("r_grid: need 0 < min <= max")
        if self.per_decade < 1:
            raise ConfigError("r_grid: per_decade must be a positive integer")
        for key in ("eta", "tol", "tol_factor", "k"):
            if not getattr(self, key) > 0:
                raise ConfigError(f"key '{key}' must be positive")
        if not 0 < self.theta < math.pi:
            raise ConfigError("key 'theta' must lie in (0, pi)")

    @property
    def r_grid(self) -> list[float]:
        return log_grid(self.r_min, self.r_max, self.per_decade)


_CONFIG_KEYS = {"command", "model", "r_grid", "eta", "theta", "k", "tol", "tol_factor",
                "exponent", "output", "extra"}


def parse_config(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"config: unknown key '{sorted(unknown)[0]}'")
    grid = data.get("r_grid", {})
    if not isinstance(grid, dict):
        raise ConfigError("config: key 'r_grid' must be an object")
    kwargs: dict[str, Any] = {"command": data.get("command", "")}
    if "model" in data:
        kwargs["model"] = data["model"]
    for key, src in (("r_min", "min"), ("r_max", "max")):
        if src in grid:
            kwargs[key] = _number(grid, src, "r_grid")
    if "per_decade" in grid:
        kwargs["per_decade"] = int(_number(grid, "per_decade", "r_grid"))
    for key in ("eta", "theta", "k", "tol", "tol_factor", "exponent"):
        if key in data:
            kwargs[key] = _number(data, key, "config")
    if "output" in data:
        kwargs["output"] = str(data["output"])
    if "extra" in data:
        kwargs["extra"] = dict(data["extra"])
    return RunConfig(**kwargs)


def load_json(path: str | Path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
