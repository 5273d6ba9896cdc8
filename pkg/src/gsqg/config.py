"""Run configuration: defaults, TOML/JSON files, CLI overrides, validation and hashing.

Precedence, lowest first: built-in defaults, the config file, command-line
flags.  Sections are plain dicts so that files map one-to-one onto them.
"""
from __future__ import annotations

import copy
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass, field

from .errors import ParameterError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

MODES = ("simulate", "certify", "certify-eventual", "ladder", "diagnose", "decay-fit")

DEFAULTS = {
    "mode": "simulate",
    "solver": {"alpha": 0.5, "beta": 1.5, "nu": 1.0, "epsilon": 0.0, "dt": 1e-3,
               "t_end": 0.1, "cfl_safety": 0.5, "dealias_fraction": 2.0 / 3.0,
               "truncation_modes": None, "scheme": "rk2", "grad_ceiling": math.inf,
               "force_cfl": False},
    "grid": {"n": 64, "L": 2 * math.pi},
    "initial": {"profile": "random_smooth", "seed": 0},
    "moc": {},
    "constants": {},
    "certify": {},
    "ladder": {},
    "diagnostics": {"sample_every": 10},
    "output": {"dir": None},
    "seed": 0,
    "threads": 1,
}

SECTIONS = [k for k, v in DEFAULTS.items() if isinstance(v, dict)]


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k != "moc":
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def load_file(path) -> dict:
    if not os.path.exists(path):
        raise ParameterError(f"config file {path} does not exist")
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        if str(path).endswith(".json"):
            return json.loads(raw)
        return tomllib.loads(raw.decode())
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise ParameterError(f"cannot parse {path}: {exc}") from None


@dataclass
class RunConfig:
    mode: str = "simulate"
    solver: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    initial: dict = field(default_factory=dict)
    moc: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)
    certify: dict = field(default_factory=dict)
    ladder: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    seed: int = 0
    threads: int = 1

    @classmethod
    def build(cls, file=None, overrides: dict | None = None) -> "RunConfig":
        data = copy.deepcopy(DEFAULTS)
        if file is not None:
            data = _merge(data, load_file(file))
        if overrides:
            data = _merge(data, overrides)
        unknown = set(data) - set(DEFAULTS)
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return {k: copy.deepcopy(getattr(self, k)) for k in DEFAULTS}

    def canonical(self) -> dict:
        """Everything that influences results (output locations and threads excluded)."""
        d = self.to_dict()
        d.pop("output")
        d.pop("threads")
        return _jsonable(d)

    @property
    def hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    # builders
    def solver_params(self):
        from .evolution import SolverParams
        s = {k: v for k, v in self.solver.items() if k != "force_cfl"}
        try:
            return SolverParams(**s)
        except TypeError as exc:
            raise ParameterError(f"bad solver parameters: {exc}") from None

    def grid2d(self):
        from .spectral import Grid2D
        return Grid2D(int(self.grid["n"]), float(self.grid["L"]))

    def moc_object(self):
        from .moc import from_description
        return from_description(self.moc)

    def criterion_constants(self):
        from .certify import CriterionConstants
        c = {"alpha": self.solver["alpha"], "beta": self.solver["beta"],
             "nu": self.solver.get("nu", 1.0), "epsilon": self.solver.get("epsilon", 0.0)}
        c.update(self.constants)
        try:
            return CriterionConstants(**c)
        except TypeError as exc:
            raise ParameterError(f"bad criterion constants: {exc}") from None


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def regime(alpha, beta) -> str:
    if beta > alpha + 1:
        return "subcritical"
    if beta == alpha + 1:
        return "critical"
    return "supercritical"


def validate(config: RunConfig) -> dict:
    """Either ``{'regime': label}`` or ``{'violations': [...]}``, never both."""
    v = []
    if config.mode not in MODES:
        v.append(f"mode: must be one of {list(MODES)}")
    a = config.solver.get("alpha")
    b = config.solver.get("beta")
    if not isinstance(a, (int, float)) or not 0 < a < 1:
        v.append("alpha: must lie in ]0, 1[")
    if not isinstance(b, (int, float)) or not 0 < b <= 2:
        v.append("beta: must lie in ]0, 2]")
    if not v:
        if config.mode == "certify" and not b > a + 1:
            v.append(f"beta in ]alpha+1, 2]: {b} > {a + 1} fails")
        if config.mode == "certify-eventual" and not 2 * a < b <= a + 1:
            v.append(f"beta in ]2 alpha, alpha+1]: {b} in ]{2 * a}, {a + 1}] fails")
    s = config.solver
    for name, ok in (("nu", s.get("nu", 1) >= 0), ("epsilon", s.get("epsilon", 0) >= 0),
                     ("dt", s.get("dt", 1) > 0), ("t_end", s.get("t_end", 0) >= 0),
                     ("cfl_safety", 0 < s.get("cfl_safety", 0.5) <= 1),
                     ("dealias_fraction", 0 < s.get("dealias_fraction", 2 / 3) <= 1)):
        if not ok:
            v.append(f"{name}: out of range")
    n = config.grid.get("n", 64)
    if not isinstance(n, int) or n < 8 or n & (n - 1):
        v.append("grid.n: must be a power of two >= 8")
    path = config.moc.get("path") if config.moc else None
    if path is not None and not os.path.exists(path):
        v.append(f"moc.path: file {path} does not exist")
    if v:
        return {"violations": v}
    return {"regime": regime(a, b)}
