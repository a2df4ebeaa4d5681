"""Run configuration: JSON file with a versioned schema tag, unknown keys rejected."""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import jsonschema

from .eos import FluidModel, evaluate
from .errors import ConfigError, DissipLabError
from .matrices import StateVector

SCHEMA_TAG = "dissiplab.config/1"
CASES = ("viscous", "inviscid", "both")

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_TRANSPORT = {
    "oneOf": [
        {"type": "number"},
        {
            "type": "object",
            "properties": {"coeff": _NUM, "rho_exp": _NUM, "theta_exp": _NUM},
            "required": ["coeff"],
            "additionalProperties": False,
        },
    ]
}

CONFIG_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["schema", "model", "state"],
    "additionalProperties": False,
    "properties": {
        "schema": {"const": SCHEMA_TAG},
        "model": {
            "type": "object",
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["ideal_gas", "power_law"]},
                "R": _NUM, "gamma": _NUM,
                "A": _NUM, "alpha": _NUM, "beta": _NUM, "cv": _NUM,
                "kappa": _TRANSPORT, "nu": _TRANSPORT, "tau": _NUM,
            },
        },
        "state": {
            "type": "object",
            "required": ["rho", "u", "theta"],
            "additionalProperties": False,
            "properties": {"rho": _NUM, "u": _NUM, "theta": _NUM, "q": _NUM},
        },
        "case": {"enum": list(CASES)},
        "hypotheses": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "rho_range": {"type": "array", "items": _POS, "minItems": 2, "maxItems": 2},
                "theta_range": {"type": "array", "items": _POS, "minItems": 2, "maxItems": 2},
                "n_samples": {"type": "integer", "minimum": 1},
            },
        },
        "xi_grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "xi_min": _POS, "xi_max": _POS,
                "n": {"type": "integer", "minimum": 2},
                "spacing": {"enum": ["log", "linear"]},
            },
        },
        "decay": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "t_max": _POS,
                "n_t": {"type": "integer", "minimum": 3},
                "l_list": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
                "xi_cut": {"oneOf": [_POS, {"type": "null"}]},
                "n_xi": {"type": "integer", "minimum": 3},
                "width": _POS,
                "amplitude": {"type": "array", "items": _NUM, "minItems": 4, "maxItems": 4},
                "dt": _POS,
                "t_check": _POS,
                "lattice_n": {"type": "integer", "minimum": 2},
            },
        },
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "coupling": _POS,
                "speed_agreement": _POS,
                "energy_residual": _POS,
            },
        },
        "seed": {"type": "integer"},
        "output_dir": {"type": "string"},
    },
}

DEFAULTS: dict[str, Any] = {
    "case": "both",
    "hypotheses": {"rho_range": [0.1, 10.0], "theta_range": [0.1, 10.0], "n_samples": 100},
    "xi_grid": {"xi_min": 1e-3, "xi_max": 1e3, "n": 200, "spacing": "log"},
    "decay": {
        "t_max": 1000.0, "n_t": 81, "l_list": [0, 1], "xi_cut": None, "n_xi": 16385,
        "width": 1.0, "amplitude": [1.0, 0.0, 0.0, 0.0], "dt": 1e-3, "t_check": 10.0, "lattice_n": 50,
    },
    "tolerances": {"coupling": 1e-8, "speed_agreement": 1e-9, "energy_residual": 1e-5},
    "seed": 0,
    "output_dir": "dissiplab_out",
}


@dataclass(frozen=True)
class RunConfig:
    model: FluidModel
    state: StateVector
    case: str = "both"
    hypotheses: dict[str, Any] = field(default_factory=lambda: copy.deepcopy(DEFAULTS["hypotheses"]))
    xi_grid: dict[str, Any] = field(default_factory=lambda: copy.deepcopy(DEFAULTS["xi_grid"]))
    decay: dict[str, Any] = field(default_factory=lambda: copy.deepcopy(DEFAULTS["decay"]))
    tolerances: dict[str, float] = field(default_factory=lambda: dict(DEFAULTS["tolerances"]))
    seed: int = 0
    output_dir: str = "dissiplab_out"

    def __post_init__(self) -> None:
        if self.case not in CASES:
            raise ConfigError(f"case must be one of {CASES}, got {self.case!r}")
        nu = evaluate(self.model, self.state.rho, self.state.theta).nu
        if self.case in ("viscous", "both") and not nu > 0:
            raise ConfigError(f"case={self.case} needs nu > 0 at the state, got nu = {nu}")
        if self.case == "inviscid" and nu != 0:
            raise ConfigError(f"case=inviscid needs nu = 0, got nu = {nu}")

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "RunConfig":
        try:
            jsonschema.validate(dict(raw), CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigError(f"config invalid at {where}: {exc.message}") from None
        merged = _merge(DEFAULTS, raw)
        try:
            model = FluidModel.from_dict(merged["model"])
            st = merged["state"]
            state = StateVector(st["rho"], st["u"], st["theta"], st.get("q", 0.0))
        except DissipLabError as exc:
            raise ConfigError(str(exc)) from None
        return cls(model, state, merged["case"], merged["hypotheses"], merged["xi_grid"], merged["decay"],
                   merged["tolerances"], int(merged["seed"]), merged["output_dir"])

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema": SCHEMA_TAG,
            "model": self.model.to_dict(),
            "state": self.state.to_dict(),
            "case": self.case,
            "hypotheses": copy.deepcopy(self.hypotheses),
            "xi_grid": copy.deepcopy(self.xi_grid),
            "decay": copy.deepcopy(self.decay),
            "tolerances": dict(self.tolerances),
            "seed": self.seed,
            "output_dir": self.output_dir,
        }

    def computational_dict(self) -> dict[str, Any]:
        """Everything that affects results (the output location does not)."""
        out = self.to_dict()
        del out["output_dir"]
        return out

    def sha256(self) -> str:
        blob = json.dumps(self.computational_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def with_overrides(self, case: str | None = None, seed: int | None = None, t_max: float | None = None,
                       output_dir: str | None = None) -> "RunConfig":
        raw = self.to_dict()
        if case is not None:
            raw["case"] = case
        if seed is not None:
            raw["seed"] = seed
        if t_max is not None:
            raw["decay"]["t_max"] = t_max
        if output_dir is not None:
            raw["output_dir"] = output_dir
        return RunConfig.from_dict(raw)

    def case_models(self) -> dict[str, FluidModel]:
        """The model for each case to run; 'both' pairs the configured fluid with its nu = 0 copy."""
        if self.case == "both":
            return {"viscous": self.model, "inviscid": self.model.with_nu(0.0)}
        return {self.case: self.model}


def _merge(base: Mapping[str, Any], over: Mapping[str, Any]) -> dict[str, Any]:
    out = copy.deepcopy(dict(base))
    for k, v in over.items():
        if isinstance(v, Mapping) and isinstance(out.get(k), Mapping) and k not in ("model", "state"):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def bundled_configs() -> list[str]:
    return sorted(p.name for p in resources.files("dissiplab").joinpath("configs").iterdir()
                  if p.name.endswith(".json"))


def resolve_config_path(path: str | Path) -> Path:
    """A filesystem path, or the bare name of a bundled config."""
    p = Path(path)
    if p.exists():
        return p
    if p.name == str(path) and p.name in bundled_configs():
        return Path(str(resources.files("dissiplab").joinpath("configs", p.name)))
    raise ConfigError(f"config file not found: {path}")


def load_config(path: str | Path) -> RunConfig:
    p = resolve_config_path(path)
    try:
        raw = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: not valid JSON ({exc})") from None
    except OSError as exc:
        raise ConfigError(f"{p}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{p}: top level must be an object")
    return RunConfig.from_dict(raw)
