"""Run configuration: JSON schema, parsing, and normalization."""

from __future__ import annotations

import json
from dataclasses import dataclass

import jsonschema

from .distributions import ScalarDistribution, from_config
from .errors import ConfigInvalid, OrderOverflow
from .moment_dynamics import DynamicsSpec
from .steering_engine import SteeringProblem

_DISTRIBUTION_SCHEMA = {
    "oneOf": [
        {
            "type": "object",
            "properties": {
                "kind": {"const": "gaussian"},
                "mean": {"type": "number"},
                "var": {"type": "number", "exclusiveMinimum": 0},
            },
            "required": ["kind", "mean", "var"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "kind": {"const": "uniform"},
                "lo": {"type": "number"},
                "hi": {"type": "number"},
            },
            "required": ["kind", "lo", "hi"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "kind": {"const": "laplace"},
                "loc": {"type": "number"},
                "scale": {"type": "number", "exclusiveMinimum": 0},
            },
            "required": ["kind", "loc", "scale"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "kind": {"const": "gen_logistic1"},
                "loc": {"type": "number"},
                "shape": {"type": "number", "exclusiveMinimum": 0},
            },
            "required": ["kind", "loc", "shape"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "kind": {"const": "cauchy"},
                "loc": {"type": "number"},
                "scale": {"type": "number", "exclusiveMinimum": 0},
            },
            "required": ["kind", "loc", "scale"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "kind": {"const": "mixture"},
                "weights": {
                    "type": "array",
                    "items": {"type": "number", "minimum": 0},
                    "minItems": 1,
                },
                "components": {
                    "type": "array",
                    "items": {"$ref": "#/$defs/distribution"},
                    "minItems": 1,
                },
            },
            "required": ["kind", "weights", "components"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "kind": {"const": "atomic"},
                "points": {"type": "array", "items": {"type": "number"}, "minItems": 1},
                "probs": {"type": "array", "items": {"type": "number", "minimum": 0},
                          "minItems": 1},
            },
            "required": ["kind", "points", "probs"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "kind": {"const": "grid"},
                "grid": {"type": "array", "items": {"type": "number"}, "minItems": 2},
                "values": {"type": "array", "items": {"type": "number", "minimum": 0},
                           "minItems": 2},
            },
            "required": ["kind", "grid", "values"],
            "additionalProperties": False,
        },
    ]
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "momentsteer run configuration",
    "type": "object",
    "properties": {
        "horizon": {"type": "integer", "minimum": 1},
        "half_order": {"type": "integer", "minimum": 1},
        "dynamics": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["linear", "monomial", "polynomial"]},
                "degree": {"type": "integer", "minimum": 1},
                "coeffs": {"type": "array", "items": {"type": "number"},
                           "minItems": 2},
                "param": {
                    "oneOf": [
                        {"$ref": "#/$defs/distribution"},
                        {"type": "array", "items": {"$ref": "#/$defs/distribution"},
                         "minItems": 1},
                    ]
                },
            },
            "required": ["kind", "param"],
            "additionalProperties": False,
        },
        "initial": {"$ref": "#/$defs/distribution"},
        "target": {"$ref": "#/$defs/distribution"},
        "agents": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "heavy_tail_prior": {"type": "boolean"},
        "output_dir": {"type": "string"},
        "emit": {
            "type": "object",
            "properties": {
                "trajectory": {"type": "boolean"},
                "densities": {"type": "boolean"},
                "histograms": {"type": "boolean"},
                "diagnostics": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
        "reference": {
            "type": "object",
            "properties": {
                "gains": {"type": "array", "items": {"type": "number"}},
                "gain_tol": {"type": "number", "exclusiveMinimum": 0},
                "atomic_step": {"type": "integer", "minimum": 0},
                "points": {"type": "array", "items": {"type": "number"}},
                "probs": {"type": "array", "items": {"type": "number"}},
                "point_tol": {"type": "number", "exclusiveMinimum": 0},
                "prob_tol": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
    },
    "required": ["horizon", "half_order", "dynamics", "initial", "target"],
    "additionalProperties": False,
    "$defs": {"distribution": _DISTRIBUTION_SCHEMA},
}

_DEFAULTS = {
    "agents": 2000,
    "seed": 0,
    "heavy_tail_prior": False,
    "output_dir": "out",
    "emit": {"trajectory": True, "densities": True, "histograms": True,
             "diagnostics": True},
}


@dataclass(frozen=True)
class RunConfig:
    problem: SteeringProblem
    output_dir: str
    emit: dict
    reference: dict | None
    normalized: dict


def _dynamics_from_config(cfg: dict) -> DynamicsSpec:
    param_cfg = cfg["param"]
    if isinstance(param_cfg, list):
        param: ScalarDistribution | tuple = tuple(from_config(p) for p in param_cfg)
    else:
        param = from_config(param_cfg)
    kind = cfg["kind"]
    if kind == "linear":
        return DynamicsSpec.linear(param)
    if kind == "monomial":
        if "degree" not in cfg:
            raise ConfigInvalid("monomial dynamics require a degree")
        return DynamicsSpec.monomial(cfg["degree"], param)
    if "coeffs" not in cfg:
        raise ConfigInvalid("polynomial dynamics require coeffs")
    return DynamicsSpec.polynomial(tuple(cfg["coeffs"]), param)


def normalize_config(raw: dict) -> dict:
    """Validated configuration with defaults applied, ready for stable dumps."""
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigInvalid(f"config failed schema validation: {exc.message}") from exc
    out = json.loads(json.dumps(raw))  # deep copy, JSON types only
    for key, default in _DEFAULTS.items():
        if key == "emit":
            emit = dict(default)
            emit.update(out.get("emit", {}))
            out["emit"] = emit
        else:
            out.setdefault(key, default)
    return out


def parse_config(raw: dict, seed: int | None = None,
                 agents: int | None = None,
                 output_dir: str | None = None) -> RunConfig:
    """Build a RunConfig from a raw JSON object plus CLI overrides."""
    cfg = normalize_config(raw)
    if seed is not None:
        cfg["seed"] = seed
    if agents is not None:
        cfg["agents"] = agents
    if output_dir is not None:
        cfg["output_dir"] = output_dir

    dynamics = _dynamics_from_config(cfg["dynamics"])
    if isinstance(dynamics.param, tuple) and len(dynamics.param) != cfg["horizon"]:
        raise ConfigInvalid(
            f"per-step param list has {len(dynamics.param)} entries "
            f"for horizon {cfg['horizon']}"
        )
    try:
        problem = SteeringProblem(
            horizon=cfg["horizon"],
            half_order=cfg["half_order"],
            dynamics=dynamics,
            initial=from_config(cfg["initial"]),
            target=from_config(cfg["target"]),
            n_agents=cfg["agents"],
            seed=cfg["seed"],
            heavy_tail_prior=cfg["heavy_tail_prior"],
        )
    except (ValueError, KeyError, OrderOverflow) as exc:
        raise ConfigInvalid(str(exc)) from exc
    return RunConfig(
        problem=problem,
        output_dir=cfg["output_dir"],
        emit=cfg["emit"],
        reference=cfg.get("reference"),
        normalized=cfg,
    )


def dump_config(cfg: dict) -> str:
    """Canonical serialization: sorted keys, two-space indent, trailing newline."""
    return json.dumps(cfg, indent=2, sort_keys=True) + "\n"
