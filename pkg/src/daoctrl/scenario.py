"""Scenario files: JSON schema, loading, validation and the shipped paper scenario.

Agent numbers in files are 1-based and implied by list position.
"""
from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from typing import Any, Union

import jsonschema

from .control import ControllerParams, Regime
from .daoop import OperationParams
from .engine import ConfigError, Scenario, SimConfig
from .plant import AgentSpec
from .topology import Topology, TopologyError


class ScenarioError(Exception):
    exit_code = 2


class ScenarioNotFound(ScenarioError):
    exit_code = 7


class ScenarioParseError(ScenarioError):
    exit_code = 5


class ScenarioSchemaError(ScenarioError):
    exit_code = 6


class ScenarioInvariantError(ScenarioError):
    exit_code = 2


_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_interval = {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}
_seeds = {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1}

SCHEMA: dict[str, Any] = {
    "type": "object",
    "additionalProperties": False,
    "required": ["topology", "agents"],
    "properties": {
        "name": {"type": "string"},
        "topology": {
            "type": "object",
            "additionalProperties": False,
            "required": ["adjacency"],
            "properties": {
                "adjacency": {"type": "array", "minItems": 1,
                              "items": {"type": "array", "items": _num}},
            },
        },
        "agents": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["tau"],
                "properties": {
                    "tau": _pos,
                    "u_min": _num,
                    "u_max": _num,
                    "dynamics": {"type": "string"},
                    "objective": {"type": "string"},
                },
            },
        },
        "controller": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "regime": {"type": "string"},
                "alpha_fixed": _pos, "beta_fixed": _pos,
                "k1": _pos, "k2": _pos, "k3": _pos, "k4": _pos,
                "delta_override": {"anyOf": [_pos, {"type": "null"}]},
                "tau_scaled_consensus": {"type": "boolean"},
                "weight_clamp": _pos,
            },
        },
        "operation": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "phi": {"type": "integer", "minimum": 1},
                "psi": {"type": "number", "minimum": 0},
                "tau_o": _pos,
                "max_outer_iterations": {"type": "integer", "minimum": 1},
                "rng_seed": {"type": "integer", "minimum": 0},
                "seeds": _seeds,
            },
        },
        "sim": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "horizon": _pos,
                "base_dt": _pos,
                "epsilon_converge": _pos,
                "init_state_range": _interval,
                "init_control_range": _interval,
                "gradient_method": {"enum": ["auto", "analytic", "fd"]},
            },
        },
    },
}


def _path(error: jsonschema.ValidationError) -> str:
    return "$" + "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in error.absolute_path)


def scenario_from_dict(data: dict) -> Scenario:
    """Validate ``data`` against the schema and every invariant, then build."""
    errors = sorted(jsonschema.Draft202012Validator(SCHEMA).iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        raise ScenarioSchemaError("; ".join(f"{_path(e)}: {e.message}" for e in errors))

    problems = []
    try:
        topo = Topology(data["topology"]["adjacency"])
    except TopologyError as exc:
        raise ScenarioInvariantError(f"$.topology.adjacency: {exc}") from exc

    agents = []
    for k, entry in enumerate(data["agents"]):
        try:
            agents.append(AgentSpec(number=k + 1, **entry))
        except ValueError as exc:
            problems.append(f"$.agents[{k}]: {exc}")

    ctrl = dict(data.get("controller", {}))
    try:
        if "regime" in ctrl:
            ctrl["regime"] = Regime.parse(ctrl["regime"])
        controller = ControllerParams(**ctrl)
    except ValueError as exc:
        problems.append(f"$.controller: {exc}")

    op = dict(data.get("operation", {}))
    tau_o = op.pop("tau_o", 5.0)
    seeds = tuple(op.pop("seeds", (1,)))
    try:
        operation = OperationParams(**op)
    except ValueError as exc:
        problems.append(f"$.operation: {exc}")

    sim_data = dict(data.get("sim", {}))
    for key in ("init_state_range", "init_control_range"):
        if key in sim_data:
            sim_data[key] = tuple(sim_data[key])
    try:
        sim = SimConfig(tau_o=tau_o, seeds=seeds, **sim_data)
    except ConfigError as exc:
        problems.append(f"$.sim: {exc}")

    if problems:
        raise ScenarioInvariantError("; ".join(problems))
    for k, spec in enumerate(agents):
        try:
            sim.steps_for(spec.tau, f"agent {spec.number} tau")
        except ConfigError as exc:
            problems.append(f"$.agents[{k}].tau: {exc}")
    if problems:
        raise ScenarioInvariantError("; ".join(problems))
    try:
        return Scenario(topo, agents, controller, operation, sim)
    except ConfigError as exc:
        raise ScenarioInvariantError(str(exc)) from exc


def load_scenario(path: Union[str, Path]) -> Scenario:
    path = Path(path)
    if not path.is_file():
        raise ScenarioNotFound(f"scenario file not found: {path}")
    text = path.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ScenarioSchemaError("$: scenario must be a JSON object")
    return scenario_from_dict(data)


def paper_scenario_path() -> Path:
    return Path(str(resources.files("daoctrl") / "scenarios" / "paper.json"))


def paper_scenario() -> Scenario:
    """The shipped 10-agent experiment."""
    return load_scenario(paper_scenario_path())


def scenario_to_dict(s: Scenario) -> dict:
    c, o, sim = s.controller, s.operation, s.sim
    return {
        "topology": {"adjacency": s.topology.adjacency.tolist()},
        "agents": [{"tau": a.tau, "u_min": a.u_min, "u_max": a.u_max,
                    "dynamics": a.dynamics, "objective": a.objective} for a in s.agents],
        "controller": {"regime": c.regime.value, "alpha_fixed": c.alpha_fixed, "beta_fixed": c.beta_fixed,
                       "k1": c.k1, "k2": c.k2, "k3": c.k3, "k4": c.k4, "delta_override": c.delta_override,
                       "tau_scaled_consensus": c.tau_scaled_consensus, "weight_clamp": c.weight_clamp},
        "operation": {"phi": o.phi, "psi": o.psi, "tau_o": sim.tau_o,
                      "max_outer_iterations": o.max_outer_iterations, "rng_seed": o.rng_seed,
                      "seeds": list(sim.seeds)},
        "sim": {"horizon": sim.horizon, "base_dt": sim.base_dt, "epsilon_converge": sim.epsilon_converge,
                "init_state_range": list(sim.init_state_range),
                "init_control_range": list(sim.init_control_range),
                "gradient_method": sim.gradient_method},
    }
