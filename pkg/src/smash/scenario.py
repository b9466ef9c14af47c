"""Scenario files: JSON schema, loading into agent configs, and running them."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import jsonschema

from .acting import Refinement
from .env.bus import Bus
from .env.devices import Device, make_device
from .env.environment import Environment
from .goals import GoalActivationRule
from .logic import LogicError, Term, normalize_name, parse_atom
from .planning import ActionModel, GoalCondition, SearchLimits
from .runtime import AgentConfig, CycleTrace, TraceSink, run_agents
from .values import ImpactRule, ImportanceOrder, ValueOrderingRule

_RULE = {
    "type": "object",
    "required": ["condition", "body"],
    "properties": {"condition": {"type": "string"}, "body": {"type": "array", "items": {"type": "string"}}},
    "additionalProperties": False,
}


def _impact(target: str) -> dict:
    return {
        "type": "object",
        "required": ["condition", "body"],
        "properties": {
            "condition": {"type": "string"},
            "body": {
                "type": "object",
                "required": [target, "impact", "value"],
                "properties": {
                    target: {"type": "string"},
                    "impact": {"enum": [-1, 0, 1]},
                    "value": {"type": "string"},
                },
                "additionalProperties": False,
            },
        },
        "additionalProperties": False,
    }


_STRINGS = {"type": "array", "items": {"type": "string"}}

AGENT_SECTIONS = {
    "values": {
        "type": "object",
        "required": ["iv_d"],
        "properties": {
            "iv_d": {"type": "array", "items": {"type": "array", "items": {"type": "string"}, "minItems": 1}},
            "vo": {"type": "array", "items": _RULE},
        },
        "additionalProperties": False,
    },
    "goals": {
        "type": "object",
        "properties": {
            "ga": {"type": "array", "items": _RULE},
            "gi": {"type": "array", "items": _impact("goal")},
            "goal_conditions": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["goal", "condition"],
                    "properties": {"goal": {"type": "string"}, "condition": {"type": "string"}},
                    "additionalProperties": False,
                },
            },
            "user_first": {"type": "boolean"},
        },
        "additionalProperties": False,
    },
    "planning": {
        "type": "object",
        "properties": {
            "kw": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["action"],
                    "properties": {
                        "action": {"type": "string"},
                        "condition": {"type": "string"},
                        "add": _STRINGS,
                        "delete": _STRINGS,
                    },
                    "additionalProperties": False,
                },
            },
            "ai": {"type": "array", "items": _impact("action")},
            "max_nodes": {"type": "integer", "minimum": 1},
            "max_seconds": {"type": "number", "exclusiveMinimum": 0},
        },
        "additionalProperties": False,
    },
    "acting": {
        "type": "object",
        "properties": {
            "kh": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["action", "body"],
                    "properties": {
                        "action": {"type": "string"},
                        "condition": {"type": "string"},
                        "body": {
                            "type": "array",
                            "items": {
                                "oneOf": [
                                    {"type": "string"},
                                    {
                                        "type": "object",
                                        "minProperties": 1,
                                        "maxProperties": 1,
                                        "properties": {"command": {"type": "string"}, "action": {"type": "string"}},
                                        "additionalProperties": False,
                                    },
                                ]
                            },
                        },
                    },
                    "additionalProperties": False,
                },
            },
            "ci": {"type": "array", "items": _impact("command")},
            "command_timeout": {"type": "number", "exclusiveMinimum": 0},
        },
        "additionalProperties": False,
    },
    "beliefs": _STRINGS,
    "constants": _STRINGS,
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "smash scenario",
    "type": "object",
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        **AGENT_SECTIONS,
        "agents": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id"],
                "properties": {
                    **AGENT_SECTIONS,
                    "id": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
                    # devices this agent owns; defaults to all
                    "devices": _STRINGS,
                },
                "additionalProperties": False,
            },
        },
        "devices": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id"],
                "properties": {
                    "id": {"type": "string", "pattern": "^[A-Za-z0-9_-]+$"},
                    "type": {"enum": ["tv", "phone", "pc", "sofa"]},
                    "initial": {"type": "object"},
                    "profiles": {"type": "object", "additionalProperties": {"type": "number"}},
                    "tolerance": {"type": "number", "minimum": 0},
                    "vacancy_threshold": {"type": "number", "minimum": 0},
                    "noise": {"type": "number", "minimum": 0},
                },
                "additionalProperties": False,
            },
        },
        "events": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["at"],
                "properties": {
                    "at": {"type": "number"},
                    "agent": {"type": "string"},
                    "user_goal": {"oneOf": [{"type": "string"}, _STRINGS]},
                    "belief": {"oneOf": [{"type": "string"}, _STRINGS]},
                    "device": {"type": "string"},
                    "trigger": {"type": "string"},
                    "args": {"type": "array"},
                    "fault": {"enum": ["device_error", "silent"]},
                    "op": {"type": "string"},
                    "times": {"type": "integer", "minimum": 1},
                },
                "oneOf": [
                    {"required": ["user_goal"]},
                    {"required": ["belief"]},
                    {"required": ["device", "trigger"]},
                    {"required": ["device", "fault"]},
                ],
                "additionalProperties": False,
            },
        },
        "expect": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["device", "property", "to"],
                "properties": {
                    "device": {"type": "string"},
                    "property": {"type": "string"},
                    "from": {"type": ["string", "number", "null"]},
                    "to": {"type": ["string", "number", "null"]},
                    "note": {"type": "string"},
                },
                "additionalProperties": False,
            },
        },
    },
    "additionalProperties": False,
}


class ScenarioError(ValueError):
    """The file is missing, is not JSON, violates the schema, or has unresolved references."""


@dataclass
class Scenario:
    name: str
    agents: list[AgentConfig]
    device_specs: list[dict]
    events: list[dict]
    expect: list[dict] = field(default_factory=list)
    raw: dict = field(default_factory=dict, repr=False)

    def devices(self, seed: int = 0) -> list[Device]:
        return [make_device(spec, seed) for spec in self.device_specs]

    def with_strategy(self, strategy: str) -> "Scenario":
        return replace(self, agents=[replace(a, strategy=strategy).validate() for a in self.agents])


def _agent(section: Mapping[str, Any], known_devices: set[str]) -> AgentConfig:
    values = section.get("values", {"iv_d": []})
    goals = section.get("goals", {})
    plan = section.get("planning", {})
    act = section.get("acting", {})
    devices = tuple(normalize_name(d) for d in section.get("devices", sorted(known_devices)))
    unknown = sorted(set(devices) - known_devices)
    if unknown:
        raise ScenarioError(f"agent {section.get('id')}: unknown device(s) {unknown}")
    limits = SearchLimits(plan.get("max_nodes", SearchLimits.max_nodes), plan.get("max_seconds", SearchLimits.max_seconds))
    config = AgentConfig(
        id=section.get("id", "smash"),
        iv_d=ImportanceOrder.of(values["iv_d"]),
        vo=tuple(ValueOrderingRule.parse(r["condition"], r["body"]) for r in values.get("vo", [])),
        ga=tuple(GoalActivationRule.parse(r["condition"], r["body"]) for r in goals.get("ga", [])),
        gi=tuple(
            ImpactRule.parse(r["condition"], r["body"]["goal"], r["body"]["impact"], r["body"]["value"])
            for r in goals.get("gi", [])
        ),
        kw=tuple(
            ActionModel.parse(m["action"], m.get("condition"), m.get("add", []), m.get("delete", []))
            for m in plan.get("kw", [])
        ),
        ai=tuple(
            ImpactRule.parse(r["condition"], r["body"]["action"], r["body"]["impact"], r["body"]["value"])
            for r in plan.get("ai", [])
        ),
        kh=tuple(Refinement.parse(r["action"], r.get("condition"), r["body"]) for r in act.get("kh", [])),
        ci=tuple(
            ImpactRule.parse(r["condition"], r["body"]["command"], r["body"]["impact"], r["body"]["value"])
            for r in act.get("ci", [])
        ),
        goal_conditions=tuple(GoalCondition.parse(g["goal"], g["condition"]) for g in goals.get("goal_conditions", [])),
        beliefs=tuple(parse_atom(b, ground=True) for b in section.get("beliefs", [])),
        constants=tuple(Term(normalize_name(c)) for c in section.get("constants", [])),
        devices=devices,
        limits=limits,
        user_first=goals.get("user_first", True),
        command_timeout=act.get("command_timeout", 2.0),
    )
    return config.validate()


def parse_scenario(data: Any) -> Scenario:
    try:
        jsonschema.validate(data, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(map(str, exc.absolute_path)) or "<root>"
        raise ScenarioError(f"schema violation at {where}: {exc.message}") from None
    specs = data.get("devices", [])
    known = {normalize_name(s["id"]) for s in specs}
    if len(known) != len(specs):
        raise ScenarioError("duplicate device ids")
    top = {k: v for k, v in data.items() if k in AGENT_SECTIONS}
    if "agents" in data and top:
        raise ScenarioError(f"put agent sections inside 'agents' when it is used: {sorted(top)}")
    try:
        agents = [_agent(a, known) for a in data["agents"]] if "agents" in data else [_agent(top, known)]
    except (LogicError, ValueError) as exc:
        raise ScenarioError(str(exc)) from None
    ids = {a.id for a in agents}
    for i, ev in enumerate(data.get("events", [])):
        if "device" in ev and normalize_name(ev["device"]) not in known:
            raise ScenarioError(f"event {i}: unknown device {ev['device']!r}")
        if "agent" in ev and ev["agent"] not in ids:
            raise ScenarioError(f"event {i}: unknown agent {ev['agent']!r}")
    events = [dict(ev, device=normalize_name(ev["device"])) if "device" in ev else dict(ev) for ev in data.get("events", [])]
    expect = [dict(e, device=normalize_name(e["device"])) for e in data.get("expect", [])]
    return Scenario(data.get("name", "scenario"), agents, specs, events, expect, data)


def load_scenario(path: str | Path) -> Scenario:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_scenario(data)


def bundled(name: str = "smash_poc") -> Path:
    return Path(str(resources.files("smash") / "data" / f"{name}.json"))


@dataclass
class RunResult:
    traces: list[CycleTrace]
    transitions: dict[str, list[dict]]
    agents: list


def run_scenario(
    scenario: Scenario,
    sink: TraceSink | None = None,
    pddl_out: str | None = None,
    seed: int = 0,
    tcp_port: int | None = None,
) -> RunResult:
    """Run every event of ``scenario``; with ``tcp_port`` the agents reach the bus over TCP."""
    bus = Bus()
    env = Environment(bus, scenario.devices(seed))
    server = client = None
    agent_bus = bus
    if tcp_port is not None:
        from .env.tcp import BusClient, BusServer

        server = BusServer(bus, port=tcp_port).start()
        client = BusClient("127.0.0.1", server.port)
        agent_bus = client
    try:
        agents: list = []
        traces = run_agents(scenario.agents, env, scenario.events, sink, pddl_out, agent_bus, agents)
    finally:
        if client is not None:
            client.close()
        if server is not None:
            server.stop()
    return RunResult(traces, {a.id: a.transitions for a in agents}, agents)
