"""Scenario files: a domain, a schedule, constants, a subsystem or netlist, and inputs.

Scenarios are JSON.  Inputs are change lists ``[[tick, value], ...]`` starting at
tick 0.  A scenario may also carry an ``expect`` block, which is how ``verify``
records the failure a counterexample scenario is supposed to reproduce.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import jsonschema

from . import netlist as nl
from .netlist import InvalidNetlist, Netlist, SimTrace, simulate, validate_netlist
from .subsystems import (
    PB_VALUES,
    TRIP_VALUES,
    PushbuttonConsts,
    SealedInConsts,
    Subsystem,
    pushbutton,
    trip_sealed_in,
)
from .tables import TableSpec
from .time_core import DomainError, SampleSchedule, TickDomain, from_changes
from .verifier import Counterexample

FORMAT_VERSION = 1

_UINT = {"type": "integer", "minimum": 0}
_POS = {"type": "integer", "minimum": 1}
_SCALAR = {"type": ["boolean", "integer", "string"]}

SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "fbcheck scenario",
    "type": "object",
    "additionalProperties": False,
    "required": ["domain", "schedule", "inputs"],
    "properties": {
        "format": {"const": FORMAT_VERSION},
        "description": {"type": "string"},
        "domain": {
            "type": "object",
            "additionalProperties": False,
            "required": ["horizon"],
            "properties": {"delta": _POS, "horizon": _UINT},
        },
        "schedule": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "samples": {"type": "array", "items": _UINT, "minItems": 1},
                "every": _POS,
                "gaps": {"type": "array", "items": _POS},
                "tmin": _POS,
                "tmax": _POS,
                "first_sample_zero": {"type": "boolean"},
            },
        },
        "constants": {"type": "object", "additionalProperties": _UINT},
        "subsystem": {"enum": ["trip-sealed-in", "pushbutton"]},
        "variant": {"enum": ["original", "revised"]},
        "netlist": {"type": ["string", "object"]},
        "inputs": {
            "type": "object",
            "additionalProperties": {
                "type": "array",
                "minItems": 1,
                "items": {"type": "array", "prefixItems": [_UINT, _SCALAR], "minItems": 2, "maxItems": 2},
            },
        },
        "expect": {
            "type": "object",
            "additionalProperties": False,
            "required": ["check", "tick"],
            "properties": {
                "check": {"enum": ["correctness", "consistency", "completeness", "disjointness", "conflict"]},
                "tick": _UINT,
                "signal": {"type": ["string", "null"]},
                "expected": {},
                "actual": {},
                "category": {"type": "string"},
            },
        },
    },
}

CONSTANTS = {
    "trip-sealed-in": SealedInConsts,
    "pushbutton": PushbuttonConsts,
}

INPUT_DOMAINS = {
    "trip-sealed-in": {"Any_parm_trip": (False, True), "Trip": TRIP_VALUES, "Man_reset_req": (False, True)},
    "pushbutton": {"m": PB_VALUES},
}


class ScenarioError(ValueError):
    """A scenario file that cannot be run; ``where`` names the line or field at fault."""

    def __init__(self, where: str, message: str):
        super().__init__(f"{where}: {message}")
        self.where = where
        self.message = message


@dataclass
class Scenario:
    domain: TickDomain
    schedule: SampleSchedule
    inputs: dict[str, tuple]
    netlist: Netlist
    subsystem: Subsystem | None = None
    variant: str | None = None
    constants: dict[str, int] = field(default_factory=dict)
    expect: dict | None = None
    description: str = ""


def preset_netlists() -> list[str]:
    root = resources.files("fbcheck") / "netlists"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_preset_netlist(name: str) -> Netlist:
    return nl.loads((resources.files("fbcheck") / "netlists" / f"{name}.json").read_text())


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ScenarioError(str(path), e.strerror or str(e)) from None
    return parse_scenario(text, base_dir=path.parent)


def parse_scenario(text: str, base_dir: str | Path = ".") -> Scenario:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"line {e.lineno} column {e.colno}", e.msg) from None
    return scenario_from_dict(doc, base_dir)


def _field(path) -> str:
    return ".".join(str(p) for p in path) or "<root>"


def validate_document(doc: Any) -> None:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: (len(e.path), list(map(str, e.path))))
    if errors:
        e = errors[0]
        raise ScenarioError(f"field {_field(e.path)}", e.message)


def scenario_from_dict(doc: Mapping[str, Any], base_dir: str | Path = ".") -> Scenario:
    validate_document(doc)
    has_sub, has_net = "subsystem" in doc, "netlist" in doc
    if has_sub == has_net:
        raise ScenarioError("field <root>", "give exactly one of 'subsystem' and 'netlist'")
    if has_net and "variant" in doc:
        raise ScenarioError("field variant", "only valid together with 'subsystem'")
    if has_net and doc.get("constants"):
        raise ScenarioError("field constants", "constants are only used with 'subsystem'")

    try:
        domain = TickDomain(doc["domain"].get("delta", 1), doc["domain"]["horizon"])
    except DomainError as e:
        raise ScenarioError("field domain", str(e)) from None
    schedule = _schedule(doc["schedule"], domain)

    sub = None
    constants = dict(doc.get("constants", {}))
    if has_sub:
        name = doc["subsystem"]
        if "variant" not in doc:
            raise ScenarioError("field variant", "required together with 'subsystem'")
        cls = CONSTANTS[name]
        known = set(cls.__dataclass_fields__)
        for k in constants:
            if k not in known:
                raise ScenarioError(f"field constants.{k}", f"unknown constant for {name}; expected one of {sorted(known)}")
        try:
            consts = cls(**constants)
            consts.check(domain.delta)
        except DomainError as e:
            raise ScenarioError("field constants", str(e)) from None
        sub = trip_sealed_in(doc["variant"], consts) if name == "trip-sealed-in" else pushbutton(doc["variant"], consts)
        net = sub.netlist
    else:
        net = _netlist(doc["netlist"], Path(base_dir))

    inputs = _inputs(doc["inputs"], net, domain, INPUT_DOMAINS.get(doc.get("subsystem")))
    return Scenario(
        domain=domain,
        schedule=schedule,
        inputs=inputs,
        netlist=net,
        subsystem=sub,
        variant=doc.get("variant"),
        constants=constants,
        expect=doc.get("expect"),
        description=doc.get("description", ""),
    )


def _schedule(spec: Mapping[str, Any], domain: TickDomain) -> SampleSchedule:
    kinds = [k for k in ("samples", "every", "gaps") if k in spec]
    if len(kinds) != 1:
        raise ScenarioError("field schedule", "give exactly one of 'samples', 'every' and 'gaps'")
    kind = kinds[0]
    if kind != "every":
        for k in ("tmin", "tmax"):
            if k not in spec:
                raise ScenarioError(f"field schedule.{k}", f"required with '{kind}'")
    elif "tmin" in spec or "tmax" in spec or "first_sample_zero" in spec:
        raise ScenarioError("field schedule", "'every' fixes tmin and tmax itself")
    try:
        if kind == "every":
            return SampleSchedule.every(domain, spec["every"])
        if kind == "gaps":
            return SampleSchedule.from_gaps(domain, spec["gaps"], spec["tmin"], spec["tmax"])
        return SampleSchedule(domain, tuple(spec["samples"]), spec["tmin"], spec["tmax"],
                              spec.get("first_sample_zero", True))
    except DomainError as e:
        raise ScenarioError(f"field schedule.{kind}", str(e)) from None


def _netlist(ref, base_dir: Path) -> Netlist:
    try:
        if isinstance(ref, dict):
            net = nl.from_dict(ref)
        elif ref in preset_netlists():
            net = load_preset_netlist(ref)
        else:
            path = base_dir / ref
            if not path.exists():
                raise ScenarioError("field netlist", f"no preset or file named {ref!r}")
            net = nl.loads(path.read_text())
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, ScenarioError):
            raise
        raise ScenarioError("field netlist", f"malformed netlist: {e}") from None
    report = validate_netlist(net)
    if not report.ok:
        raise ScenarioError("field netlist", "; ".join(str(p) for p in report.problems))
    return net


def _inputs(doc: Mapping[str, list], net: Netlist, domain: TickDomain, allowed) -> dict[str, tuple]:
    missing = [n for n in net.inputs if n not in doc]
    if missing:
        raise ScenarioError(f"field inputs.{missing[0]}", "missing input trajectory")
    out = {}
    for name, changes in doc.items():
        if name not in net.inputs:
            raise ScenarioError(f"field inputs.{name}", f"not an input of {net.name}; inputs are {list(net.inputs)}")
        ticks = [c[0] for c in changes]
        if ticks[0] != 0:
            raise ScenarioError(f"field inputs.{name}", "the first change must be at tick 0")
        if any(b <= a for a, b in zip(ticks, ticks[1:])):
            raise ScenarioError(f"field inputs.{name}", "change ticks must be strictly increasing")
        if ticks[-1] > domain.horizon:
            raise ScenarioError(f"field inputs.{name}", f"change at tick {ticks[-1]} beyond horizon {domain.horizon}")
        if allowed is not None:
            for t, v in changes:
                if v not in allowed[name] or type(v) is not type(allowed[name][0]):
                    raise ScenarioError(f"field inputs.{name}", f"value {v!r} at tick {t} not in {list(allowed[name])}")
        out[name] = from_changes(domain.horizon, [tuple(c) for c in changes])
    return out


# -- running ----------------------------------------------------------------------------------


@dataclass
class ScenarioRun:
    trace: SimTrace
    req: dict[str, tuple] | None = None
    divergence: tuple | None = None  # (tick, signal, expected, actual)
    table_faults: list[tuple[int, str, str]] = field(default_factory=list)
    replay: Counterexample | None = None
    replayed: bool | None = None

    def lanes(self) -> dict[str, tuple]:
        """Inputs, then internal wires, then outputs, then REQ columns."""
        n = self.trace
        out: dict[str, tuple] = {}
        for name, vals in n.wires.items():
            out[name] = vals
        for name, vals in n.outputs.items():
            out.setdefault(name, vals)
        for name, vals in (self.req or {}).items():
            out[f"REQ_{name}"] = vals
        return out


def run_scenario(sc: Scenario) -> ScenarioRun:
    if not validate_netlist(sc.netlist).ok:
        raise InvalidNetlist(validate_netlist(sc.netlist))
    sub = sc.subsystem
    impl_inputs = sc.inputs
    if sub is not None:
        impl_inputs = {k: (sub.boundary[k](v) if k in sub.boundary else v) for k, v in sc.inputs.items()}
    trace = simulate(sc.netlist, impl_inputs, sc.schedule)
    run = ScenarioRun(trace)
    if sub is None:
        return run
    run.req = sub.req(sc.inputs, sc.schedule)
    for name, want in run.req.items():
        got = trace.outputs[name]
        t = next((t for t in range(len(got)) if got[t] != want[t]), None)
        if t is not None and (run.divergence is None or t < run.divergence[0]):
            run.divergence = (t, name, want[t], got[t])
    ctxs = sub.req.contexts(sc.inputs, sc.schedule)
    for spec in sub.tables:
        run.table_faults += _table_faults(spec, ctxs)
    if sc.expect is not None:
        run.replay, run.replayed = replay_expectation(sc)
    return run


def _table_faults(spec: TableSpec, ctxs) -> list[tuple[int, str, str]]:
    out = []
    for t, ctx in enumerate(ctxs):
        hits = spec.matching(ctx)
        if not hits:
            out.append((t, spec.name, "no row applies"))
        elif len(hits) > 1:
            out.append((t, spec.name, "rows " + ", ".join(repr(spec.rows[i].label) for i in hits) + " overlap"))
    return out


def case_function(check: str, sub: Subsystem):
    """The verifier's per-case function for ``check`` on a subsystem."""
    from .verifier import ConsistencyCase, CorrectnessCase, TableCase

    if check == "correctness":
        return CorrectnessCase(sub.netlist, sub.req, dict(sub.boundary))
    if check == "consistency":
        return ConsistencyCase(sub.netlist, dict(sub.boundary))
    return TableCase(sub.tables[0], sub.req.contexts, check)


def replay_expectation(sc: Scenario) -> tuple[Counterexample | None, bool]:
    """Re-run the recorded check on the scenario's inputs and compare with ``expect``."""
    exp = sc.expect
    found = case_function(exp["check"], sc.subsystem)(sc.inputs, sc.schedule)
    if found is None:
        return None, False
    same = found.tick == exp["tick"] and all(
        _plain(getattr(found, k)) == exp[k] for k in ("signal", "expected", "actual", "category") if k in exp
    )
    return found, same


def _plain(v):
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    return v


# -- writing ------------------------------------------------------------------------------------


def counterexample_scenario(cex: Counterexample, subsystem: str, variant: str, constants: Mapping[str, int]) -> dict:
    """A scenario document that replays ``cex`` through ``simulate``."""
    d = cex.to_dict()
    return {
        "format": FORMAT_VERSION,
        "description": f"{cex.check} counterexample ({cex.category}) for {subsystem} {variant}",
        "domain": d["domain"],
        "schedule": d["schedule"],
        "constants": dict(constants),
        "subsystem": subsystem,
        "variant": variant,
        "inputs": d["inputs"],
        "expect": {
            "check": cex.check,
            "tick": cex.tick,
            "signal": cex.signal,
            "expected": d["expected"],
            "actual": d["actual"],
            "category": cex.category,
        },
    }
