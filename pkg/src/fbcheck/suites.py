"""Ready-made input spaces and check suites for the two subsystems and the TON tables.

The CLI and the acceptance tests both run these, so a verdict printed by
``fbcheck verify`` is the same verdict the tests assert.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any, Mapping

import jsonschema

from .blocks import TON_ET, TON_ET_LITERAL, TON_Q, ton_contexts
from .scenario import CONSTANTS, INPUT_DOMAINS, ScenarioError, counterexample_scenario
from .subsystems import (
    PB_VALUES,
    PUSHBUTTON_TABLES,
    SEALEDIN_REQ,
    TRIP_VALUES,
    PushbuttonConsts,
    PushbuttonReq,
    SealedInConsts,
    Subsystem,
    TripSealedInReq,
    pushbutton,
    trip_sealed_in,
)
from .tables import TableSpec
from .time_core import DomainError, SampleSchedule, TickDomain
from .verifier import (
    DEFAULT_CAP,
    ConsistencyCase,
    CorrectnessCase,
    InductionCase,
    InputSpace,
    InputSpec,
    Report,
    TableCase,
    check_completeness,
    check_conflicts,
    check_consistency,
    check_correctness,
    check_disjointness,
    check_induction,
    check_random,
    schedules_from_gaps,
)

BOOL = (False, True)

# sample-aligned Trip Sealed-In space: 5 samples per schedule, gaps within [2, 4]
SEALEDIN_GAPS = ((2, 2, 2, 2), (2, 3, 4, 2), (4, 4, 4, 4))
SEALEDIN_TMIN, SEALEDIN_TMAX = 2, 4

PUSHBUTTON_HORIZON = 12
PUSHBUTTON_STEP = 2


def sealedin_space(gaps=SEALEDIN_GAPS, tmin=SEALEDIN_TMIN, tmax=SEALEDIN_TMAX, delta=1) -> InputSpace:
    return InputSpace(
        (
            InputSpec("Any_parm_trip", BOOL, "sample"),
            InputSpec("Trip", TRIP_VALUES, "sample"),
            InputSpec("Man_reset_req", BOOL, "sample"),
        ),
        schedules_from_gaps(gaps, tmin, tmax, delta),
    )


def pushbutton_space(discipline: str, horizon: int = PUSHBUTTON_HORIZON, step: int = PUSHBUTTON_STEP) -> InputSpace:
    sched = SampleSchedule.every(TickDomain(1, horizon), step)
    return InputSpace((InputSpec("m", PB_VALUES, discipline),), (sched,))


def default_space(subsystem: str, variant: str) -> InputSpace:
    if subsystem == "trip-sealed-in":
        return sealedin_space()
    # the original table is exercised against unconstrained button input, the fix against filtered input
    return pushbutton_space("tick" if variant == "original" else "filtered")


def make_subsystem(subsystem: str, variant: str, constants: Mapping[str, int] | None = None) -> Subsystem:
    cls = CONSTANTS[subsystem]
    consts = cls(**(constants or {}))
    if subsystem == "trip-sealed-in":
        return trip_sealed_in(variant, consts)
    return pushbutton(variant, consts)


# -- space files -----------------------------------------------------------------------------

_POS = {"type": "integer", "minimum": 1}
_GAPS = {"type": "array", "items": _POS}

SPACE_SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "fbcheck input space",
    "type": "object",
    "additionalProperties": False,
    "required": ["schedules"],
    "properties": {
        "delta": _POS,
        "schedules": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "properties": {
                    "gaps": _GAPS,
                    "samples": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
                    "every": _POS,
                    "horizon": {"type": "integer", "minimum": 0},
                    "tail": {"type": "integer", "minimum": 0},
                    "tmin": _POS,
                    "tmax": _POS,
                },
            },
        },
        "disciplines": {"type": "object", "additionalProperties": {"enum": ["sample", "tick", "filtered"]}},
        "constants": {"type": "object", "additionalProperties": {"type": "integer", "minimum": 0}},
        "cap": _POS,
        "random": {
            "type": "object",
            "additionalProperties": False,
            "required": ["cases"],
            "properties": {"cases": _POS, "seed": {"type": "integer"}},
        },
    },
}


@dataclass
class SpaceConfig:
    space: InputSpace
    constants: dict[str, int] = field(default_factory=dict)
    cap: int = DEFAULT_CAP
    random_cases: int | None = None
    seed: int = 0


def space_from_dict(doc: Any, subsystem: str, variant: str) -> SpaceConfig:
    errors = sorted(jsonschema.Draft202012Validator(SPACE_SCHEMA).iter_errors(doc), key=lambda e: len(e.path))
    if errors:
        e = errors[0]
        raise ScenarioError("field " + (".".join(map(str, e.path)) or "<root>"), e.message)
    delta = doc.get("delta", 1)
    schedules = []
    for i, s in enumerate(doc["schedules"]):
        where = f"field schedules.{i}"
        kinds = [k for k in ("gaps", "samples", "every") if k in s]
        if len(kinds) != 1:
            raise ScenarioError(where, "give exactly one of 'gaps', 'samples' and 'every'")
        try:
            if "every" in s:
                if "horizon" not in s:
                    raise ScenarioError(where, "'every' needs 'horizon'")
                schedules.append(SampleSchedule.every(TickDomain(delta, s["horizon"]), s["every"]))
                continue
            if "tmin" not in s or "tmax" not in s:
                raise ScenarioError(where, f"'{kinds[0]}' needs 'tmin' and 'tmax'")
            if "gaps" in s:
                samples = [0]
                for g in s["gaps"]:
                    samples.append(samples[-1] + g)
            else:
                samples = s["samples"]
            horizon = s.get("horizon", samples[-1] + s.get("tail", 1))
            schedules.append(SampleSchedule(TickDomain(delta, horizon), tuple(samples), s["tmin"], s["tmax"]))
        except DomainError as e:
            raise ScenarioError(where, str(e)) from None

    domains = INPUT_DOMAINS[subsystem]
    base = default_space(subsystem, variant)
    disciplines = {spec.name: spec.discipline for spec in base.inputs}
    for name, d in doc.get("disciplines", {}).items():
        if name not in domains:
            raise ScenarioError(f"field disciplines.{name}", f"not an input; inputs are {sorted(domains)}")
        disciplines[name] = d
    space = InputSpace(tuple(InputSpec(n, domains[n], disciplines[n]) for n in domains), tuple(schedules))

    constants = dict(doc.get("constants", {}))
    known = set(CONSTANTS[subsystem].__dataclass_fields__)
    for k in constants:
        if k not in known:
            raise ScenarioError(f"field constants.{k}", f"unknown constant; expected one of {sorted(known)}")
    try:
        CONSTANTS[subsystem](**constants).check(delta)
    except DomainError as e:
        raise ScenarioError("field constants", str(e)) from None
    rnd = doc.get("random")
    return SpaceConfig(
        space,
        constants,
        doc.get("cap", DEFAULT_CAP),
        rnd["cases"] if rnd else None,
        rnd.get("seed", 0) if rnd else 0,
    )


# -- verify suite ----------------------------------------------------------------------------


@dataclass
class VerifyResult:
    subsystem: str
    variant: str
    constants: dict[str, int]
    reports: list[Report]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)

    def counterexample(self):
        """The failure worth replaying first: correctness, then consistency, then the tables."""
        order = ("correctness", "consistency", "disjointness", "completeness")
        failed = {r.check: r.counterexample for r in self.reports if not r.passed}
        for check in order:
            if check in failed:
                return failed[check]
        return None

    def counterexample_scenario(self) -> dict | None:
        cex = self.counterexample()
        if cex is None:
            return None
        return counterexample_scenario(cex, self.subsystem, self.variant, self.constants)

    def to_dict(self) -> dict:
        return {
            "subsystem": self.subsystem,
            "variant": self.variant,
            "constants": dict(self.constants),
            "verdict": "pass" if self.passed else "fail",
            "reports": [r.to_dict() for r in self.reports],
        }


def run_verify(subsystem: str, variant: str, config: SpaceConfig | None = None, *, workers: int | None = None,
               progress=None) -> VerifyResult:
    """Tables, consistency, correctness, and (when the oracle has a one-tick step) the induction cross-check."""
    config = config or SpaceConfig(default_space(subsystem, variant))
    sub = make_subsystem(subsystem, variant, config.constants)
    constants = asdict(CONSTANTS[subsystem](**config.constants))
    space, cap = config.space, config.cap
    boundary = dict(sub.boundary)
    reports: list[Report] = []

    def done(r: Report):
        reports.append(r)
        if progress is not None:
            progress(r)

    if config.random_cases is not None:
        n, seed = config.random_cases, config.seed
        for spec in sub.tables:
            for mode in ("completeness", "disjointness"):
                done(check_random(TableCase(spec, sub.req.contexts, mode), space, n, seed, check=mode, subject=spec.name))
        done(check_random(ConsistencyCase(sub.netlist, boundary), space, n, seed, check="consistency",
                          subject=sub.netlist.name))
        done(check_random(CorrectnessCase(sub.netlist, sub.req, boundary), space, n, seed, check="correctness",
                          subject=sub.netlist.name))
        if hasattr(sub.req, "step"):
            done(check_random(InductionCase(sub.netlist, sub.req, boundary), space, n, seed, check="induction",
                              subject=sub.netlist.name))
        return VerifyResult(subsystem, variant, constants, reports)

    for spec in sub.tables:
        done(check_completeness(spec, sub.req.contexts, space, cap=cap, workers=workers))
        done(check_disjointness(spec, sub.req.contexts, space, cap=cap, workers=workers))
    done(check_consistency(sub.netlist, space, boundary=boundary, cap=cap, workers=workers))
    done(check_correctness(sub.netlist, sub.req, space, boundary=boundary, cap=cap, workers=workers,
                           shrink_result=True))
    if hasattr(sub.req, "step"):
        done(check_induction(sub.netlist, sub.req, space, boundary=boundary, cap=cap, workers=workers))
    return VerifyResult(subsystem, variant, constants, reports)


# -- table suites ----------------------------------------------------------------------------


@dataclass(frozen=True)
class TonContexts:
    pt: int

    def __call__(self, inputs, schedule):
        return ton_contexts(inputs["IN"], self.pt, schedule)


TON_PT = 4
TON_HORIZON = 8


def ton_space(horizon: int = TON_HORIZON) -> InputSpace:
    dom = TickDomain(1, horizon)
    return InputSpace(
        (InputSpec("IN", BOOL, "tick"),),
        (SampleSchedule.every(dom, 1), SampleSchedule.every(dom, 2)),
    )


@dataclass(frozen=True)
class TableSuite:
    table: TableSpec
    contexts: Any
    space: InputSpace


def table_suite(name: str) -> TableSuite:
    if name in ("ton-q", "ton-et", "ton-et-literal"):
        spec = {"ton-q": TON_Q, "ton-et": TON_ET, "ton-et-literal": TON_ET_LITERAL}[name]
        return TableSuite(spec, TonContexts(TON_PT), ton_space())
    if name.startswith("pushbutton-"):
        variant = name.split("-", 1)[1]
        discipline = "tick" if variant == "original" else "filtered"
        req = PushbuttonReq(PushbuttonConsts(), variant)
        return TableSuite(PUSHBUTTON_TABLES[variant], req.contexts, pushbutton_space(discipline))
    if name == "sealedin-req":
        space = sealedin_space(gaps=tuple(g[:3] for g in SEALEDIN_GAPS))
        return TableSuite(SEALEDIN_REQ, TripSealedInReq(SealedInConsts()).contexts, space)
    raise KeyError(name)


TABLE_NAMES = ("ton-q", "ton-et", "ton-et-literal", "pushbutton-original", "pushbutton-revised",
               "pushbutton-literal", "sealedin-req")


def run_table_checks(name: str, *, workers: int | None = None, cap: int = DEFAULT_CAP) -> list[Report]:
    """Completeness and disjointness; when rows overlap, also whether any overlap changes the result."""
    suite = table_suite(name)
    reports = [
        check_completeness(suite.table, suite.contexts, suite.space, cap=cap, workers=workers),
        check_disjointness(suite.table, suite.contexts, suite.space, cap=cap, workers=workers),
    ]
    if not reports[1].passed:
        reports.append(check_conflicts(suite.table, suite.contexts, suite.space, cap=cap, workers=workers))
    return reports
