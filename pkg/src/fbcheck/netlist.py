"""Function block diagrams: netlists, validation, simulation and the JSON document form.

A netlist has named external inputs and outputs, block instances, and wires.
A wire connects one source (an external input or a block output port written
``"block.port"``) to one or more sinks (block input ports or external outputs).
Wires listed under ``feedback`` are unit delays: their sinks see the source's
value from the previous tick, and the declared initial value at tick 0.
"""

from __future__ import annotations

import graphlib
import json
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

from . import blocks as B
from .tables import NC, TableFault, table
from .time_core import DomainError, SampleSchedule, TickDomain, check_duration

FORMAT_VERSION = 1


# -- block kinds --------------------------------------------------------------------


@dataclass(frozen=True)
class KindInfo:
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    params: tuple[str, ...] = ()
    optional: tuple[str, ...] = ()


KINDS: dict[str, KindInfo] = {
    "NOT": KindInfo(("in",), ("out",)),
    "CONJ": KindInfo(("in1", "in2"), ("out",)),
    "DISJ": KindInfo(("in1", "in2"), ("out",)),
    "RS": KindInfo(("set", "reset"), ("q",), optional=("q_init",)),
    "SEL": KindInfo(("g", "in0", "in1"), ("out",)),
    "INIT": KindInfo((), ("out",)),
    "CONST": KindInfo((), ("out",), ("value",)),
    "EQ": KindInfo(("in",), ("out",), ("value",)),
    "TON": KindInfo(("in",), ("q", "et"), ("pt",)),
    "TOF": KindInfo(("in",), ("q", "et"), ("pt",)),
    "TP": KindInfo(("in",), ("q", "et"), ("pt",)),
    # inputs of a TABLE block are named by its "inputs" parameter
    "TABLE": KindInfo((), ("out",), ("inputs", "rows"), ("initial",)),
}


def block_inputs(kind: str, params: Mapping[str, Any]) -> tuple[str, ...]:
    if kind == "TABLE":
        return tuple(params.get("inputs", ()))
    return KINDS[kind].inputs


@dataclass(frozen=True)
class Block:
    id: str
    kind: str
    params: Mapping[str, Any] = field(default_factory=dict)

    @property
    def input_ports(self) -> tuple[str, ...]:
        return block_inputs(self.kind, self.params) if self.kind in KINDS else ()

    @property
    def output_ports(self) -> tuple[str, ...]:
        return KINDS[self.kind].outputs if self.kind in KINDS else ()


@dataclass(frozen=True)
class Wire:
    name: str
    source: str
    sinks: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "sinks", tuple(self.sinks))


@dataclass(frozen=True)
class Netlist:
    name: str
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    blocks: tuple[Block, ...]
    wires: tuple[Wire, ...]
    feedback: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        for attr in ("inputs", "outputs", "blocks", "wires"):
            object.__setattr__(self, attr, tuple(getattr(self, attr)))

    def block(self, block_id: str) -> Block:
        for b in self.blocks:
            if b.id == block_id:
                return b
        raise KeyError(block_id)

    def wire(self, name: str) -> Wire:
        for w in self.wires:
            if w.name == name:
                return w
        raise KeyError(name)

    def without_feedback(self, wire: str) -> "Netlist":
        fb = {k: v for k, v in self.feedback.items() if k != wire}
        return Netlist(self.name, self.inputs, self.outputs, self.blocks, self.wires, fb)


# -- validation -----------------------------------------------------------------------


@dataclass(frozen=True)
class Problem:
    kind: str  # unconnected-sink | multiple-drivers | algebraic-loop | missing-feedback-init | ...
    subject: str
    detail: str

    def __str__(self):
        return f"{self.kind}: {self.subject}: {self.detail}"


@dataclass(frozen=True)
class ValidationReport:
    problems: tuple[Problem, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.problems

    def __bool__(self):
        return self.ok

    def of_kind(self, kind: str) -> list[Problem]:
        return [p for p in self.problems if p.kind == kind]


class InvalidNetlist(ValueError):
    def __init__(self, report: ValidationReport):
        super().__init__("; ".join(str(p) for p in report.problems))
        self.report = report


def validate_netlist(n: Netlist) -> ValidationReport:
    problems: list[Problem] = []
    add = lambda kind, subject, detail: problems.append(Problem(kind, subject, detail))  # noqa: E731

    ids = [b.id for b in n.blocks]
    for bid in {i for i in ids if ids.count(i) > 1}:
        add("duplicate-block", bid, "block id used more than once")
    blocks = {b.id: b for b in n.blocks}
    for b in n.blocks:
        if "." in b.id or b.id in n.inputs or b.id in n.outputs:
            add("bad-name", b.id, "block ids must be unique and contain no '.'")
        if b.kind not in KINDS:
            add("unknown-kind", b.id, f"unknown block kind {b.kind!r}")
            continue
        info = KINDS[b.kind]
        for p in info.params:
            if p not in b.params:
                add("missing-param", b.id, f"{b.kind} needs parameter {p!r}")
        extra = set(b.params) - set(info.params) - set(info.optional)
        if extra:
            add("unknown-param", b.id, f"unexpected parameters {sorted(extra)}")

    names = [w.name for w in n.wires]
    for wn in {x for x in names if names.count(x) > 1}:
        add("duplicate-wire", wn, "wire name used more than once")

    drivers: dict[str, list[str]] = {}
    for w in n.wires:
        if "." in w.source:
            bid, port = w.source.split(".", 1)
            if bid not in blocks or port not in blocks[bid].output_ports:
                add("bad-source", w.name, f"no output port {w.source!r}")
        elif w.source not in n.inputs:
            add("bad-source", w.name, f"{w.source!r} is not an external input")
        for sink in w.sinks:
            if "." in sink:
                bid, port = sink.split(".", 1)
                if bid not in blocks or port not in blocks[bid].input_ports:
                    add("bad-sink", w.name, f"no input port {sink!r}")
                    continue
            elif sink not in n.outputs:
                add("bad-sink", w.name, f"{sink!r} is not an external output")
                continue
            drivers.setdefault(sink, []).append(w.name)

    sinks = [f"{b.id}.{p}" for b in n.blocks if b.kind in KINDS for p in b.input_ports] + list(n.outputs)
    for sink in sinks:
        d = drivers.get(sink, [])
        if not d:
            add("unconnected-sink", sink, "not driven by any wire")
        elif len(d) > 1:
            add("multiple-drivers", sink, f"driven by wires {d}")

    for wn, init in n.feedback.items():
        if wn not in names:
            add("bad-feedback", wn, "feedback names an unknown wire")
        if init is None:
            add("missing-feedback-init", wn, "feedback wire declares no initial value")

    cycle = _find_loop(n, blocks)
    if cycle:
        add("algebraic-loop", " -> ".join(cycle), "cycle without a feedback (unit-delay) wire")
    return ValidationReport(tuple(problems))


def _dependency_graph(n: Netlist, blocks: Mapping[str, Block]) -> dict[str, set[str]]:
    graph: dict[str, set[str]] = {b.id: set() for b in n.blocks}
    for w in n.wires:
        if w.name in n.feedback or "." not in w.source:
            continue
        src = w.source.split(".", 1)[0]
        for sink in w.sinks:
            if "." in sink:
                dst = sink.split(".", 1)[0]
                if dst in graph and src in blocks:
                    graph[dst].add(src)
    return graph


def _find_loop(n: Netlist, blocks: Mapping[str, Block]) -> list[str] | None:
    try:
        tuple(graphlib.TopologicalSorter(_dependency_graph(n, blocks)).static_order())
    except graphlib.CycleError as exc:
        return list(exc.args[1])
    return None


def evaluation_order(n: Netlist) -> list[str]:
    blocks = {b.id: b for b in n.blocks}
    ts = graphlib.TopologicalSorter(_dependency_graph(n, blocks))
    # deterministic: ties broken by declaration order
    rank = {b.id: i for i, b in enumerate(n.blocks)}
    ts.prepare()
    order: list[str] = []
    while ts.is_active():
        ready = sorted(ts.get_ready(), key=rank.__getitem__)
        order.extend(ready)
        ts.done(*ready)
    return order


# -- simulation ---------------------------------------------------------------------------


class SimulationFault(RuntimeError):
    """A block could not produce an output; the input is a consistency counterexample."""

    def __init__(self, tick: int, block: str, cause: Exception):
        super().__init__(f"block {block!r} failed at tick {tick}: {cause}")
        self.tick = tick
        self.block = block
        self.cause = cause

    @property
    def category(self) -> str:
        return getattr(self.cause, "category", "other")


@dataclass(frozen=True)
class SimTrace:
    domain: TickDomain
    schedule: SampleSchedule
    wires: Mapping[str, tuple]
    ports: Mapping[str, tuple]
    outputs: Mapping[str, tuple]

    def __getitem__(self, name: str) -> tuple:
        if name in self.outputs:
            return self.outputs[name]
        if name in self.wires:
            return self.wires[name]
        return self.ports[name]


def _make_step(b: Block, schedule: SampleSchedule) -> tuple[Any, Callable]:
    """Initial state and per-tick function ``(state, args, t) -> (state, outs)``."""
    k, p = b.kind, b.params
    steps = B.sample_steps(schedule)
    if k == "NOT":
        return None, lambda s, a, t: (s, (not a[0],))
    if k == "CONJ":
        return None, lambda s, a, t: (s, (bool(a[0] and a[1]),))
    if k == "DISJ":
        return None, lambda s, a, t: (s, (bool(a[0] or a[1]),))
    if k == "RS":
        return bool(p.get("q_init", False)), lambda s, a, t: ((q := B.rs_latch(a[0], a[1], s)), (q,))
    if k == "SEL":
        return None, lambda s, a, t: (s, (B.sel(a[0], a[1], a[2]),))
    if k == "INIT":
        return None, lambda s, a, t: (s, (t == 0,))
    if k == "CONST":
        v = p["value"]
        return None, lambda s, a, t: (s, (v,))
    if k == "EQ":
        v = p["value"]
        return None, lambda s, a, t: (s, (a[0] == v,))
    if k in ("TON", "TOF", "TP"):
        pt = check_duration(p["pt"], schedule.domain.delta, f"{b.id}.pt")
        if k == "TON":
            def ton(s, a, t):
                at, gap = steps[t]
                s, q, et = B.ton_step(s, a[0], gap, at, pt)
                return s, (q, et)
            return B.TonState(), ton
        if k == "TOF":
            def tof(s, a, t):
                at, gap = steps[t]
                s, q, et = B.tof_step(s, a[0], gap, at, pt)
                return s, (q, et)
            return B.TofState(), tof
        delta = schedule.domain.delta

        def tp(s, a, t):
            s, q, et = B.tp_step(s, a[0], t * delta, steps[t][0], pt)
            return s, (q, et)
        return B.TpState(), tp
    if k == "TABLE":
        spec = table_block_spec(b)

        def tab(s, a, t):
            v = spec.evaluate(dict(zip(p["inputs"], a)), s, tick=t)
            return v, (v,)
        return spec.initial, tab
    raise ValueError(f"unknown block kind {k!r}")


def table_block_spec(b: Block):
    """TableSpec for a TABLE block; each row guard is a conjunction of port == value."""
    rows = []
    for i, row in enumerate(b.params["rows"]):
        when = dict(row.get("when", {}))
        result = NC if row.get("result") == "NC" else row.get("result")
        rows.append((f"row{i + 1}", lambda c, when=when: all(c[k] == v for k, v in when.items()), result))
    has_init = "initial" in b.params
    return table(b.id, rows, signals=b.params["inputs"], initial=b.params.get("initial"), has_initial=has_init)


class _Plan:
    """Netlist compiled against one schedule: slot indices and block steps."""

    def __init__(self, n: Netlist, schedule: SampleSchedule):
        report = validate_netlist(n)
        if not report.ok:
            raise InvalidNetlist(report)
        self.netlist = n
        slot: dict[str, int] = {}
        for name in n.inputs:
            slot[name] = len(slot)
        for b in n.blocks:
            for port in b.output_ports:
                slot[f"{b.id}.{port}"] = len(slot)
        # delayed copies of feedback sources live in their own slots
        fb_slots = []
        for w in n.wires:
            if w.name in n.feedback:
                slot[f"@{w.name}"] = len(slot)
                fb_slots.append((slot[f"@{w.name}"], slot[w.source], n.feedback[w.name]))
        self.fb_slots = fb_slots
        self.slot = slot
        wire_slot = {}
        driver = {}
        for w in n.wires:
            wire_slot[w.name] = slot[f"@{w.name}"] if w.name in n.feedback else slot[w.source]
            for sink in w.sinks:
                driver[sink] = wire_slot[w.name]
        self.wire_slot = wire_slot
        self.output_slot = {o: driver[o] for o in n.outputs}
        self.input_slot = [(name, slot[name]) for name in n.inputs]
        self.order = evaluation_order(n)
        self.steps = []
        for bid in self.order:
            b = n.block(bid)
            init, fn = _make_step(b, schedule)
            ins = tuple(driver[f"{bid}.{p}"] for p in b.input_ports)
            outs = tuple(slot[f"{bid}.{p}"] for p in b.output_ports)
            self.steps.append((bid, fn, ins, outs, init))
        self.schedule = schedule

    def run(self, inputs: Mapping[str, Sequence[Any]]) -> list[list[Any]]:
        h = self.schedule.domain.horizon
        for name, _ in self.input_slot:
            if name not in inputs:
                raise DomainError(f"missing input trajectory {name!r}")
            if len(inputs[name]) != h + 1:
                raise DomainError(f"input {name!r} has {len(inputs[name])} values, need {h + 1}")
        nslots = len(self.slot)
        states = [s[4] for s in self.steps]
        steps = [(i, s[0], s[1], s[2], s[3]) for i, s in enumerate(self.steps)]
        rows: list[list[Any]] = []
        cur = [None] * nslots
        for fb, _, init in self.fb_slots:
            cur[fb] = init
        for t in range(h + 1):
            for name, sl in self.input_slot:
                cur[sl] = inputs[name][t]
            for i, bid, fn, ins, outs in steps:
                try:
                    states[i], vals = fn(states[i], [cur[j] for j in ins], t)
                except (TableFault, ValueError) as exc:
                    raise SimulationFault(t, bid, exc) from exc
                for j, v in zip(outs, vals):
                    cur[j] = v
            rows.append(cur[:])
            for fb, src, _ in self.fb_slots:
                cur[fb] = cur[src]
        return rows

    def outputs(self, inputs: Mapping[str, Sequence[Any]]) -> dict[str, tuple]:
        rows = self.run(inputs)
        return {o: tuple(r[sl] for r in rows) for o, sl in self.output_slot.items()}


def compile_netlist(n: Netlist, schedule: SampleSchedule) -> _Plan:
    return _Plan(n, schedule)


def simulate(n: Netlist, inputs: Mapping[str, Sequence[Any]], schedule: SampleSchedule) -> SimTrace:
    """Run the netlist tick by tick and record every wire and port."""
    plan = _Plan(n, schedule)
    rows = plan.run(inputs)
    col = lambda sl: tuple(r[sl] for r in rows)  # noqa: E731
    return SimTrace(
        domain=schedule.domain,
        schedule=schedule,
        wires={w: col(sl) for w, sl in plan.wire_slot.items()},
        ports={p: col(sl) for p, sl in plan.slot.items() if not p.startswith("@")},
        outputs={o: col(sl) for o, sl in plan.output_slot.items()},
    )


# -- document form ----------------------------------------------------------------------------


def to_dict(n: Netlist) -> dict:
    return {
        "format": FORMAT_VERSION,
        "name": n.name,
        "inputs": list(n.inputs),
        "outputs": list(n.outputs),
        "blocks": [{"id": b.id, "kind": b.kind, "params": _plain(dict(b.params))} for b in n.blocks],
        "wires": [{"name": w.name, "source": w.source, "sinks": list(w.sinks)} for w in n.wires],
        "feedback": [{"wire": k, "init": v} for k, v in n.feedback.items()],
    }


def from_dict(doc: Mapping[str, Any]) -> Netlist:
    if doc.get("format", FORMAT_VERSION) != FORMAT_VERSION:
        raise ValueError(f"unsupported netlist format {doc.get('format')!r}")
    unknown = set(doc) - {"format", "name", "inputs", "outputs", "blocks", "wires", "feedback"}
    if unknown:
        raise ValueError(f"unknown netlist keys {sorted(unknown)}")
    return Netlist(
        name=doc["name"],
        inputs=tuple(doc["inputs"]),
        outputs=tuple(doc["outputs"]),
        blocks=tuple(Block(b["id"], b["kind"], _frozen(b.get("params", {}))) for b in doc["blocks"]),
        wires=tuple(Wire(w["name"], w["source"], tuple(w["sinks"])) for w in doc["wires"]),
        feedback={f["wire"]: f.get("init") for f in doc.get("feedback", [])},
    )


def dumps(n: Netlist) -> str:
    return json.dumps(to_dict(n), indent=2) + "\n"


def loads(text: str) -> Netlist:
    return from_dict(json.loads(text))


def _plain(v):
    if isinstance(v, Mapping):
        return {k: _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    return v


def _frozen(v):
    # rows and input lists come back as tuples so that equal documents give equal netlists
    if isinstance(v, Mapping):
        return {k: _frozen(x) for k, x in v.items()}
    if isinstance(v, list):
        return tuple(_frozen(x) for x in v)
    return v
