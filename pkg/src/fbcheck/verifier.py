"""Bounded-exhaustive checking of tables and netlists.

Every check enumerates a finite :class:`InputSpace` in a fixed order, applies a
per-case check function and stops at the first failing case.  The first failure
is defined by case index, so the verdict, the counterexample and the ``checked``
count do not depend on how many worker processes were used.
"""

from __future__ import annotations

import itertools
import multiprocessing
import os
import random
import time
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Iterator, Mapping, Sequence

from .netlist import InvalidNetlist, Netlist, SimulationFault, compile_netlist, simulate, validate_netlist
from .tables import TableFault, TableSpec
from .time_core import SampleSchedule, TickDomain, change_points, is_filtered

DEFAULT_CAP = 2 ** 22
WORKERS_ENV = "FBCHECK_WORKERS"

DISCIPLINES = ("sample", "tick", "filtered")


class CardinalityError(RuntimeError):
    def __init__(self, count: int, cap: int):
        super().__init__(f"input space has {count} cases, above the cap of {cap}")
        self.count = count
        self.cap = cap


class UnsoundCounterexample(AssertionError):
    """A counterexample failed to replay; this is a bug in the checker."""


# -- input spaces ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InputSpec:
    name: str
    domain: tuple
    discipline: str = "sample"

    def __post_init__(self):
        object.__setattr__(self, "domain", tuple(self.domain))
        if self.discipline not in DISCIPLINES:
            raise ValueError(f"unknown discipline {self.discipline!r}")
        if not self.domain:
            raise ValueError(f"input {self.name!r} has an empty domain")


@dataclass(frozen=True)
class InputSpace:
    """Per-input value domains and change disciplines, crossed with a set of schedules.

    ``sample``: values change only at sample ticks.  ``tick``: any value at any
    tick.  ``filtered``: any per-tick trajectory the schedule cannot miss (see
    :func:`~fbcheck.time_core.is_filtered`).
    """

    inputs: tuple[InputSpec, ...]
    schedules: tuple[SampleSchedule, ...]
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "schedules", tuple(self.schedules))
        if not self.schedules:
            raise ValueError("an input space needs at least one schedule")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(i.name for i in self.inputs)

    def raw_count(self, spec: InputSpec, schedule: SampleSchedule) -> int:
        width = len(spec.domain)
        if spec.discipline == "sample":
            return width ** len(schedule)
        return width ** (schedule.domain.horizon + 1)

    def trajectories(self, spec: InputSpec, schedule: SampleSchedule, cap: int = DEFAULT_CAP) -> list[tuple]:
        key = (spec, schedule)
        if key in self._cache:
            return self._cache[key]
        raw = self.raw_count(spec, schedule)
        if raw > cap:
            raise CardinalityError(raw, cap)
        if spec.discipline == "sample":
            lst = schedule.left_sample_table()
            out = [tuple(vals[n] for n in lst) for vals in itertools.product(spec.domain, repeat=len(schedule))]
        else:
            out = [tuple(v) for v in itertools.product(spec.domain, repeat=schedule.domain.horizon + 1)]
            if spec.discipline == "filtered":
                out = [p for p in out if is_filtered(p, schedule)]
        self._cache[key] = out
        return out

    def cardinality(self, cap: int = DEFAULT_CAP) -> int:
        """Exact number of (inputs, schedule) cases; refuses above ``cap``."""
        total = 0
        for sch in self.schedules:
            # cheap upper bound first, so a huge space is refused before enumeration
            bound = 1
            for spec in self.inputs:
                bound *= self.raw_count(spec, sch)
            if bound > cap and all(s.discipline != "filtered" for s in self.inputs):
                raise CardinalityError(total + bound, cap)
            n = 1
            for spec in self.inputs:
                n *= len(self.trajectories(spec, sch, cap))
            total += n
            if total > cap:
                raise CardinalityError(total, cap)
        return total

    def _blocks(self, cap: int):
        for sch in self.schedules:
            yield sch, [self.trajectories(spec, sch, cap) for spec in self.inputs]

    def cases(self, cap: int = DEFAULT_CAP) -> Iterator[tuple[dict, SampleSchedule]]:
        names = self.names
        for sch, lists in self._blocks(cap):
            for combo in itertools.product(*lists):
                yield dict(zip(names, combo)), sch

    def case(self, index: int, cap: int = DEFAULT_CAP) -> tuple[dict, SampleSchedule]:
        names = self.names
        for sch, lists in self._blocks(cap):
            size = 1
            for lst in lists:
                size *= len(lst)
            if index < size:
                picks = []
                for lst in reversed(lists):
                    index, r = divmod(index, len(lst))
                    picks.append(lst[r])
                return dict(zip(names, reversed(picks))), sch
            index -= size
        raise IndexError("case index out of range")

    def random_case(self, rng: random.Random) -> tuple[dict, SampleSchedule]:
        """One random case; filtered inputs are drawn with change points at least tmax apart."""
        sch = rng.choice(self.schedules)
        out = {}
        for spec in self.inputs:
            out[spec.name] = _random_trajectory(spec, sch, rng)
        return out, sch


def _random_trajectory(spec: InputSpec, sch: SampleSchedule, rng: random.Random) -> tuple:
    h = sch.domain.horizon
    if spec.discipline == "sample":
        vals = [rng.choice(spec.domain) for _ in sch.samples]
        return tuple(vals[n] for n in sch.left_sample_table())
    if spec.discipline == "tick":
        return tuple(rng.choice(spec.domain) for _ in range(h + 1))
    k = sch.tmax_ticks
    value = rng.choice(spec.domain)
    out = []
    t = k + 1 + rng.randrange(k + 1)
    nxt = t
    for tick in range(h + 1):
        if tick == nxt and len(spec.domain) > 1:
            value = rng.choice([v for v in spec.domain if v != value])
            nxt = tick + k + rng.randrange(2 * k + 1)
        out.append(value)
    return tuple(out)


def schedules_from_gaps(gap_lists: Sequence[Sequence[int]], tmin: int, tmax: int, delta: int = 1,
                        tail: int = 1) -> tuple[SampleSchedule, ...]:
    """Schedules from tick-gap lists; the horizon runs ``tail`` ticks past the last sample."""
    out = []
    for gaps in gap_lists:
        last = sum(gaps)
        out.append(SampleSchedule.from_gaps(TickDomain(delta, last + tail), gaps, tmin, tmax))
    return tuple(out)


# -- counterexamples and reports ------------------------------------------------------------


@dataclass(frozen=True)
class Counterexample:
    check: str
    inputs: Mapping[str, tuple]
    schedule: SampleSchedule
    tick: int
    expected: Any = None
    actual: Any = None
    category: str = "other"
    signal: str | None = None
    detail: str = ""
    case_index: int | None = field(default=None, compare=False)

    @property
    def horizon(self) -> int:
        return self.schedule.domain.horizon

    def same_failure(self, other: "Counterexample") -> bool:
        return (
            other is not None
            and (self.tick, self.expected, self.actual, self.category, self.signal)
            == (other.tick, other.expected, other.actual, other.category, other.signal)
        )

    def change_point_count(self) -> int:
        return sum(len(change_points(v)) for v in self.inputs.values())

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "tick": self.tick,
            "category": self.category,
            "signal": self.signal,
            "expected": _jsonable(self.expected),
            "actual": _jsonable(self.actual),
            "detail": self.detail,
            "case_index": self.case_index,
            "domain": {"delta": self.schedule.domain.delta, "horizon": self.horizon},
            "schedule": self.schedule.to_dict(),
            "inputs": {k: _changes(v) for k, v in self.inputs.items()},
        }


def _changes(traj):
    out = [[0, _jsonable(traj[0])]]
    for t in range(1, len(traj)):
        if traj[t] != traj[t - 1]:
            out.append([t, _jsonable(traj[t])])
    return out


def _jsonable(v):
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, str):
        return str(v)
    return v


@dataclass(frozen=True)
class Report:
    check: str
    subject: str
    cases: int
    checked: int
    counterexample: Counterexample | None = None
    mode: str = "exhaustive"
    extra: Mapping[str, Any] = field(default_factory=dict)
    seconds: float = field(default=0.0, compare=False)

    @property
    def passed(self) -> bool:
        return self.counterexample is None

    def summary(self) -> str:
        if self.passed:
            return f"PASS {self.check} [{self.subject}]: {self.cases} cases ({self.mode})"
        c = self.counterexample
        return (
            f"FAIL {self.check} [{self.subject}]: counterexample at tick {c.tick} "
            f"({c.category}) after {self.checked}/{self.cases} cases: "
            f"expected={c.expected!r} actual={c.actual!r} {c.detail}".rstrip()
        )

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "subject": self.subject,
            "verdict": "pass" if self.passed else "fail",
            "mode": self.mode,
            "cases": self.cases,
            "checked": self.checked,
            "counterexample": None if self.passed else self.counterexample.to_dict(),
            **({"extra": dict(self.extra)} if self.extra else {}),
        }


# -- per-case check functions ------------------------------------------------------------------
#
# Each is a picklable callable ``(inputs, schedule) -> Counterexample | None``.


@dataclass
class TableCase:
    table: TableSpec
    contexts: Callable[[Mapping[str, tuple], SampleSchedule], Sequence[Mapping]]
    mode: str  # "completeness" | "disjointness" | "conflict"

    def __call__(self, inputs, schedule):
        for t, ctx in enumerate(self.contexts(inputs, schedule)):
            hits = self.table.matching(ctx)
            if self.mode == "completeness" and not hits:
                return Counterexample(
                    "completeness", dict(inputs), schedule, t, category="table-gap", signal=self.table.name,
                    detail=f"no row applies; context={_ctx_text(ctx)}",
                )
            if self.mode != "completeness" and len(hits) > 1:
                labels = [self.table.rows[i].label for i in hits]
                results = [_jsonable(self.table.rows[i].value(ctx, None)) for i in hits]
                if self.mode == "conflict" and len(set(map(repr, results))) == 1:
                    continue
                return Counterexample(
                    self.mode, dict(inputs), schedule, t, expected=labels, actual=results,
                    category="table-overlap", signal=self.table.name,
                    detail=f"rows {labels} overlap; context={_ctx_text(ctx)}",
                )
        return None


def _ctx_text(ctx):
    return "{" + ", ".join(f"{k}={_jsonable(v)!r}" for k, v in ctx.items()) + "}"


def _apply_boundary(inputs, boundary):
    return {k: (boundary[k](v) if k in boundary else v) for k, v in inputs.items()}


class _PlanCache:
    def __init__(self, netlist: Netlist):
        self.netlist = netlist
        self._plans: dict = {}

    def get(self, schedule):
        plan = self._plans.get(schedule)
        if plan is None:
            plan = self._plans[schedule] = compile_netlist(self.netlist, schedule)
        return plan

    def __getstate__(self):
        return {"netlist": self.netlist, "_plans": {}}


@dataclass
class ConsistencyCase:
    netlist: Netlist
    boundary: Mapping[str, Callable] = field(default_factory=dict)

    def __post_init__(self):
        self._plans = _PlanCache(self.netlist)

    def __call__(self, inputs, schedule):
        try:
            self._plans.get(schedule).run(_apply_boundary(inputs, self.boundary))
        except SimulationFault as f:
            return Counterexample(
                "consistency", dict(inputs), schedule, f.tick, category=f.category, signal=f.block, detail=str(f.cause),
            )
        return None


@dataclass
class CorrectnessCase:
    netlist: Netlist
    req: Any
    boundary: Mapping[str, Callable] = field(default_factory=dict)

    def __post_init__(self):
        self._plans = _PlanCache(self.netlist)

    def __call__(self, inputs, schedule):
        impl_inputs = _apply_boundary(inputs, self.boundary)
        try:
            got = self._plans.get(schedule).outputs(impl_inputs)
        except SimulationFault as f:
            return Counterexample(
                "correctness", dict(inputs), schedule, f.tick, category=f.category, signal=f.block, detail=str(f.cause),
            )
        try:
            want = self.req(inputs, schedule)
        except TableFault as f:
            return Counterexample(
                "correctness", dict(inputs), schedule, f.tick, category=f.category, signal=f.table, detail=str(f),
            )
        first = None
        for name in self.netlist.outputs:
            if name not in want:
                continue
            a, e = got[name], want[name]
            for t in range(len(a)):
                if a[t] != e[t]:
                    if first is None or t < first[0]:
                        first = (t, name, e[t], a[t])
                    break
        if first is None:
            return None
        t, name, e, a = first
        return Counterexample(
            "correctness", dict(inputs), schedule, t, expected=_jsonable(e), actual=_jsonable(a),
            category=self._categorize(inputs, impl_inputs, schedule, t), signal=name,
        )

    def _categorize(self, inputs, impl_inputs, schedule, t) -> str:
        if t == 0:
            return "init"
        diagnose = getattr(self.req, "diagnose", None)
        if diagnose is not None:
            cat = diagnose(inputs, schedule, t)
            if cat:
                return cat
        trace = simulate(self.netlist, impl_inputs, schedule)
        for b in self.netlist.blocks:
            if b.kind in ("TON", "TOF", "TP"):
                q = trace.ports[f"{b.id}.q"]
                if q[t] != q[t - 1]:
                    return "sustained-timing"
        return "other"


@dataclass
class InductionCase:
    """Direct scan and base-plus-step scan must reach the same verdict on every case.

    The step check evaluates the requirement's one-tick table with PREV taken
    from the implementation at the previous tick, which is the induction
    hypothesis made executable.
    """

    netlist: Netlist
    req: Any
    boundary: Mapping[str, Callable] = field(default_factory=dict)
    output: str | None = None

    def __post_init__(self):
        self._plans = _PlanCache(self.netlist)
        if self.output is None:
            self.output = self.netlist.outputs[0]

    def verdicts(self, inputs, schedule) -> tuple[bool, bool]:
        impl = self._plans.get(schedule).outputs(_apply_boundary(inputs, self.boundary))[self.output]
        direct = impl == self.req(inputs, schedule)[self.output]
        ctxs = self.req.contexts(inputs, schedule)
        inductive = impl[0] == self.req.init_value and all(
            self.req.step(ctxs[t], impl[t - 1]) == impl[t] for t in range(1, len(impl))
        )
        return direct, inductive

    def __call__(self, inputs, schedule):
        direct, inductive = self.verdicts(inputs, schedule)
        if direct != inductive:
            return Counterexample(
                "induction", dict(inputs), schedule, 0, expected=direct, actual=inductive, category="other",
                detail="direct scan and base+step disagree",
            )
        return None


# -- runner ------------------------------------------------------------------------------------

_JOB: tuple | None = None


def _run_chunk(lo: int, hi: int):
    case_fn, space, cap = _JOB
    for i in range(lo, hi):
        inputs, sch = space.case(i, cap)
        cex = case_fn(inputs, sch)
        if cex is not None:
            return i, cex
    return None


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def run_cases(case_fn, space: InputSpace, *, cap: int = DEFAULT_CAP, workers: int | None = None):
    """Return ``(cases, checked, counterexample)`` for the first failing case in enumeration order."""
    total = space.cardinality(cap)
    workers = default_workers() if workers is None else workers
    if workers <= 1 or total < 2 * workers:
        for i, (inputs, sch) in enumerate(space.cases(cap)):
            cex = case_fn(inputs, sch)
            if cex is not None:
                return total, i + 1, replace(cex, case_index=i)
        return total, total, None
    global _JOB
    _JOB = (case_fn, space, cap)
    try:
        ctx = multiprocessing.get_context("fork")
        nchunks = workers * 8
        bounds = [(total * k // nchunks, total * (k + 1) // nchunks) for k in range(nchunks)]
        with ctx.Pool(workers) as pool:
            results = pool.starmap(_run_chunk, bounds)
    finally:
        _JOB = None
    hits = [r for r in results if r is not None]
    if not hits:
        return total, total, None
    i, cex = min(hits, key=lambda r: r[0])
    return total, i + 1, replace(cex, case_index=i)


def _finish(check, subject, case_fn, space, cap, workers, *, shrink_result=False, admissible=None, extra=None):
    start = time.perf_counter()
    total, checked, cex = run_cases(case_fn, space, cap=cap, workers=workers)
    if cex is not None:
        _assert_replays(cex, case_fn)
        if shrink_result:
            cex = shrink(cex, case_fn, admissible=admissible)
    return Report(check, subject, total, checked, cex, extra=extra or {}, seconds=time.perf_counter() - start)


def _assert_replays(cex: Counterexample, case_fn) -> None:
    again = case_fn(cex.inputs, cex.schedule)
    if again is None or not cex.same_failure(again):
        raise UnsoundCounterexample(f"counterexample at tick {cex.tick} does not replay")


def space_admissible(space: InputSpace):
    """Predicate keeping shrunk inputs inside the space's disciplines."""
    specs = {s.name: s for s in space.inputs}

    def ok(inputs, schedule):
        for name, traj in inputs.items():
            spec = specs.get(name)
            if spec is None:
                continue
            if any(v not in spec.domain for v in traj):
                return False
            if spec.discipline == "filtered" and not is_filtered(traj, schedule):
                return False
            if spec.discipline == "sample":
                samples = set(schedule.samples)
                if any(t not in samples for t in change_points(traj)):
                    return False
        return True

    return ok


# -- public checks --------------------------------------------------------------------------------


def check_completeness(table: TableSpec, contexts, space: InputSpace, *, cap=DEFAULT_CAP, workers=None,
                       shrink_result=True) -> Report:
    fn = TableCase(table, contexts, "completeness")
    return _finish("completeness", table.name, fn, space, cap, workers,
                   shrink_result=shrink_result, admissible=space_admissible(space))


def check_disjointness(table: TableSpec, contexts, space: InputSpace, *, cap=DEFAULT_CAP, workers=None,
                       shrink_result=True) -> Report:
    fn = TableCase(table, contexts, "disjointness")
    return _finish("disjointness", table.name, fn, space, cap, workers,
                   shrink_result=shrink_result, admissible=space_admissible(space))


def check_conflicts(table: TableSpec, contexts, space: InputSpace, *, cap=DEFAULT_CAP, workers=None,
                    shrink_result=True) -> Report:
    """Like :func:`check_disjointness`, but only overlaps whose rows give different results count."""
    fn = TableCase(table, contexts, "conflict")
    return _finish("conflict", table.name, fn, space, cap, workers,
                   shrink_result=shrink_result, admissible=space_admissible(space))


def check_consistency(netlist: Netlist, space: InputSpace, *, boundary=None, cap=DEFAULT_CAP, workers=None,
                      shrink_result=False) -> Report:
    report = validate_netlist(netlist)
    if not report.ok:
        raise InvalidNetlist(report)
    fn = ConsistencyCase(netlist, boundary or {})
    return _finish("consistency", netlist.name, fn, space, cap, workers,
                   shrink_result=shrink_result, admissible=space_admissible(space))


def check_correctness(netlist: Netlist, req, space: InputSpace, *, boundary=None, cap=DEFAULT_CAP, workers=None,
                      shrink_result=False) -> Report:
    report = validate_netlist(netlist)
    if not report.ok:
        raise InvalidNetlist(report)
    fn = CorrectnessCase(netlist, req, boundary or {})
    return _finish("correctness", netlist.name, fn, space, cap, workers,
                   shrink_result=shrink_result, admissible=space_admissible(space))


def check_induction(netlist: Netlist, req, space: InputSpace, *, boundary=None, cap=DEFAULT_CAP,
                    workers=None) -> Report:
    fn = InductionCase(netlist, req, boundary or {})
    return _finish("induction", netlist.name, fn, space, cap, workers)


def check_random(case_fn, space: InputSpace, n: int, seed: int = 0, *, check: str = "correctness",
                 subject: str = "") -> Report:
    """Randomized variant for spaces too large to enumerate; reproducible from ``seed``."""
    rng = random.Random(seed)
    start = time.perf_counter()
    for i in range(n):
        inputs, sch = space.random_case(rng)
        cex = case_fn(inputs, sch)
        if cex is not None:
            cex = replace(cex, case_index=i)
            _assert_replays(cex, case_fn)
            return Report(check, subject, n, i + 1, cex, mode=f"random(seed={seed})",
                          seconds=time.perf_counter() - start)
    return Report(check, subject, n, n, None, mode=f"random(seed={seed})", seconds=time.perf_counter() - start)


# -- shrinking -------------------------------------------------------------------------------------


def _truncate(inputs, schedule, horizon):
    return {k: v[: horizon + 1] for k, v in inputs.items()}, schedule.truncate(horizon)


def _moves(cex: Counterexample):
    inputs, sch = cex.inputs, cex.schedule
    if cex.tick < cex.horizon:
        yield _truncate(inputs, sch, cex.tick)
    for name, traj in inputs.items():
        if len(set(traj)) > 1:
            yield {**inputs, name: (traj[0],) * len(traj)}, sch
    for name, traj in inputs.items():
        cps = change_points(traj)
        for i, c in enumerate(cps):
            end = cps[i + 1] if i + 1 < len(cps) else len(traj)
            merged = traj[:c] + (traj[c - 1],) * (end - c) + traj[end:]
            yield {**inputs, name: merged}, sch


def _measure(cex: Counterexample):
    return cex.horizon, cex.change_point_count()


def shrink(cex: Counterexample, case_fn, *, admissible=None, max_steps: int = 10_000) -> Counterexample:
    """Greedy shrinking: truncate the horizon, flatten an input, or drop a change point.

    A move is kept only if the case still fails and the (horizon, change-point
    count) measure strictly decreases.  The result is a fixpoint of the moves.
    """
    current = cex
    for _ in range(max_steps):
        for inputs, sch in _moves(current):
            if admissible is not None and not admissible(inputs, sch):
                continue
            found = case_fn(inputs, sch)
            if found is None:
                continue
            found = replace(found, case_index=cex.case_index)
            if _measure(found) < _measure(current):
                current = found
                break
        else:
            return current
    return current
