"""IEC 61131-3 blocks as single-tick transfer functions, plus whole-trajectory timers.

The per-tick step functions (``ton_step`` and friends) are what the netlist
simulator runs.  The trajectory functions (``ton``, ``ton_ideal``, ``tof_tp``) are
written against the timing operators and the requirement tables instead, so the
two can be checked against each other.
"""

from __future__ import annotations

import enum
from typing import Any, NamedTuple, Sequence

from .tables import NC, TableSpec, table
from .time_core import SampleSchedule, TickDomain
from .timing_ops import timer_i_trajectory


class GateKind(enum.Enum):
    NOT = "NOT"
    CONJ = "CONJ"
    DISJ = "DISJ"

    @property
    def arity(self) -> int:
        return 1 if self is GateKind.NOT else 2


class ArityError(ValueError):
    pass


def eval_gate(kind: GateKind, inputs: Sequence[bool]) -> bool:
    if len(inputs) != kind.arity:
        raise ArityError(f"{kind.name} takes {kind.arity} input(s), got {len(inputs)}")
    if kind is GateKind.NOT:
        return not inputs[0]
    if kind is GateKind.CONJ:
        return bool(inputs[0] and inputs[1])
    return bool(inputs[0] or inputs[1])


def rs_latch(set_: bool, reset: bool, prev_q: bool) -> bool:
    """Reset-dominant latch."""
    if reset:
        return False
    if set_:
        return True
    return prev_q


def sel(g: bool, in0: Any, in1: Any) -> Any:
    return in1 if g else in0


# -- timers: per-tick state machines ----------------------------------------------


class TonState(NamedTuple):
    timer: int = 0
    last_in: bool = False


def ton_step(state: TonState, x: bool, gap: int | None, at_sample: bool, pt: int):
    """Advance a TON by one tick.

    ``gap`` is the physical distance to the previous sample (None at the first
    sample).  Returns ``(state, q, et)``.
    """
    timer, last = state
    if at_sample:
        if gap is not None and x and last:
            timer = min(pt, timer + gap)
        else:
            timer = 0
        last = x
    q = timer >= pt
    et = pt if q else (timer if x else 0)
    return TonState(timer, last), q, et


class TofState(NamedTuple):
    timer: int = 0
    last_in: bool = False
    seen: bool = False


def tof_step(state: TofState, x: bool, gap: int | None, at_sample: bool, pt: int):
    timer, last, seen = state
    if at_sample:
        # counts how long IN has been off, across samples
        if gap is not None and not x and not last:
            timer = min(pt, timer + gap)
        else:
            timer = 0
        last = x
        seen = seen or x
    q = last or (seen and timer < pt)
    et = timer if seen else 0
    return TofState(timer, last, seen), q, et


class TpState(NamedTuple):
    start: int | None = None
    last_in: bool = False
    q: bool = False
    et: int = 0


def tp_step(state: TpState, x: bool, now: int, at_sample: bool, pt: int):
    """Pulse timer; ``now`` is the physical time of the tick."""
    start, last, q, et = state
    if at_sample:
        if start is None and x and not last:
            start = now
        if start is not None:
            et = min(pt, now - start)
            q = et < pt
            if not q and not x:
                start, et = None, 0
        else:
            q, et = False, 0
        last = x
    return TpState(start, last, q, et), q, et


def sample_steps(schedule: SampleSchedule) -> list[tuple[bool, int | None]]:
    """Per tick: (is this tick a sample, physical gap to the previous sample)."""
    delta = schedule.domain.delta
    out: list[tuple[bool, int | None]] = [(False, None)] * (schedule.domain.horizon + 1)
    prev = None
    for s in schedule.samples:
        out[s] = (True, None if prev is None else (s - prev) * delta)
        prev = s
    return out


# -- TON requirement tables ------------------------------------------------------------

TON_Q = table(
    "ton-q",
    [
        ("d >= PT", lambda c: c["d"] >= c["PT"], True),
        ("d < PT", lambda c: c["d"] < c["PT"], False),
    ],
    signals=("d", "PT"),
)

# only the d < PT cases split on IN, so Q and ET agree when IN drops after the timer fired
TON_ET = table(
    "ton-et",
    [
        ("d >= PT", lambda c: c["d"] >= c["PT"], lambda c: c["PT"]),
        ("IN & d < PT", lambda c: c["IN"] and c["d"] < c["PT"], lambda c: c["d"]),
        ("~IN & d < PT", lambda c: not c["IN"] and c["d"] < c["PT"], 0),
    ],
    signals=("IN", "d", "PT"),
)

# the ET table exactly as printed with tolerances: its rows are not disjoint
TON_ET_LITERAL = table(
    "ton-et-literal",
    [
        ("d >= PT", lambda c: c["d"] >= c["PT"], lambda c: c["PT"]),
        ("d < PT", lambda c: c["d"] < c["PT"], lambda c: c["d"]),
        ("~IN", lambda c: not c["IN"], 0),
    ],
    signals=("IN", "d", "PT"),
)

TON_IDEAL_LAST_ENABLED = table(
    "ton-ideal-last-enabled",
    [
        ("~IN[-1] & IN", lambda c: not c["IN_1"] and c["IN"], lambda c: c["t"]),
        ("IN[-1] | ~IN", lambda c: c["IN_1"] or not c["IN"], NC),
    ],
    signals=("IN", "IN_1", "t"),
    initial=0,
    has_initial=True,
)

TON_IDEAL_Q = table(
    "ton-ideal-q",
    [
        ("IN & d >= PT", lambda c: c["IN"] and c["d"] >= c["PT"], True),
        ("IN & d < PT", lambda c: c["IN"] and c["d"] < c["PT"], False),
        ("~IN", lambda c: not c["IN"], False),
    ],
    signals=("IN", "d", "PT"),
)

TON_IDEAL_ET = table(
    "ton-ideal-et",
    [
        ("IN & d >= PT", lambda c: c["IN"] and c["d"] >= c["PT"], lambda c: c["PT"]),
        ("IN & d < PT", lambda c: c["IN"] and c["d"] < c["PT"], lambda c: c["d"]),
        ("~IN", lambda c: not c["IN"], 0),
    ],
    signals=("IN", "d", "PT"),
)


def ton_contexts(in_: Sequence[bool], pt: int, schedule: SampleSchedule) -> list[dict]:
    d = timer_i_trajectory(in_, schedule, pt)
    return [{"IN": bool(in_[t]), "d": d[t], "PT": pt} for t in range(len(in_))]


def ton(in_: Sequence[bool], pt: int, schedule: SampleSchedule, *, et_table: TableSpec = TON_ET):
    """TON with tolerances: ``pt`` is the already-adjusted preset (``PT - dL``).

    Passing ``et_table=TON_ET_LITERAL`` evaluates the ET rows as printed, in
    row order; a ``~IN`` tick with a frozen timer then reports the frozen value.
    """
    ctxs = ton_contexts(in_, pt, schedule)
    q = TON_Q.run(ctxs)
    et = et_table.run(ctxs, strict=et_table is not TON_ET_LITERAL)
    return q, et


def ton_ideal(in_: Sequence[bool], pt: int, domain: TickDomain):
    """Instantaneous TON: elapsed time is measured from the exact rising edge."""
    q, et = [], []
    last_enabled = TON_IDEAL_LAST_ENABLED.initial
    prev_in = False
    for t in domain.ticks:
        x = bool(in_[t])
        last_enabled = TON_IDEAL_LAST_ENABLED.evaluate(
            {"IN": x, "IN_1": prev_in, "t": domain.time(t)}, last_enabled, tick=t
        )
        ctx = {"IN": x, "d": domain.time(t) - last_enabled, "PT": pt}
        q.append(TON_IDEAL_Q.evaluate(ctx, tick=t))
        et.append(TON_IDEAL_ET.evaluate(ctx, tick=t))
        prev_in = x
    return tuple(q), tuple(et)


def tof_tp(kind: str, in_: Sequence[bool], pt: int, schedule: SampleSchedule):
    """Off-delay (``"TOF"``) or pulse (``"TP"``) timer over a whole trajectory.

    Experimental: these follow the IEC timing diagrams at sample resolution.
    """
    kind = kind.upper()
    lst = schedule.left_sample_table()
    s = schedule.samples
    if kind == "TOF":
        off = timer_i_trajectory(tuple(not v for v in in_), schedule, pt)
        seen_at = []
        seen = False
        for n in range(len(s)):
            seen = seen or bool(in_[s[n]])
            seen_at.append(seen)
        q = tuple(bool(in_[s[lst[t]]]) or (seen_at[lst[t]] and off[t] < pt) for t in range(len(in_)))
        et = tuple(off[t] if seen_at[lst[t]] else 0 for t in range(len(in_)))
        return q, et
    if kind == "TP":
        state = TpState()
        per_sample = []
        for n, tick in enumerate(s):
            state, qv, etv = tp_step(state, bool(in_[tick]), schedule.time(n), True, pt)
            per_sample.append((qv, etv))
        return tuple(per_sample[lst[t]][0] for t in range(len(in_))), tuple(
            per_sample[lst[t]][1] for t in range(len(in_))
        )
    raise ValueError(f"unknown timer kind {kind!r}")
