"""The Trip Sealed-In and Pushbutton subsystems: requirement oracles and FBD candidates."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

from .netlist import Block, Netlist, Wire
from .tables import NC, TableSpec, table
from .time_core import DomainError, SampleSchedule, check_duration
from .timing_ops import held_for_i_trajectory


class TripEnum(str, enum.Enum):
    E_TRIP = "e_Trip"
    E_NOT_TRIP = "e_NotTrip"


class PbStatus(str, enum.Enum):
    E_PRESSED = "e_Pressed"
    E_NOT_PRESSED = "e_NotPressed"


class PbOutput(str, enum.Enum):
    E_NOT_DEBOUNCED = "e_pbNotDebounced"
    E_DEBOUNCED = "e_pbDebounced"
    E_STUCK = "e_pbStuck"


TRIP_VALUES = (TripEnum.E_TRIP.value, TripEnum.E_NOT_TRIP.value)
PB_VALUES = (PbStatus.E_NOT_PRESSED.value, PbStatus.E_PRESSED.value)


@dataclass(frozen=True)
class SealedInConsts:
    k_sealindelay: int = 4
    delta_l: int = 1
    delta_r: int = 1

    def __post_init__(self):
        if self.delta_l > self.k_sealindelay:
            raise DomainError("delta_l must not exceed k_sealindelay")

    def check(self, delta: int) -> None:
        for name in ("k_sealindelay", "delta_l", "delta_r"):
            check_duration(getattr(self, name), delta, name)

    @property
    def preset(self) -> int:
        return self.k_sealindelay - self.delta_l


@dataclass(frozen=True)
class PushbuttonConsts:
    k_debounce: int = 3
    k_stuck: int = 7
    delta_l: int = 1
    # carried for completeness; the deterministic requirement only uses k - delta_l
    delta_r: int = 0

    def __post_init__(self):
        if not self.delta_l <= self.k_debounce <= self.k_stuck:
            raise DomainError("need delta_l <= k_debounce <= k_stuck")

    def check(self, delta: int) -> None:
        for name in ("k_debounce", "k_stuck", "delta_l", "delta_r"):
            check_duration(getattr(self, name), delta, name)


def abst_parm_trip(trip: Sequence[str]) -> tuple[bool, ...]:
    """Requirement-level trip enum to the implementation's boolean (e_NotTrip is TRUE)."""
    return tuple(v == TripEnum.E_NOT_TRIP for v in trip)


# -- Trip Sealed-In ---------------------------------------------------------------------

SEALEDIN_REQ = table(
    "sealedin-req",
    [
        ("Any & HELD", lambda c: c["Any_parm_trip"] and c["HELD"], True),
        ("Any & ~HELD", lambda c: c["Any_parm_trip"] and not c["HELD"], NC),
        ("~Any & Man_reset_req", lambda c: not c["Any_parm_trip"] and c["Man_reset_req"], False),
        ("~Any & ~Man_reset_req", lambda c: not c["Any_parm_trip"] and not c["Man_reset_req"], NC),
    ],
    signals=("Any_parm_trip", "HELD", "Man_reset_req"),
    initial=True,
    has_initial=True,
)


def sealedin_contexts(any_parm_trip, trip, man_reset_req, schedule: SampleSchedule, consts: SealedInConsts):
    tripped = tuple(v == TripEnum.E_TRIP for v in trip)
    held = held_for_i_trajectory(tripped, consts.preset, schedule)
    return [
        {"Any_parm_trip": bool(any_parm_trip[t]), "HELD": held[t], "Man_reset_req": bool(man_reset_req[t])}
        for t in range(len(trip))
    ]


def trip_sealedin_req(any_parm_trip, trip, man_reset_req, schedule: SampleSchedule,
                      consts: SealedInConsts) -> tuple[bool, ...]:
    """The recursive requirement: TRUE at tick 0, then the four-row table with PREV."""
    ctxs = sealedin_contexts(any_parm_trip, trip, man_reset_req, schedule, consts)
    out = [True]
    for t in range(1, len(ctxs)):
        out.append(SEALEDIN_REQ.evaluate(ctxs[t], out[-1], tick=t))
    return tuple(out)


@dataclass(frozen=True)
class TripSealedInReq:
    consts: SealedInConsts = SealedInConsts()
    output: str = "Trip_SealedIn"
    init_value: bool = True

    def __call__(self, inputs: Mapping[str, Sequence[Any]], schedule: SampleSchedule) -> dict[str, tuple]:
        return {
            self.output: trip_sealedin_req(
                inputs["Any_parm_trip"], inputs["Trip"], inputs["Man_reset_req"], schedule, self.consts
            )
        }

    def contexts(self, inputs, schedule):
        return sealedin_contexts(inputs["Any_parm_trip"], inputs["Trip"], inputs["Man_reset_req"], schedule, self.consts)

    def step(self, ctx, prev):
        return SEALEDIN_REQ.evaluate(ctx, prev)


def build_trip_sealedin_impl(variant: str = "original", consts: SealedInConsts = SealedInConsts()) -> Netlist:
    """The candidate FBD (``original``) or the fix with an initial-tick selector (``revised``)."""
    if variant not in ("original", "revised"):
        raise ValueError(f"unknown variant {variant!r}")
    blocks = [
        Block("NOT_trip", "NOT"),
        Block("TON_sealin", "TON", {"pt": consts.preset}),
        Block("CONJ_trip", "CONJ"),
        Block("DISJ_sealin", "DISJ"),
        Block("NOT_any", "NOT"),
        Block("CONJ_reset", "CONJ"),
        Block("RS_sealin", "RS", {"q_init": False}),
    ]
    wires = [
        Wire("Any_parm_trip", "Any_parm_trip", ("CONJ_trip.in1", "NOT_any.in")),
        Wire("Trip", "Trip", ("NOT_trip.in",)),
        Wire("Man_reset_req", "Man_reset_req", ("CONJ_reset.in2",)),
        Wire("w6", "NOT_trip.out", ("TON_sealin.in",)),
        Wire("w1", "TON_sealin.q", ("CONJ_trip.in2",)),
        Wire("et_sealin", "TON_sealin.et", ()),
        Wire("w2", "CONJ_trip.out", ("DISJ_sealin.in1",)),
        Wire("w3", "DISJ_sealin.out", ("RS_sealin.set",)),
        Wire("w5", "NOT_any.out", ("CONJ_reset.in1",)),
        Wire("w4", "CONJ_reset.out", ("RS_sealin.reset",)),
    ]
    if variant == "original":
        wires += [
            Wire("Q1", "RS_sealin.q", ("Trip_SealedIn",)),
            Wire("fb_sealedin", "RS_sealin.q", ("DISJ_sealin.in2",)),
        ]
    else:
        blocks += [
            Block("INIT_sealin", "INIT"),
            Block("TRUE_sealin", "CONST", {"value": True}),
            Block("SEL_sealin", "SEL"),
        ]
        wires += [
            Wire("Q1", "RS_sealin.q", ("SEL_sealin.in0",)),
            Wire("is_init", "INIT_sealin.out", ("SEL_sealin.g",)),
            Wire("true_const", "TRUE_sealin.out", ("SEL_sealin.in1",)),
            Wire("Trip_SealedIn", "SEL_sealin.out", ("Trip_SealedIn",)),
            Wire("fb_sealedin", "SEL_sealin.out", ("DISJ_sealin.in2",)),
        ]
    return Netlist(
        name=f"trip_sealed_in_{variant}",
        inputs=("Any_parm_trip", "Trip", "Man_reset_req"),
        outputs=("Trip_SealedIn",),
        blocks=tuple(blocks),
        wires=tuple(wires),
        feedback={"fb_sealedin": False},
    )


# -- Pushbutton ---------------------------------------------------------------------------

ND, DB, ST = (v.value for v in PbOutput)
_PRESSED = PbStatus.E_PRESSED.value
_NOT_PRESSED = PbStatus.E_NOT_PRESSED.value

PUSHBUTTON_ORIGINAL = table(
    "pushbutton-original",
    [
        ("m = e_NotPressed", lambda c: c["m"] == _NOT_PRESSED, ND),
        ("m = e_Pressed & ~debounced", lambda c: c["m"] == _PRESSED and not c["debounced"], ND),
        ("debounced & ~stuck", lambda c: c["debounced"] and not c["stuck"], DB),
        ("stuck", lambda c: c["stuck"], ST),
    ],
    signals=("m", "debounced", "stuck"),
)

# rows 1 and 2 collapsed into one "not debounced" row
PUSHBUTTON_REVISED = table(
    "pushbutton-revised",
    [
        ("~debounced", lambda c: not c["debounced"], ND),
        ("debounced & ~stuck", lambda c: c["debounced"] and not c["stuck"], DB),
        ("stuck", lambda c: c["stuck"], ST),
    ],
    signals=("debounced", "stuck"),
)

# the collapsed row read word for word: not pressed and not stuck
PUSHBUTTON_LITERAL = table(
    "pushbutton-literal",
    [
        ("~pressed & ~stuck", lambda c: c["m"] == _NOT_PRESSED and not c["stuck"], ND),
        ("debounced & ~stuck", lambda c: c["debounced"] and not c["stuck"], DB),
        ("stuck", lambda c: c["stuck"], ST),
    ],
    signals=("m", "debounced", "stuck"),
)

PUSHBUTTON_TABLES = {
    "original": PUSHBUTTON_ORIGINAL,
    "revised": PUSHBUTTON_REVISED,
    "literal": PUSHBUTTON_LITERAL,
}


def pushbutton_contexts(m: Sequence[str], schedule: SampleSchedule, consts: PushbuttonConsts) -> list[dict]:
    pressed = tuple(v == _PRESSED for v in m)
    debounced = held_for_i_trajectory(pressed, consts.k_debounce - consts.delta_l, schedule)
    stuck = held_for_i_trajectory(pressed, consts.k_stuck - consts.delta_l, schedule)
    return [{"m": m[t], "debounced": debounced[t], "stuck": stuck[t]} for t in range(len(m))]


def pushbutton_req(m: Sequence[str], schedule: SampleSchedule, consts: PushbuttonConsts,
                   table: str = "revised", *, strict: bool = True) -> tuple[str, ...]:
    """Requirement output per tick.  ``strict`` raises on overlapping or missing rows;
    otherwise rows are taken in order."""
    spec = PUSHBUTTON_TABLES[table]
    return spec.run(pushbutton_contexts(m, schedule, consts), strict=strict)


def pushbutton_reading_differences(m, schedule, consts) -> list[tuple[int, str, str | None]]:
    """Ticks where the word-for-word collapsed row disagrees with the ``~debounced`` row.

    Each entry is ``(tick, revised value, literal value or None when no literal row applies)``.
    """
    diffs = []
    for t, ctx in enumerate(pushbutton_contexts(m, schedule, consts)):
        want = PUSHBUTTON_REVISED.evaluate(ctx, tick=t)
        hits = PUSHBUTTON_LITERAL.matching(ctx)
        got = PUSHBUTTON_LITERAL.rows[hits[0]].value(ctx, None) if hits else None
        if got != want or len(hits) != 1:
            diffs.append((t, want, got))
    return diffs


@dataclass(frozen=True)
class PushbuttonReq:
    consts: PushbuttonConsts = PushbuttonConsts()
    table: str = "revised"
    strict: bool = False
    output: str = "f_Pushbutton"

    def __call__(self, inputs, schedule):
        return {self.output: pushbutton_req(inputs["m"], schedule, self.consts, self.table, strict=self.strict)}

    def contexts(self, inputs, schedule):
        return pushbutton_contexts(inputs["m"], schedule, self.consts)

    def diagnose(self, inputs, schedule, tick: int) -> str | None:
        ctx = self.contexts(inputs, schedule)[tick]
        hits = PUSHBUTTON_TABLES[self.table].matching(ctx)
        if len(hits) > 1:
            return "table-overlap"
        if not hits:
            return "table-gap"
        return None


def build_pushbutton_impl(consts: PushbuttonConsts = PushbuttonConsts()) -> Netlist:
    """Two TONs on the decoded button, then a two-stage selector for the output enum."""
    return Netlist(
        name="pushbutton",
        inputs=("m",),
        outputs=("f_Pushbutton",),
        blocks=(
            Block("EQ_pressed", "EQ", {"value": _PRESSED}),
            Block("TON_debounce", "TON", {"pt": consts.k_debounce - consts.delta_l}),
            Block("TON_stuck", "TON", {"pt": consts.k_stuck - consts.delta_l}),
            Block("C_notdebounced", "CONST", {"value": ND}),
            Block("C_debounced", "CONST", {"value": DB}),
            Block("C_stuck", "CONST", {"value": ST}),
            Block("SEL_debounce", "SEL"),
            Block("SEL_stuck", "SEL"),
        ),
        wires=(
            Wire("m", "m", ("EQ_pressed.in",)),
            Wire("pressed", "EQ_pressed.out", ("TON_debounce.in", "TON_stuck.in")),
            Wire("debounced", "TON_debounce.q", ("SEL_debounce.g",)),
            Wire("et_debounce", "TON_debounce.et", ()),
            Wire("stuck", "TON_stuck.q", ("SEL_stuck.g",)),
            Wire("et_stuck", "TON_stuck.et", ()),
            Wire("v_notdebounced", "C_notdebounced.out", ("SEL_debounce.in0",)),
            Wire("v_debounced", "C_debounced.out", ("SEL_debounce.in1",)),
            Wire("v_stuck", "C_stuck.out", ("SEL_stuck.in1",)),
            Wire("s1", "SEL_debounce.out", ("SEL_stuck.in0",)),
            Wire("f_Pushbutton", "SEL_stuck.out", ("f_Pushbutton",)),
        ),
    )


# -- presets --------------------------------------------------------------------------------


@dataclass(frozen=True)
class Subsystem:
    """A netlist, its requirement oracle, and the per-input abstraction at the boundary."""

    name: str
    netlist: Netlist
    req: Any
    boundary: Mapping[str, Any]
    tables: tuple[TableSpec, ...]


def trip_sealed_in(variant: str = "original", consts: SealedInConsts = SealedInConsts()) -> Subsystem:
    return Subsystem(
        "trip-sealed-in",
        build_trip_sealedin_impl(variant, consts),
        TripSealedInReq(consts),
        {"Trip": abst_parm_trip},
        (SEALEDIN_REQ,),
    )


def pushbutton(variant: str = "revised", consts: PushbuttonConsts = PushbuttonConsts()) -> Subsystem:
    if variant not in ("original", "revised"):
        raise ValueError(f"unknown variant {variant!r}")
    return Subsystem(
        "pushbutton",
        build_pushbutton_impl(consts),
        PushbuttonReq(consts, variant),
        {},
        (PUSHBUTTON_TABLES[variant],),
    )
