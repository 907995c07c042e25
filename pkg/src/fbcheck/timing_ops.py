"""Sustained-timing operators: Held_For and its sampled refinements, and the timers
that implement them.

All durations are in physical units (multiples of ``delta``).  ``p`` is always a
tick-level boolean trajectory; the sampled operators only ever look at ``p`` on
sample ticks.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Sequence

from .time_core import DomainError, SampleSchedule, TickDomain, is_filtered, left_sample


class HeldForVerdict(enum.Enum):
    MUST_HOLD = "MustHold"
    MUST_NOT_HOLD = "MustNotHold"
    FREE = "Free"


def held_for_exact(p: Sequence[bool], d: int, t: int, delta: int = 1) -> bool:
    """True iff ``p`` held on every tick of some window ``[tj, t]`` spanning at least ``d``."""
    if d < 0:
        raise DomainError(f"negative duration {d}")
    # scan tj downwards; once p fails no earlier tj can work
    tj = t
    while tj >= 0 and p[tj]:
        if (t - tj) * delta >= d:
            return True
        tj -= 1
    return False


def held_for_envelope(p: Sequence[bool], d: int, dl: int, dr: int, t: int, delta: int = 1) -> HeldForVerdict:
    """Classify tick ``t`` under the nondeterministic ``Held_For(d, dl, dr)`` requirement."""
    if dl > d:
        raise DomainError(f"left tolerance {dl} exceeds duration {d}")
    if dl < 0 or dr < 0:
        raise DomainError("tolerances must be non-negative")
    if held_for_exact(p, d + dr, t, delta):
        return HeldForVerdict.MUST_HOLD
    if not held_for_exact(p, d - dl, t, delta):
        return HeldForVerdict.MUST_NOT_HOLD
    return HeldForVerdict.FREE


def held_for_s(p: Sequence[bool], d: int, schedule: SampleSchedule, ne: int) -> bool:
    """Sampled Held_For, defined only at sample ``ne``.

    Searches for a start sample ``n0 <= ne`` such that ``p`` holds on every
    sample from ``n0`` to ``ne`` and the samples span at least ``d``.
    """
    if not 0 <= ne < len(schedule):
        raise DomainError(f"sample index {ne} outside 0..{len(schedule) - 1}")
    s = schedule.samples
    delta = schedule.domain.delta
    n0 = ne
    while n0 >= 0 and p[s[n0]]:
        if (s[ne] - s[n0]) * delta >= d:
            return True
        n0 -= 1
    return False


def held_for_i(p: Sequence[bool], d: int, schedule: SampleSchedule, t: int) -> bool:
    return held_for_s(p, d, schedule, left_sample(schedule, t))


def timer_s(p: Sequence[bool], schedule: SampleSchedule, timeout: int, ne: int) -> int:
    """Saturating elapsed time of ``p`` across samples, evaluated at sample ``ne``."""
    if not 0 <= ne < len(schedule):
        raise DomainError(f"sample index {ne} outside 0..{len(schedule) - 1}")
    return timer_s_all(p, schedule, timeout)[ne]


def timer_s_all(p: Sequence[bool], schedule: SampleSchedule, timeout: int) -> tuple[int, ...]:
    """timer_s at every sample, by running the recursion forward once."""
    if timeout < 0:
        raise DomainError(f"negative timeout {timeout}")
    s = schedule.samples
    delta = schedule.domain.delta
    out = [0]
    for n in range(1, len(s)):
        if not p[s[n]] or not p[s[n - 1]]:
            out.append(0)
        else:
            out.append(min(timeout, out[-1] + (s[n] - s[n - 1]) * delta))
    return tuple(out)


def timer_i(p: Sequence[bool], schedule: SampleSchedule, timeout: int, t: int) -> int:
    return timer_s(p, schedule, timeout, left_sample(schedule, t))


# -- whole-trajectory forms, used where every tick is needed ---------------------


def held_for_s_all(p: Sequence[bool], d: int, schedule: SampleSchedule) -> tuple[bool, ...]:
    """held_for_s at every sample (same search as :func:`held_for_s`, without per-call checks)."""
    s = schedule.samples
    delta = schedule.domain.delta
    out = []
    for ne in range(len(s)):
        end = s[ne]
        n0 = ne
        hit = False
        while n0 >= 0 and p[s[n0]]:
            if (end - s[n0]) * delta >= d:
                hit = True
                break
            n0 -= 1
        out.append(hit)
    return tuple(out)


def held_for_i_trajectory(p: Sequence[bool], d: int, schedule: SampleSchedule) -> tuple[bool, ...]:
    per_sample = held_for_s_all(p, d, schedule)
    return tuple(per_sample[n] for n in schedule.left_sample_table())


def timer_i_trajectory(p: Sequence[bool], schedule: SampleSchedule, timeout: int) -> tuple[int, ...]:
    per_sample = timer_s_all(p, schedule, timeout)
    return tuple(per_sample[n] for n in schedule.left_sample_table())


def check_timer_general(
    max_samples: int = 8,
    gaps: Sequence[int] = (2, 3, 4),
    tmin: int = 2,
    tmax: int = 4,
    durations: Sequence[int] = (1, 2, 3, 4, 5),
    delta: int = 1,
) -> tuple[int, int, tuple | None]:
    """Exhaustive TimerGeneral_I check: held_for_i(p, d) == (timer_i(p, d) >= d) at every tick.

    Covers every schedule of 1..``max_samples`` samples with tick gaps from
    ``gaps``, every boolean valuation of the samples (held between samples) and
    every duration ``d * delta`` for ``d`` in ``durations``.  The horizon runs to
    the tick before the next sample could at the latest arrive.  Returns
    ``(cases, violations, first witness)``.
    """
    cases = violations = 0
    witness = None
    tail = tmax // delta - 1
    for n in range(1, max_samples + 1):
        for gap_seq in itertools.product(gaps, repeat=n - 1):
            sched = SampleSchedule.from_gaps(TickDomain(delta, sum(gap_seq) + tail), gap_seq, tmin, tmax)
            lst = sched.left_sample_table()
            for vals in itertools.product((False, True), repeat=n):
                p = tuple(vals[k] for k in lst)
                for d in durations:
                    dur = d * delta
                    cases += 1
                    held = held_for_i_trajectory(p, dur, sched)
                    timer = timer_i_trajectory(p, sched, dur)
                    if any(h != (x >= dur) for h, x in zip(held, timer)):
                        violations += 1
                        if witness is None:
                            t = next(t for t in range(len(p)) if held[t] != (timer[t] >= dur))
                            witness = (sched.samples, vals, dur, t)
    return cases, violations, witness


# -- refinement experiment ----------------------------------------------------------


@dataclass(frozen=True)
class RefinementResult:
    """Outcome for one parameter combination.

    ``missed`` counts cases where the envelope says MustHold and the sampled
    operator is false; ``spurious`` counts cases where it says MustNotHold and
    the sampled operator is true.  ``violations`` counts cases with either.
    """

    tmin: int
    tmax: int
    dl: int
    dr: int
    d: int
    cases: int
    violations: int
    missed: int = 0
    spurious: int = 0
    witness: tuple | None = None

    @property
    def refines(self) -> bool:
        return self.violations == 0


def refinement_experiment(
    delta: int = 1,
    horizon: int = 10,
    gap_bounds: Sequence[tuple[int, int]] = ((1, 1), (1, 2), (2, 2), (2, 3)),
    durations: Sequence[int] = (2, 3, 4),
    tolerances: Sequence[tuple[int, int]] = ((0, 0), (1, 0), (0, 1), (1, 1), (1, 2), (2, 2)),
) -> list[RefinementResult]:
    """Find which (tmin, tmax, dl, dr) make held_for_i a refinement of the envelope.

    Exhaustive over filtered boolean signals and every schedule whose tick gaps
    lie in ``[tmin, tmax]`` (given in ticks, as are ``d``, ``dl`` and ``dr``).
    The witness is ``(samples, p, tick, verdict)`` for the first violating case.
    """
    dom = TickDomain(delta, horizon)
    signals = [tuple(bits) for bits in itertools.product((False, True), repeat=horizon + 1)]
    results = []
    for lo, hi in gap_bounds:
        schedules = list(_schedules(dom, lo, hi))
        filtered = {
            id(sch): [p for p in signals if is_filtered(p, sch)] for sch in schedules
        }
        for d in durations:
            for dl, dr in tolerances:
                if dl > d:
                    continue
                cases = violations = missed = spurious = 0
                witness = None
                for sch in schedules:
                    for p in filtered[id(sch)]:
                        cases += 1
                        impl = held_for_i_trajectory(p, (d - dl) * delta, sch)
                        miss = spur = False
                        for t in dom.ticks:
                            v = held_for_envelope(p, d * delta, dl * delta, dr * delta, t, delta)
                            m = v is HeldForVerdict.MUST_HOLD and not impl[t]
                            s = v is HeldForVerdict.MUST_NOT_HOLD and impl[t]
                            if (m or s) and witness is None:
                                witness = (sch.samples, p, t, v.value)
                            miss, spur = miss or m, spur or s
                        missed += miss
                        spurious += spur
                        violations += miss or spur
                results.append(
                    RefinementResult(lo * delta, hi * delta, dl * delta, dr * delta, d * delta, cases, violations,
                                     missed, spurious, witness)
                )
    return results


def _schedules(dom: TickDomain, lo: int, hi: int):
    """Every schedule from tick 0 with gaps in [lo, hi] ticks whose next sample would overshoot."""

    def extend(samples):
        last = samples[-1]
        grown = False
        for g in range(lo, hi + 1):
            if last + g <= dom.horizon:
                grown = True
                yield from extend(samples + [last + g])
        if not grown:
            yield SampleSchedule(dom, tuple(samples), lo * dom.delta, hi * dom.delta)

    yield from extend([0])
