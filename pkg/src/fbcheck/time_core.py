"""Discrete time: ticks, sample schedules, trajectories and the filtered-signal test.

Ticks are integer indices ``0..horizon``; tick ``n`` sits at physical time
``n * delta``.  Durations are plain integers in the same physical unit as
``delta`` and must be exact multiples of it.  Trajectories are tuples of length
``horizon + 1``.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Hashable, Iterable, NamedTuple, Sequence

Trajectory = tuple


class DomainError(ValueError):
    """A tick, sample or duration lies outside the modelled domain."""


@dataclass(frozen=True)
class TickDomain:
    delta: int = 1
    horizon: int = 1

    def __post_init__(self):
        if not isinstance(self.delta, int) or self.delta <= 0:
            raise DomainError(f"delta must be a positive integer, got {self.delta!r}")
        # horizon 0 is allowed: a shrunk counterexample may consist of tick 0 only
        if not isinstance(self.horizon, int) or self.horizon < 0:
            raise DomainError(f"horizon must be a non-negative integer, got {self.horizon!r}")

    @property
    def ticks(self) -> range:
        return range(self.horizon + 1)

    def time(self, t: int) -> int:
        return t * self.delta

    def to_ticks(self, duration: int) -> int:
        """Number of ticks spanned by ``duration``; rejects non-multiples of delta."""
        check_duration(duration, self.delta)
        return duration // self.delta

    def check_tick(self, t: int) -> None:
        if not 0 <= t <= self.horizon:
            raise DomainError(f"tick {t} outside 0..{self.horizon}")


def check_duration(duration: int, delta: int, name: str = "duration") -> int:
    if not isinstance(duration, int) or isinstance(duration, bool):
        raise DomainError(f"{name} must be an integer, got {duration!r}")
    if duration < 0:
        raise DomainError(f"{name} must be non-negative, got {duration}")
    if duration % delta:
        raise DomainError(f"{name}={duration} is not a multiple of delta={delta}")
    return duration


class TickNav(NamedTuple):
    init: bool
    pre: int | None
    next: int | None
    rank: int


def is_init(t: int) -> bool:
    return t == 0


def pre(domain: TickDomain, t: int) -> int:
    domain.check_tick(t)
    if t == 0:
        raise DomainError("not_init violated: pre(0) is undefined")
    return t - 1


def next_tick(domain: TickDomain, t: int) -> int:
    domain.check_tick(t)
    if t == domain.horizon:
        raise DomainError(f"next({t}) leaves the horizon {domain.horizon}")
    return t + 1


def rank(domain: TickDomain, t: int) -> int:
    domain.check_tick(t)
    return t


def tick_navigation(domain: TickDomain, t: int) -> TickNav:
    """All four tick operators at once; undefined neighbours come back as None."""
    domain.check_tick(t)
    return TickNav(
        init=is_init(t),
        pre=t - 1 if t > 0 else None,
        next=t + 1 if t < domain.horizon else None,
        rank=t,
    )


@dataclass(frozen=True)
class SampleSchedule:
    """Strictly increasing sample ticks whose physical gaps lie in [tmin, tmax]."""

    domain: TickDomain
    samples: tuple[int, ...]
    tmin: int
    tmax: int
    first_sample_zero: bool = True

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        d = self.domain.delta
        check_duration(self.tmin, d, "tmin")
        check_duration(self.tmax, d, "tmax")
        if not 0 < self.tmin <= self.tmax:
            raise DomainError(f"need 0 < tmin <= tmax, got tmin={self.tmin} tmax={self.tmax}")
        s = self.samples
        if not s:
            raise DomainError("a schedule needs at least one sample")
        if self.first_sample_zero:
            if s[0] != 0:
                raise DomainError(f"first sample must be tick 0, got {s[0]}")
        elif not 0 <= s[0] * d <= self.tmax:
            raise DomainError(f"first sample {s[0]} must lie within tmax of tick 0")
        for a, b in zip(s, s[1:]):
            gap = (b - a) * d
            if not self.tmin <= gap <= self.tmax:
                raise DomainError(
                    f"gap {a}->{b} is {gap}, outside [{self.tmin}, {self.tmax}]"
                )
        if s[-1] > self.domain.horizon:
            raise DomainError(f"last sample {s[-1]} beyond horizon {self.domain.horizon}")

    @classmethod
    def every(cls, domain: TickDomain, step: int = 1) -> "SampleSchedule":
        samples = tuple(range(0, domain.horizon + 1, step))
        gap = step * domain.delta
        return cls(domain, samples, gap, gap)

    @classmethod
    def from_gaps(cls, domain: TickDomain, gaps: Iterable[int], tmin: int, tmax: int) -> "SampleSchedule":
        """Build from tick gaps; the horizon of ``domain`` must cover the last sample."""
        samples = [0]
        for g in gaps:
            samples.append(samples[-1] + g)
        return cls(domain, tuple(samples), tmin, tmax)

    def __len__(self) -> int:
        return len(self.samples)

    def time(self, n: int) -> int:
        """Physical time of sample ``n``."""
        return self.samples[n] * self.domain.delta

    @property
    def tmax_ticks(self) -> int:
        return self.tmax // self.domain.delta

    def truncate(self, horizon: int) -> "SampleSchedule":
        dom = TickDomain(self.domain.delta, horizon)
        kept = tuple(s for s in self.samples if s <= horizon)
        return SampleSchedule(dom, kept, self.tmin, self.tmax, self.first_sample_zero)

    def left_sample_table(self) -> tuple[int, ...]:
        """left_sample for every tick of the horizon, as one tuple."""
        return self._left_samples

    @cached_property
    def _left_samples(self) -> tuple[int, ...]:
        out = []
        n = -1
        nxt = 0
        s = self.samples
        for t in self.domain.ticks:
            while nxt < len(s) and s[nxt] <= t:
                n = nxt
                nxt += 1
            out.append(n)
        if out and out[0] < 0:
            raise DomainError(f"ticks before the first sample {s[0]} have no left sample")
        return tuple(out)

    def to_dict(self) -> dict:
        return {"samples": list(self.samples), "tmin": self.tmin, "tmax": self.tmax}


def left_sample(schedule: SampleSchedule, t: int) -> int:
    """Index of the largest sample at or before tick ``t``."""
    n = bisect_right(schedule.samples, t) - 1
    if n < 0:
        raise DomainError(f"tick {t} precedes the first sample {schedule.samples[0]}")
    return n


# -- trajectories -----------------------------------------------------------


def constant(value: Any, horizon: int) -> Trajectory:
    return (value,) * (horizon + 1)


def from_changes(horizon: int, changes: Sequence[tuple[int, Any]]) -> Trajectory:
    """Expand ``[(tick, value), ...]`` (first entry at tick 0) into a trajectory."""
    if not changes:
        raise DomainError("a change list needs at least the value at tick 0")
    ordered = sorted(changes, key=lambda c: c[0])
    if ordered[0][0] != 0:
        raise DomainError(f"change list must start at tick 0, starts at {ordered[0][0]}")
    out = []
    idx = 0
    for t in range(horizon + 1):
        while idx + 1 < len(ordered) and ordered[idx + 1][0] <= t:
            idx += 1
        out.append(ordered[idx][1])
    return tuple(out)


def to_changes(traj: Sequence[Any]) -> list[tuple[int, Any]]:
    out = [(0, traj[0])]
    for t in range(1, len(traj)):
        if traj[t] != traj[t - 1]:
            out.append((t, traj[t]))
    return out


def change_points(traj: Sequence[Hashable]) -> list[int]:
    return [t for t in range(1, len(traj)) if traj[t] != traj[t - 1]]


def sample_hold(values: Sequence[Any], schedule: SampleSchedule) -> Trajectory:
    """Trajectory taking ``values[n]`` from sample n until the next sample."""
    if len(values) != len(schedule):
        raise DomainError(f"{len(values)} values for {len(schedule)} samples")
    return tuple(values[n] for n in schedule.left_sample_table())


# -- filtered signals ---------------------------------------------------------


class Filtered(NamedTuple):
    ok: bool
    witness: int | None = None

    def __bool__(self) -> bool:
        return self.ok


def is_filtered(p: Sequence[Hashable], schedule: SampleSchedule) -> Filtered:
    """Check that ``p`` has no spikes the schedule could miss.

    A new value must persist for ``tmax`` after it appears, and nothing may
    change within ``tmax`` of tick 0.  On failure the witness is the tick at
    which the offending value first appears.
    """
    k = schedule.tmax_ticks
    h = len(p) - 1
    last_change = None
    for t in range(1, h + 1):
        if p[t] == p[t - 1]:
            continue
        # p(t-1) /= p(t): clause (b) for t <= tmax, clause (a) for the previous change
        if t <= k:
            return Filtered(False, t)
        if last_change is not None and t <= last_change - 1 + k:
            return Filtered(False, last_change)
        last_change = t
    return Filtered(True)
