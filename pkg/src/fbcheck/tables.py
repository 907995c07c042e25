"""Executable horizontal condition tables.

A table is an ordered list of rows ``guard -> result``.  Guards are predicates
over a per-tick context (a mapping of signal names to values).  A result may be a
constant, a callable of the context, or :data:`NC` ("no change"), which yields the
table's own value at the previous tick.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

Context = Mapping[str, Any]


class _NoChange:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "NC"

    def __reduce__(self):
        return (_NoChange, ())


NC = _NoChange()


class TableFault(Exception):
    """A table could not produce a unique row at some tick."""

    category = "table"

    def __init__(self, table: str, tick: int | None, rows: Sequence[int], message: str):
        super().__init__(message)
        self.table = table
        self.tick = tick
        self.rows = tuple(rows)


class TableGap(TableFault):
    category = "table-gap"


class TableOverlap(TableFault):
    category = "table-overlap"


@dataclass(frozen=True)
class Row:
    label: str
    guard: Callable[[Context], bool]
    result: Any

    def value(self, ctx: Context, prev: Any) -> Any:
        if self.result is NC:
            return prev
        if callable(self.result):
            return self.result(ctx)
        return self.result


@dataclass(frozen=True)
class TableSpec:
    name: str
    rows: tuple[Row, ...]
    signals: tuple[str, ...] = ()
    initial: Any = None
    has_initial: bool = False
    notes: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))
        if any(r.result is NC for r in self.rows) and not self.has_initial:
            raise ValueError(f"table {self.name!r} uses NC but declares no initial value")

    def matching(self, ctx: Context) -> list[int]:
        return [i for i, r in enumerate(self.rows) if r.guard(ctx)]

    def evaluate(self, ctx: Context, prev: Any = None, *, tick: int | None = None, strict: bool = True) -> Any:
        """Value of the table under ``ctx``.

        ``strict`` demands exactly one matching row.  Otherwise rows are tried
        in order, as an IF/ELSIF chain; a gap is still a fault.
        """
        if strict:
            hits = self.matching(ctx)
            if len(hits) > 1:
                raise TableOverlap(
                    self.name, tick, hits,
                    f"{self.name}: rows {[self.rows[i].label for i in hits]} overlap at tick {tick}",
                )
            if not hits:
                raise TableGap(self.name, tick, (), f"{self.name}: no row applies at tick {tick}")
            return self.rows[hits[0]].value(ctx, prev)
        for row in self.rows:
            if row.guard(ctx):
                return row.value(ctx, prev)
        raise TableGap(self.name, tick, (), f"{self.name}: no row applies at tick {tick}")

    def run(self, contexts: Sequence[Context], *, strict: bool = True) -> tuple:
        """Evaluate over a whole trajectory of contexts, threading NC through time."""
        out = []
        prev = self.initial
        for t, ctx in enumerate(contexts):
            prev = self.evaluate(ctx, prev, tick=t, strict=strict)
            out.append(prev)
        return tuple(out)


def table(name: str, rows: Sequence[tuple[str, Callable[[Context], bool], Any]], *,
          signals: Sequence[str] = (), initial: Any = None, has_initial: bool = False) -> TableSpec:
    return TableSpec(
        name,
        tuple(Row(label, guard, result) for label, guard, result in rows),
        tuple(signals),
        initial,
        has_initial,
    )
