"""Plain-text timing diagrams and CSV traces."""

from __future__ import annotations

import csv
import io
from typing import Any, Mapping, Sequence


def _is_bool_lane(values: Sequence[Any]) -> bool:
    return all(isinstance(v, bool) for v in values)


def _is_int_lane(values: Sequence[Any]) -> bool:
    return all(isinstance(v, int) and not isinstance(v, bool) for v in values)


def timing_diagram(signals: Mapping[str, Sequence[Any]], *, samples: Sequence[int] | None = None) -> str:
    """Render one lane per signal.

    Boolean lanes take two rows with ``+`` at each edge, integer lanes print the
    value per tick, and any other lane prints a letter per value with a legend.
    """
    if not signals:
        return ""
    length = len(next(iter(signals.values())))
    widest = max((len(str(v)) for vals in signals.values() if _is_int_lane(vals) for v in vals), default=1)
    w = max(2, widest + 1)
    label_w = max(len(n) for n in [*signals, "tick", "sample"]) + 2
    lines = []

    ruler = [" "] * (length * w)
    for t in range(0, length, 5):
        for i, ch in enumerate(str(t)):
            if t * w + i < len(ruler):
                ruler[t * w + i] = ch
    lines.append("tick".ljust(label_w) + "".join(ruler).rstrip())
    if samples is not None:
        row = [" "] * (length * w)
        for s in samples:
            if s < length:
                row[s * w] = "^"
        lines.append("sample".ljust(label_w) + "".join(row).rstrip())

    legend = []
    for name, vals in signals.items():
        if _is_bool_lane(vals):
            hi, lo = [], []
            for t, v in enumerate(vals):
                edge = t > 0 and v != vals[t - 1]
                h = ("-" * w) if v else (" " * w)
                low = (" " * w) if v else ("-" * w)
                if edge:
                    h, low = "+" + h[1:], "+" + low[1:]
                hi.append(h)
                lo.append(low)
            lines.append((" " * label_w + "".join(hi)).rstrip())
            lines.append(name.ljust(label_w) + "".join(lo).rstrip())
        elif _is_int_lane(vals):
            lines.append(name.ljust(label_w) + "".join(str(v).ljust(w) for v in vals).rstrip())
        else:
            letters: dict[Any, str] = {}
            for v in vals:
                letters.setdefault(v, chr(ord("A") + len(letters)))
            lines.append(name.ljust(label_w) + "".join(letters[v].ljust(w) for v in vals).rstrip())
            legend.append(f"  {name}: " + ", ".join(f"{c}={v}" for v, c in letters.items()))
    if legend:
        lines.append("legend:")
        lines.extend(legend)
    return "\n".join(lines) + "\n"


# -- CSV -------------------------------------------------------------------------------------


def _cell(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def _parse_cell(s: str) -> Any:
    if s == "true":
        return True
    if s == "false":
        return False
    try:
        return int(s)
    except ValueError:
        return s


def trace_to_csv(signals: Mapping[str, Sequence[Any]]) -> str:
    names = list(signals)
    length = len(signals[names[0]]) if names else 0
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["tick", *names])
    for t in range(length):
        w.writerow([t, *(_cell(signals[n][t]) for n in names)])
    return buf.getvalue()


def csv_to_trace(text: str) -> dict[str, tuple]:
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    if header[0] != "tick":
        raise ValueError("first CSV column must be 'tick'")
    for i, row in enumerate(body):
        if int(row[0]) != i:
            raise ValueError(f"CSV row {i + 2}: expected tick {i}, got {row[0]}")
    return {name: tuple(_parse_cell(r[j]) for r in body) for j, name in enumerate(header) if j > 0}
