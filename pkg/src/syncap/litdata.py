"""Published capacity lower bounds used as ``C_s`` inputs, and comparison tables.

Two CSV layouts are recognised by their header line::

    p_d,p_i,c_lb,source                                      (C_s table)
    p_d,p_i,p_s,lb_gallager,lb_eq10,lb_dario2,ub_dario2      (comparison table)
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable

from .errors import MissingKeyError, ValidationError
from .penalties import binary_entropy

CS_HEADER = ["p_d", "p_i", "c_lb", "source"]
COMPARISON_HEADER = ["p_d", "p_i", "p_s", "lb_gallager", "lb_eq10", "lb_dario2", "ub_dario2"]
KEY_TOL = 1e-12


@dataclass(frozen=True)
class CsRow:
    p_d: float
    p_i: float
    c_lb: float
    source: str


@dataclass(frozen=True)
class ComparisonRow:
    p_d: float
    p_i: float
    p_s: float
    lb_gallager: float | None
    lb_eq10: float | None
    lb_dario2: float | None
    ub_dario2: float | None

    @property
    def lower_bounds(self) -> dict[str, float]:
        cols = {"lb_gallager": self.lb_gallager, "lb_eq10": self.lb_eq10, "lb_dario2": self.lb_dario2}
        return {k: v for k, v in cols.items() if v is not None}


@dataclass(frozen=True)
class LiteratureTable:
    rows: tuple[CsRow, ...] = ()
    comparison: tuple[ComparisonRow, ...] = ()

    def keys(self) -> list[tuple[float, float]]:
        return [(r.p_d, r.p_i) for r in self.rows]


def fixture_path(name: str) -> Path:
    """Path of a CSV shipped with the package (``tableV.csv`` or ``cid.csv``)."""
    return Path(str(resources.files("syncap") / "data" / name))


def _num(text: str, where: str, optional: bool = False) -> float | None:
    text = text.strip()
    if text == "" and optional:
        return None
    try:
        v = float(text)
    except ValueError:
        raise ValidationError(f"{where}: {text!r} is not a number") from None
    if math.isnan(v):
        raise ValidationError(f"{where}: NaN is not allowed")
    return v


def _prob(v: float, name: str, where: str) -> float:
    if not 0.0 <= v <= 1.0:
        raise ValidationError(f"{where}: {name}={v} is outside [0, 1]")
    return v


def parse_table(text: str, origin: str = "<string>") -> LiteratureTable:
    lines = text.splitlines()
    if not any(line.strip() for line in lines):
        return LiteratureTable()
    reader = csv.reader(io.StringIO(text))
    header = [h.strip() for h in next(reader)]
    if header == CS_HEADER:
        return _parse_cs(reader, origin)
    if header == COMPARISON_HEADER:
        return _parse_comparison(reader, origin)
    raise ValidationError(f"{origin}:1: unrecognised header {','.join(header)!r}")


def _parse_cs(reader, origin) -> LiteratureTable:
    rows, seen = [], {}
    for rec in reader:
        line = reader.line_num
        if not rec or all(not c.strip() for c in rec):
            continue
        where = f"{origin}:{line}"
        if len(rec) != len(CS_HEADER):
            raise ValidationError(f"{where}: expected {len(CS_HEADER)} fields, got {len(rec)}")
        p_d = _prob(_num(rec[0], where), "p_d", where)
        p_i = _prob(_num(rec[1], where), "p_i", where)
        c_lb = _num(rec[2], where)
        if not 0.0 <= c_lb <= 1.0:
            raise ValidationError(f"{where}: c_lb={c_lb} for (p_d={p_d}, p_i={p_i}) is outside [0, 1]")
        if (p_d, p_i) in seen:
            raise ValidationError(f"{where}: duplicate key (p_d={p_d}, p_i={p_i}), first seen on line {seen[(p_d, p_i)]}")
        seen[(p_d, p_i)] = line
        rows.append(CsRow(p_d, p_i, c_lb, rec[3]))
    return LiteratureTable(rows=tuple(rows))


def _parse_comparison(reader, origin) -> LiteratureTable:
    rows = []
    for rec in reader:
        line = reader.line_num
        if not rec or all(not c.strip() for c in rec):
            continue
        where = f"{origin}:{line}"
        if len(rec) != len(COMPARISON_HEADER):
            raise ValidationError(f"{where}: expected {len(COMPARISON_HEADER)} fields, got {len(rec)}")
        p = [_prob(_num(rec[i], where), COMPARISON_HEADER[i], where) for i in range(3)]
        vals = [_num(rec[i], where, optional=True) for i in range(3, 7)]
        row = ComparisonRow(*p, *vals)
        ub = row.ub_dario2
        for name, v in row.lower_bounds.items():
            if ub is not None and v > ub:
                raise ValidationError(f"{where}: {name}={v} exceeds ub_dario2={ub}")
        rows.append(row)
    return LiteratureTable(comparison=tuple(rows))


def load_table(path: str | Path) -> LiteratureTable:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"{path}: cannot read ({exc.strerror})") from exc
    return parse_table(text, str(path))


def dump_table(table: LiteratureTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if table.rows:
        w.writerow(CS_HEADER)
        for r in table.rows:
            w.writerow([repr(r.p_d), repr(r.p_i), repr(r.c_lb), r.source])
    elif table.comparison:
        w.writerow(COMPARISON_HEADER)
        for r in table.comparison:
            w.writerow(["" if v is None else repr(v) for v in (r.p_d, r.p_i, r.p_s, r.lb_gallager, r.lb_eq10, r.lb_dario2, r.ub_dario2)])
    return buf.getvalue()


def save_table(table: LiteratureTable, path: str | Path) -> None:
    if table.rows and table.comparison:
        raise ValidationError("a file holds either C_s rows or comparison rows, not both")
    Path(path).write_text(dump_table(table), encoding="utf-8")


def _same(a: float, b: float) -> bool:
    return abs(a - b) <= KEY_TOL


def lookup_cs(table: LiteratureTable, p_d: float, p_i: float = 0.0, interpolate: str | None = None) -> float:
    """Exact-key lookup; ``interpolate='linear'`` interpolates in p_d at fixed p_i (not a rigorous bound)."""
    for r in table.rows:
        if _same(r.p_d, p_d) and _same(r.p_i, p_i):
            return r.c_lb
    if interpolate == "linear":
        line = sorted((r.p_d, r.c_lb) for r in table.rows if _same(r.p_i, p_i))
        for (x0, y0), (x1, y1) in zip(line, line[1:]):
            if x0 <= p_d <= x1:
                return y0 + (y1 - y0) * (p_d - x0) / (x1 - x0)
    elif interpolate is not None:
        raise ValidationError(f"unknown interpolation {interpolate!r}")
    near = sorted(table.keys(), key=lambda k: abs(k[0] - p_d) + abs(k[1] - p_i))[:3]
    listing = ", ".join(f"(p_d={a:g}, p_i={b:g})" for a, b in near) or "none"
    raise MissingKeyError(f"no C_s entry for (p_d={p_d:g}, p_i={p_i:g}); nearest available: {listing}")


def cs_source(table: LiteratureTable, p_d: float, p_i: float = 0.0) -> str:
    for r in table.rows:
        if _same(r.p_d, p_d) and _same(r.p_i, p_i):
            return r.source
    return "interpolated (not a rigorous bound)"


def implied_cid(rows: Iterable[ComparisonRow]) -> dict[tuple[float, float], list[tuple[float, float]]]:
    """Invert the ``lb_eq10`` column: C_id = LB + (1 - p_d + p_i) H_b(p_s), grouped by (p_d, p_i).

    Values are ``(p_s, implied C_id)`` pairs.
    """
    out: dict[tuple[float, float], list[tuple[float, float]]] = {}
    for r in rows:
        if r.lb_eq10 is None:
            continue
        c = r.lb_eq10 + (1.0 - r.p_d + r.p_i) * binary_entropy(r.p_s)
        out.setdefault((r.p_d, r.p_i), []).append((r.p_s, c))
    return out
