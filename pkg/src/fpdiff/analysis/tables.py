"""Rate tables over comparison records.

Every rate is a count divided by the nominal number of comparisons in its
slice: one comparison per program for a single (compiler pair, level) or
(compiler, level) cell, so totals over levels are sums of the level rates.
"""

from __future__ import annotations

import itertools
import json
import math
import statistics
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

from ..compiler import LEVELS
from ..diffexec.compare import BASELINE, BASELINE_LEVEL, CROSS, ComparisonRecord
from ..diffexec.fpbits import CATEGORY_ORDER, Category

TOTAL = "Total"
ABSENT = "--"


class DomainError(ValueError):
    pass


def nominal_comparisons(n_compilers: int, n_levels: int, n_programs: int) -> int:
    return math.comb(n_compilers, 2) * n_levels * n_programs


def inconsistency_rate(n_incons: int, n_compilers: int, n_levels: int, n_programs: int) -> float:
    """Fraction of inconsistent comparisons among C(C,2) * O * N."""
    if n_compilers < 2 or n_levels < 1 or n_programs < 1:
        raise DomainError("need at least two compilers, one level and one program")
    if n_incons < 0:
        raise DomainError("negative inconsistency count")
    total = nominal_comparisons(n_compilers, n_levels, n_programs)
    if n_incons > total:
        raise DomainError(f"{n_incons} inconsistencies exceed {total} comparisons")
    return n_incons / total


def percent(rate: float) -> str:
    return f"{100.0 * rate:.2f}%"


@dataclass(frozen=True)
class DigitStats:
    min: int
    max: int
    mean: float

    @classmethod
    def of(cls, values: Sequence[int]) -> "DigitStats | None":
        if not values:
            return None
        return cls(min(values), max(values), statistics.fmean(values))

    def __str__(self) -> str:
        return f"{self.min} / {self.max} / {self.mean:.2f}"


@dataclass(frozen=True)
class Cell:
    count: int
    rate: float | None = None
    digits: DigitStats | None = None
    nonfinite: int | None = None  # inconsistencies left out of the digit stats

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"count": self.count}
        if self.rate is not None:
            out["rate"] = self.rate
        if self.digits is not None:
            out["digits"] = {"min": self.digits.min, "max": self.digits.max, "mean": self.digits.mean}
        if self.nonfinite is not None:
            out["nonfinite"] = self.nonfinite
        return out


@dataclass
class RateTable:
    name: str
    title: str
    rows: list[str]
    columns: list[str]
    cells: dict[tuple[str, str], Cell] = field(default_factory=dict)
    denominator: int | None = None  # nominal comparisons behind one cell

    def get(self, row: str, column: str) -> Cell | None:
        return self.cells.get((row, column))

    def count(self, row: str, column: str) -> int:
        cell = self.get(row, column)
        return cell.count if cell else 0

    def to_json(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "title": self.title,
            "denominator": self.denominator,
            "rows": self.rows,
            "columns": self.columns,
            "cells": [
                {"row": r, "column": c, **self.cells[(r, c)].to_json()}
                for r in self.rows for c in self.columns if (r, c) in self.cells
            ],
        }

    def render_text(self) -> str:
        def show(cell: Cell | None) -> str:
            if cell is None:
                return ABSENT
            text = percent(cell.rate) if cell.rate is not None else str(cell.count)
            if cell.digits is not None:
                text += f" ({cell.digits})"
            return text

        grid = [[""] + self.columns]
        grid += [[r] + [show(self.get(r, c)) for c in self.columns] for r in self.rows]
        widths = [max(len(row[i]) for row in grid) for i in range(len(grid[0]))]
        lines = [self.title]
        for k, row in enumerate(grid):
            lines.append("  ".join(v.ljust(w) if i == 0 else v.rjust(w)
                                   for i, (v, w) in enumerate(zip(row, widths))).rstrip())
            if k == 0:
                lines.append("  ".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"


def _levels_in(records: Iterable[ComparisonRecord], levels: Sequence[str] | None) -> list[str]:
    if levels is not None:
        return list(levels)
    seen = {r.level for r in records}
    return [lv for lv in LEVELS if lv in seen] + sorted(seen - set(LEVELS))


def kind_label(pair: tuple[Category, Category]) -> str:
    return "{" + ", ".join(c.value for c in pair) + "}"


def _kind_rows() -> list[tuple[Category, Category]]:
    return [(a, b) for i, a in enumerate(CATEGORY_ORDER) for b in CATEGORY_ORDER[i:]]


def kind_distribution(records: Iterable[ComparisonRecord], levels: Sequence[str] | None = None,
                      mode: str = CROSS) -> RateTable:
    """Counts of inconsistent records per unordered kind pair and level.

    Only kind pairs that occur get a row; combinations with no records stay
    absent rather than zero.
    """
    records = [r for r in records if r.mode == mode and r.inconsistent]
    cols = _levels_in(records, levels)
    counts: dict[tuple[str, str], int] = {}
    for r in records:
        key = (kind_label(r.kind_pair), r.level)
        counts[key] = counts.get(key, 0) + 1
    rows = [kind_label(p) for p in _kind_rows() if any((kind_label(p), c) in counts for c in cols)]
    table = RateTable("kind_distribution", "Inconsistency counts per kind pair and level",
                      rows + [TOTAL], cols + [TOTAL])
    for (row, col), n in counts.items():
        if col in cols:
            table.cells[(row, col)] = Cell(n)
    for row in rows:
        table.cells[(row, TOTAL)] = Cell(sum(table.count(row, c) for c in cols))
    for col in cols:
        table.cells[(TOTAL, col)] = Cell(sum(table.count(r, col) for r in rows))
    table.cells[(TOTAL, TOTAL)] = Cell(sum(table.count(r, TOTAL) for r in rows))
    return table


def pair_label(a: str, b: str) -> str:
    return f"{a} vs {b}"


def compiler_pair_table(records: Iterable[ComparisonRecord], n_programs: int,
                        compilers: Sequence[str] | None = None,
                        levels: Sequence[str] | None = None) -> RateTable:
    """Rate and digit-difference stats per compiler pair and level."""
    if n_programs < 1:
        raise DomainError("n_programs must be positive")
    records = [r for r in records if r.mode == CROSS]
    cols = _levels_in(records, levels)
    if compilers is None:
        names: list[str] = []
        for r in records:
            for c in (r.config_a[0], r.config_b[0]):
                if c not in names:
                    names.append(c)
        compilers = names
    pairs = list(itertools.combinations(compilers, 2))
    table = RateTable("compiler_pairs", "Inconsistency rate per compiler pair and level "
                      "(digit differences min / max / avg)",
                      [pair_label(a, b) for a, b in pairs], cols + [TOTAL], denominator=n_programs)
    for a, b in pairs:
        row = pair_label(a, b)
        mine = [r for r in records if {r.config_a[0], r.config_b[0]} == {a, b} and r.inconsistent]
        for col in cols:
            here = [r for r in mine if r.level == col]
            digits = [r.digit_diff for r in here if r.digit_diff is not None]
            table.cells[(row, col)] = Cell(len(here), len(here) / n_programs, DigitStats.of(digits),
                                           len(here) - len(digits))
        total = sum(table.count(row, c) for c in cols)
        digits = [r.digit_diff for r in mine if r.level in cols and r.digit_diff is not None]
        table.cells[(row, TOTAL)] = Cell(total, total / n_programs, DigitStats.of(digits),
                                         total - len(digits))
    return table


def baseline_table(records: Iterable[ComparisonRecord], n_programs: int,
                   compilers: Sequence[str] | None = None,
                   levels: Sequence[str] | None = None) -> RateTable:
    """Rate per level and compiler of disagreement with that compiler's O0_nofma build."""
    if n_programs < 1:
        raise DomainError("n_programs must be positive")
    records = [r for r in records if r.mode == BASELINE]
    rows = [lv for lv in _levels_in(records, levels) if lv != BASELINE_LEVEL]
    if compilers is None:
        compilers = list(dict.fromkeys(r.config_a[0] for r in records))
    compilers = list(compilers)
    table = RateTable("baseline", f"Inconsistency rate against {BASELINE_LEVEL} per level and compiler",
                      rows + [TOTAL], compilers, denominator=n_programs)
    for comp in compilers:
        for lv in rows:
            n = sum(1 for r in records if r.inconsistent and r.level == lv and r.config_a[0] == comp)
            table.cells[(lv, comp)] = Cell(n, n / n_programs)
        total = sum(table.count(lv, comp) for lv in rows)
        table.cells[(TOTAL, comp)] = Cell(total, total / n_programs)
    return table


@dataclass
class Summary:
    n_programs: int
    n_compilers: int
    n_levels: int
    comparisons: int
    inconsistencies: int
    exclusions: int
    nominal: int
    rate: float
    effective_rate: float | None
    successful_programs: int
    similarity: float | None = None
    clone_percent: float | None = None
    time: dict[str, float] | None = None

    def to_json(self) -> dict[str, Any]:
        return dict(self.__dict__)

    def render_text(self) -> str:
        lines = [
            "Campaign summary",
            f"programs            {self.n_programs}",
            f"nominal comparisons {self.nominal}",
            f"comparisons         {self.comparisons}",
            f"exclusions          {self.exclusions}",
            f"inconsistencies     {self.inconsistencies}",
            f"inconsistency rate  {percent(self.rate)}",
            f"effective rate      {percent(self.effective_rate) if self.effective_rate is not None else ABSENT}",
            f"successful programs {self.successful_programs}",
        ]
        if self.similarity is not None:
            lines.append(f"similarity (syntax proxy) {self.similarity:.4f}")
        if self.clone_percent is not None:
            lines.append(f"clone programs      {self.clone_percent:.2f}%")
        if self.time:
            for k, v in self.time.items():
                lines.append(f"time {k:<14} {v:.2f}s")
        return "\n".join(lines) + "\n"


def summarize(records: Sequence[ComparisonRecord], n_exclusions: int, n_programs: int,
              n_compilers: int, n_levels: int, **extra: Any) -> Summary:
    cross = [r for r in records if r.mode == CROSS]
    n_incons = sum(r.inconsistent for r in cross)
    nominal = nominal_comparisons(n_compilers, n_levels, n_programs)
    return Summary(
        n_programs=n_programs,
        n_compilers=n_compilers,
        n_levels=n_levels,
        comparisons=len(cross),
        inconsistencies=n_incons,
        exclusions=n_exclusions,
        nominal=nominal,
        rate=inconsistency_rate(n_incons, n_compilers, n_levels, n_programs) if n_programs else 0.0,
        effective_rate=n_incons / len(cross) if cross else None,
        successful_programs=len({r.program_id for r in cross if r.inconsistent}),
        **extra,
    )


def dump_json(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"
