"""Whole-program clone detection over token streams.

Three normalizations, from strict to loose:

* Type-1: token lexemes as-is (the lexer already drops whitespace and comments).
* Type-2c: identifiers renamed by first occurrence, so two streams agree iff
  a consistent one-to-one renaming maps one onto the other.
* Type-2: identifiers, literals and type keywords all replaced by placeholders.
"""

from __future__ import annotations

import enum
import itertools
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Sequence

from ..program.lexer import TYPE_KEYWORDS, Token, tokenize_c


class CloneClass(enum.Enum):
    NONE = "none"
    TYPE_2 = "Type-2"
    TYPE_2C = "Type-2c"
    TYPE_1 = "Type-1"


STRICTEST_FIRST = (CloneClass.TYPE_1, CloneClass.TYPE_2C, CloneClass.TYPE_2)


def type1_key(tokens: Sequence[Token]) -> tuple[str, ...]:
    return tuple(t.lexeme for t in tokens)


def type2c_key(tokens: Sequence[Token]) -> tuple[str, ...]:
    names: dict[str, str] = {}
    out = []
    for t in tokens:
        if t.kind == "identifier":
            out.append(names.setdefault(t.lexeme, f"$id{len(names)}"))
        else:
            out.append(t.lexeme)
    return tuple(out)


def type2_key(tokens: Sequence[Token]) -> tuple[str, ...]:
    out = []
    for t in tokens:
        if t.kind == "identifier":
            out.append("$id")
        elif t.kind.startswith("literal"):
            out.append("$lit")
        elif t.kind == "keyword" and t.lexeme in TYPE_KEYWORDS:
            out.append("$type")
        else:
            out.append(t.lexeme)
    return tuple(out)


_KEYS = {CloneClass.TYPE_1: type1_key, CloneClass.TYPE_2C: type2c_key, CloneClass.TYPE_2: type2_key}


@dataclass
class CloneReport:
    n_programs: int
    pairs: dict[tuple[int, int], CloneClass] = field(default_factory=dict)
    exclusive: dict[CloneClass, int] = field(default_factory=dict)
    cumulative: dict[CloneClass, int] = field(default_factory=dict)
    participating: int = 0

    @property
    def percent(self) -> float:
        """Share of programs that belong to at least one clone pair."""
        return 100.0 * self.participating / self.n_programs if self.n_programs else 0.0

    def classify(self, i: int, j: int) -> CloneClass:
        return self.pairs.get((min(i, j), max(i, j)), CloneClass.NONE)

    def to_json(self) -> dict[str, Any]:
        return {
            "n_programs": self.n_programs,
            "exclusive": {c.value: self.exclusive.get(c, 0) for c in STRICTEST_FIRST},
            "cumulative": {c.value: self.cumulative.get(c, 0) for c in STRICTEST_FIRST},
            "participating": self.participating,
            "percent": self.percent,
            "pairs": [[i, j, c.value] for (i, j), c in sorted(self.pairs.items())],
        }


def detect_clones(corpus: Sequence[str] | Sequence[Sequence[Token]]) -> CloneReport:
    """Classify every pair under its strictest clone class."""
    streams = [tokenize_c(p) if isinstance(p, str) else list(p) for p in corpus]
    report = CloneReport(len(streams))
    for cls in reversed(STRICTEST_FIRST):  # loose to strict so strict overwrites
        groups: dict[tuple[str, ...], list[int]] = defaultdict(list)
        key = _KEYS[cls]
        for idx, toks in enumerate(streams):
            groups[key(toks)].append(idx)
        total = 0
        for members in groups.values():
            for i, j in itertools.combinations(members, 2):
                report.pairs[(i, j)] = cls
                total += 1
        report.cumulative[cls] = total
    for cls in STRICTEST_FIRST:
        report.exclusive[cls] = sum(1 for c in report.pairs.values() if c is cls)
    report.participating = len({i for pair in report.pairs for i in pair})
    return report
