"""Pairwise program similarity (syntax proxy).

Three equally weighted terms by default: BLEU over tokens (n = 1..4 with a
brevity penalty), the same precision with keyword n-grams weighted up, and
the fraction of matching subtrees in a bracket-structured tree of the
compute body. Each term is averaged over both directions.
"""

from __future__ import annotations

import itertools
import logging
import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from ..program.lexer import KEYWORDS, LexError, Token, tokenize_c
from ..program.structure import SignatureError, compute_span

log = logging.getLogger(__name__)

MAX_N = 4
KEYWORD_WEIGHT = 1.0
OTHER_WEIGHT = 0.2


@dataclass(frozen=True)
class Weights:
    ngram: float = 1 / 3
    weighted_ngram: float = 1 / 3
    syntax: float = 1 / 3

    def __post_init__(self) -> None:
        if min(self.ngram, self.weighted_ngram, self.syntax) < 0:
            raise ValueError("weights must be non-negative")
        if not math.isclose(self.ngram + self.weighted_ngram + self.syntax, 1.0):
            raise ValueError("weights must sum to 1")


@dataclass(frozen=True)
class Scored:
    """A program prepared for scoring."""

    tokens: tuple[str, ...]
    subtrees: Counter

    @classmethod
    def of(cls, text: str) -> "Scored":
        toks = tokenize_c(text)
        return cls(tuple(t.lexeme for t in toks), Counter(_subtrees(_compute_tokens(toks))))


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def _weight(gram: tuple[str, ...]) -> float:
    return KEYWORD_WEIGHT if any(t in KEYWORDS for t in gram) else OTHER_WEIGHT


def _bleu(cand: Sequence[str], ref: Sequence[str], weighted: bool) -> float:
    if not cand or not ref:
        return 0.0
    logs = []
    for n in range(1, MAX_N + 1):
        c, r = _ngrams(cand, n), _ngrams(ref, n)
        if not c:
            continue
        w = _weight if weighted else (lambda g: 1.0)
        num = sum(w(g) * min(k, r[g]) for g, k in c.items())
        den = sum(w(g) * k for g, k in c.items())
        if num == 0:
            return 0.0
        logs.append(math.log(num / den))
    bp = 1.0 if len(cand) > len(ref) else math.exp(1 - len(ref) / len(cand))
    return bp * math.exp(sum(logs) / len(logs))


def _compute_tokens(tokens: list[Token]) -> list[Token]:
    try:
        span = compute_span(tokens)
    except SignatureError:
        return tokens
    return tokens[span.lbrace:span.rbrace + 1]


_OPEN = {"(": ")", "{": "}", "[": "]"}
_CLOSE = frozenset(_OPEN.values())


def _leaf(tok: Token) -> str:
    if tok.kind == "identifier":
        return "id"
    if tok.kind.startswith("literal"):
        return "lit"
    return tok.lexeme


def _group(tokens: Sequence[Token], i: int, closer: str | None, statements: bool) -> tuple[list, int]:
    items: list = []
    cur: list = []
    while i < len(tokens):
        lex = tokens[i].lexeme
        if lex in _CLOSE:
            i += 1
            if lex == closer:
                break
            continue  # stray closer
        if lex in _OPEN:
            children, i = _group(tokens, i + 1, _OPEN[lex], lex == "{")
            cur.append((lex, *children))
            if statements and lex == "{":
                items.append(("stmt", *cur))
                cur = []
            continue
        cur.append(_leaf(tokens[i]))
        i += 1
        if statements and lex == ";":
            items.append(("stmt", *cur))
            cur = []
    if not statements:
        return cur, i
    if cur:
        items.append(("stmt", *cur))
    return items, i


def _tree(tokens: Sequence[Token]) -> tuple:
    """Bracket groups nest; inside braces, statements end at ';' or at a
    nested block. Unbalanced input is tolerated."""
    children, _ = _group(tokens, 0, None, True)
    return ("root", *children)


def _subtrees(tokens: Sequence[Token]) -> list[str]:
    out: list[str] = []

    def walk(node) -> str:
        if isinstance(node, str):
            return node
        text = "(" + " ".join(walk(c) for c in node) + ")"
        out.append(text)
        return text

    walk(_tree(tokens))
    return out


def _syntax_match(a: Counter, b: Counter) -> float:
    total = sum(a.values())
    if total == 0:
        return 0.0
    return sum(min(k, b[t]) for t, k in a.items()) / total


def similarity_score(a: str | Scored, b: str | Scored, weights: Weights = Weights()) -> float:
    sa = a if isinstance(a, Scored) else Scored.of(a)
    sb = b if isinstance(b, Scored) else Scored.of(b)
    ngram = (_bleu(sa.tokens, sb.tokens, False) + _bleu(sb.tokens, sa.tokens, False)) / 2
    weighted = (_bleu(sa.tokens, sb.tokens, True) + _bleu(sb.tokens, sa.tokens, True)) / 2
    syntax = (_syntax_match(sa.subtrees, sb.subtrees) + _syntax_match(sb.subtrees, sa.subtrees)) / 2
    score = weights.ngram * ngram + weights.weighted_ngram * weighted + weights.syntax * syntax
    return min(1.0, max(0.0, score))


@dataclass
class SimilarityReport:
    mean: float
    pairs: int
    skipped: int
    matrix: list[list[float]] | None = None

    def to_json(self) -> dict:
        out = {"metric": "similarity (syntax proxy)", "mean": self.mean,
               "pairs": self.pairs, "skipped": self.skipped}
        if self.matrix is not None:
            out["matrix"] = self.matrix
        return out


def mean_pairwise_similarity(corpus: Sequence[str], weights: Weights = Weights(),
                             keep_matrix: bool = False) -> SimilarityReport:
    if len(corpus) < 2:
        raise ValueError("need at least two programs")
    prepared: list[Scored | None] = []
    for text in corpus:
        try:
            prepared.append(Scored.of(text))
        except LexError as exc:
            log.warning("skipping program in similarity: %s", exc)
            prepared.append(None)
    n = len(corpus)
    matrix = [[1.0 if i == j else math.nan for j in range(n)] for i in range(n)] if keep_matrix else None
    total, count, skipped = 0.0, 0, 0
    for i, j in itertools.combinations(range(n), 2):
        pa, pb = prepared[i], prepared[j]
        if pa is None or pb is None:
            skipped += 1
            continue
        s = similarity_score(pa, pb, weights)
        total += s
        count += 1
        if matrix is not None:
            matrix[i][j] = matrix[j][i] = s
    return SimilarityReport(total / count if count else math.nan, count, skipped, matrix)
