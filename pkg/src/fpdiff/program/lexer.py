"""A tolerant C tokenizer.

It recognises enough of C to cover generated programs and typical LLM
output: comments and whitespace are dropped, numeric literals are split
into integer and floating-point classes, and string/char literals are kept
as single tokens.  Preprocessor lines are lexed like ordinary code, so
``#include <math.h>`` becomes ``# include < math . h >``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator

IDENTIFIER = "identifier"
KEYWORD = "keyword"
LITERAL_INT = "literal-int"
LITERAL_FP = "literal-fp"
LITERAL_STR = "literal-str"
LITERAL_CHAR = "literal-char"
OPERATOR = "operator"
PUNCTUATION = "punctuation"

KEYWORDS = frozenset("""
    auto break case char const continue default do double else enum extern
    float for goto if inline int long register restrict return short signed
    sizeof static struct switch typedef union unsigned void volatile while
    _Bool _Complex _Imaginary
""".split())

TYPE_KEYWORDS = frozenset({
    "char", "double", "float", "int", "long", "short", "signed", "unsigned",
    "void", "_Bool", "_Complex",
})

# Longest operators first so that maximal munch works with a simple scan.
OPERATORS = sorted("""
    <<= >>= ... -> ++ -- << >> <= >= == != && || += -= *= /= %= &= |= ^=
    + - * / % < > = ! ~ & | ^ ? : .
""".split(), key=len, reverse=True)
PUNCTUATORS = frozenset("(){}[];,#")

_FP_RE = re.compile(
    r"""
    (?: 0[xX](?:[0-9a-fA-F]+\.?[0-9a-fA-F]*|\.[0-9a-fA-F]+)[pP][+-]?[0-9]+
      | (?:[0-9]+\.[0-9]*|\.[0-9]+)(?:[eE][+-]?[0-9]+)?
      | [0-9]+[eE][+-]?[0-9]+
    )[fFlL]?
    """,
    re.VERBOSE,
)
_INT_RE = re.compile(r"(?:0[xX][0-9a-fA-F]+|[0-9]+)[uUlL]*")
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_SPACE_RE = re.compile(r"[ \t\n\r\f\v]+")
_DIGITS = frozenset("0123456789")  # str.isdigit also accepts superscripts


class LexError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} at {line}:{column}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Token:
    kind: str
    lexeme: str
    line: int = 0
    column: int = 0

    @property
    def key(self) -> tuple[str, str]:
        return (self.kind, self.lexeme)

    def is_(self, lexeme: str) -> bool:
        return self.lexeme == lexeme and self.kind in (OPERATOR, PUNCTUATION, KEYWORD, IDENTIFIER)


def _quoted_end(text: str, start: int, quote: str) -> int:
    i = start + 1
    while i < len(text):
        ch = text[i]
        if ch == "\\":
            i += 2
            continue
        if ch == quote:
            return i + 1
        if ch == "\n":
            break
        i += 1
    return -1


def iter_tokens(text: str) -> Iterator[Token]:
    pos = 0
    line = 1
    line_start = 0
    n = len(text)

    def advance_to(new_pos: int) -> None:
        nonlocal pos, line, line_start
        chunk = text[pos:new_pos]
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rindex("\n") + 1
        pos = new_pos

    while pos < n:
        col = pos - line_start + 1
        ch = text[pos]
        m = _SPACE_RE.match(text, pos)
        if m:
            advance_to(m.end())
            continue
        if text.startswith("//", pos):
            end = text.find("\n", pos)
            advance_to(n if end < 0 else end)
            continue
        if text.startswith("/*", pos):
            end = text.find("*/", pos + 2)
            if end < 0:
                raise LexError("unterminated comment", line, col)
            advance_to(end + 2)
            continue
        if ch == "\\" and text.startswith("\n", pos + 1):
            advance_to(pos + 2)
            continue
        if ch in "\"'":
            end = _quoted_end(text, pos, ch)
            if end < 0:
                raise LexError("unterminated literal", line, col)
            kind = LITERAL_STR if ch == '"' else LITERAL_CHAR
            yield Token(kind, text[pos:end], line, col)
            advance_to(end)
            continue
        if ch in _DIGITS or (ch == "." and pos + 1 < n and text[pos + 1] in _DIGITS):
            m = _FP_RE.match(text, pos)
            kind = LITERAL_FP
            if m is None:
                m = _INT_RE.match(text, pos)
                kind = LITERAL_INT
            end = m.end()
            # "1.5e" or "12abc": a number running straight into letters
            if end < n and (text[end].isalnum() or text[end] == "_" or text[end] == "."):
                raise LexError(f"malformed number {text[pos:end + 1]!r}", line, col)
            yield Token(kind, text[pos:end], line, col)
            advance_to(end)
            continue
        m = _IDENT_RE.match(text, pos)
        if m:
            word = m.group()
            yield Token(KEYWORD if word in KEYWORDS else IDENTIFIER, word, line, col)
            advance_to(m.end())
            continue
        if ch in PUNCTUATORS:
            yield Token(PUNCTUATION, ch, line, col)
            advance_to(pos + 1)
            continue
        for op in OPERATORS:
            if text.startswith(op, pos):
                yield Token(OPERATOR, op, line, col)
                advance_to(pos + len(op))
                break
        else:
            raise LexError(f"unexpected character {ch!r}", line, col)


def tokenize_c(text: str) -> list[Token]:
    """Tokenize C source text; raises LexError on a malformed token."""
    return list(iter_tokens(text))


def join_tokens(tokens: Iterable[Token], sep: str = " ") -> str:
    return sep.join(t.lexeme for t in tokens)


def token_keys(tokens: Iterable[Token]) -> list[tuple[str, str]]:
    return [t.key for t in tokens]
