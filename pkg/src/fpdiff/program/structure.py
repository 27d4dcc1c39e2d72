"""Token-level structure checks for whole programs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .ast import RESULT_PARAM, Param, ParamKind, Precision
from .lexer import (
    IDENTIFIER,
    LITERAL_STR,
    PUNCTUATION,
    LexError,
    Token,
    tokenize_c,
)
from .render import ALLOWED_HEADERS
from .source import ProgramSource

OUTPUT_FUNCS = frozenset({"printf", "puts", "putchar", "fprintf", "fputs", "fwrite"})


class SignatureError(ValueError):
    pass


@dataclass(frozen=True)
class FunctionSpan:
    name: str
    # token index of the first token of the definition (return type)
    start: int
    lparen: int
    rparen: int
    lbrace: int
    rbrace: int


@dataclass
class StructureReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def matching(tokens: Sequence[Token], open_idx: int) -> int:
    """Index of the bracket closing the one at ``open_idx``; -1 if unbalanced."""
    opener = tokens[open_idx].lexeme
    closer = {"(": ")", "{": "}", "[": "]"}[opener]
    depth = 0
    for i in range(open_idx, len(tokens)):
        t = tokens[i]
        if t.kind != PUNCTUATION:
            continue
        if t.lexeme == opener:
            depth += 1
        elif t.lexeme == closer:
            depth -= 1
            if depth == 0:
                return i
    return -1


def find_functions(tokens: Sequence[Token]) -> list[FunctionSpan]:
    """Function definitions at file scope, in source order."""
    spans = []
    i = 0
    n = len(tokens)
    stmt_start = 0
    while i < n:
        t = tokens[i]
        if t.kind == PUNCTUATION and t.lexeme == "#":
            # skip the rest of the directive line
            line = t.line
            i += 1
            while i < n and tokens[i].line == line:
                i += 1
            stmt_start = i
            continue
        if t.kind == PUNCTUATION and t.lexeme == ";":
            i += 1
            stmt_start = i
            continue
        if t.kind == PUNCTUATION and t.lexeme == "{":
            close = matching(tokens, i)
            if close < 0:
                break
            i = close + 1
            stmt_start = i
            continue
        if (t.kind == IDENTIFIER and i + 1 < n and tokens[i + 1].lexeme == "("
                and tokens[i + 1].kind == PUNCTUATION):
            rparen = matching(tokens, i + 1)
            if rparen < 0:
                break
            if rparen + 1 < n and tokens[rparen + 1].lexeme == "{":
                rbrace = matching(tokens, rparen + 1)
                if rbrace < 0:
                    break
                spans.append(FunctionSpan(t.lexeme, stmt_start, i + 1, rparen, rparen + 1, rbrace))
                i = rbrace + 1
                stmt_start = i
                continue
            i = rparen + 1
            continue
        i += 1
    return spans


def included_headers(tokens: Sequence[Token]) -> list[str]:
    headers = []
    for i, t in enumerate(tokens):
        if not (t.kind == PUNCTUATION and t.lexeme == "#"):
            continue
        if i + 1 >= len(tokens) or tokens[i + 1].lexeme != "include":
            continue
        line = t.line
        rest = [x for x in tokens[i + 2:] if x.line == line]
        if rest and rest[0].kind == LITERAL_STR:
            headers.append(rest[0].lexeme.strip('"'))
        elif rest and rest[0].lexeme == "<":
            name = []
            for x in rest[1:]:
                if x.lexeme == ">":
                    break
                name.append(x.lexeme)
            headers.append("".join(name))
        else:
            headers.append("")
    return headers


def _calls(tokens: Sequence[Token], names: frozenset[str] | set[str]) -> bool:
    for i, t in enumerate(tokens[:-1]):
        if t.kind == IDENTIFIER and t.lexeme in names and tokens[i + 1].lexeme == "(":
            return True
    return False


def validate_tokens(tokens: Sequence[Token]) -> StructureReport:
    report = StructureReport()
    v = report.violations
    for h in included_headers(tokens):
        if h not in ALLOWED_HEADERS:
            v.append(f"disallowed header: {h or '<malformed include>'}")
    funcs = find_functions(tokens)
    names = [f.name for f in funcs]
    for required in ("main", "compute"):
        if names.count(required) == 0:
            v.append(f"missing {required}")
        elif names.count(required) > 1:
            v.append(f"duplicate function: {required}")
    for name in names:
        if name not in ("main", "compute"):
            v.append(f"extra function: {name}")
    by_name = {f.name: f for f in funcs}
    main = by_name.get("main")
    if main is not None:
        body = tokens[main.lbrace:main.rbrace + 1]
        if not _calls(body, {"compute"}):
            v.append("compute not called from main")
    bodies = [tokens[f.lbrace:f.rbrace + 1] for f in funcs if f.name in ("main", "compute")]
    if not any(_calls(b, OUTPUT_FUNCS) for b in bodies):
        v.append("missing output statement")
    return report


def validate_structure(src: ProgramSource | str) -> StructureReport:
    """Check the two-function program shape; never raises on bad input."""
    text = src.c_text if isinstance(src, ProgramSource) else src
    try:
        tokens = tokenize_c(text)
    except LexError as exc:
        return StructureReport([f"lex error: {exc}"])
    return validate_tokens(tokens)


def parse_signature(tokens: Sequence[Token], span: FunctionSpan,
                    precision: Precision) -> tuple[Param, ...]:
    """Parse compute's parameter list into input params (``result`` excluded).

    The last parameter must be the out-pointer ``result`` of the program's
    fp type; inputs may be ``int``, the fp type, or a pointer to it.
    """
    if span.start >= span.lparen - 1 or tokens[span.lparen - 2].lexeme != "void":
        raise SignatureError("compute must return void")
    params_tokens = tokens[span.lparen + 1:span.rparen]
    groups: list[list[Token]] = [[]]
    for t in params_tokens:
        if t.kind == PUNCTUATION and t.lexeme == ",":
            groups.append([])
        else:
            groups[-1].append(t)
    if groups == [[]]:
        raise SignatureError("compute has no parameters")
    fp = precision.c_type
    params = []
    for g in groups:
        words = [t.lexeme for t in g if t.lexeme != "const"]
        if len(words) < 2 or g[-1].kind != IDENTIFIER:
            raise SignatureError(f"cannot parse parameter {' '.join(words)!r}")
        name = words[-1]
        type_words = words[:-1]
        if type_words == ["int"]:
            params.append(Param(ParamKind.INT, name))
        elif type_words == [fp]:
            params.append(Param(ParamKind.FP, name))
        elif type_words == [fp, "*"]:
            params.append(Param(ParamKind.FP_PTR, name))
        else:
            raise SignatureError(f"unsupported parameter type {' '.join(type_words)!r} for {name}")
    last = params[-1]
    if last.kind is not ParamKind.FP_PTR or last.name != RESULT_PARAM:
        raise SignatureError(f"last parameter must be '{fp}* {RESULT_PARAM}'")
    inputs = tuple(params[:-1])
    if not inputs:
        raise SignatureError("compute takes no inputs")
    if len({p.name for p in params}) != len(params):
        raise SignatureError("duplicate parameter names")
    return inputs


def compute_span(tokens: Sequence[Token]) -> FunctionSpan:
    for f in find_functions(tokens):
        if f.name == "compute":
            return f
    raise SignatureError("no compute function")
