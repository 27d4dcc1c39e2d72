"""Recognizer for the compute-function grammar.

``parse_compute_ast`` accepts exactly the dialect produced by the random
generator (and hand-written programs in the same shape) and rebuilds the
GrammarAst.  Anything outside the grammar raises GrammarError, so a
successful parse is a derivation witness.
"""

from __future__ import annotations

from typing import Sequence

from .ast import (
    ACCUMULATOR,
    ASSIGN_OPS,
    BINARY_MATH_FUNCS,
    BOOL_OPS,
    PRECEDENCE,
    RESULT_PARAM,
    Assign,
    BinOp,
    Block,
    BoolExpr,
    Call,
    Expr,
    For,
    GrammarAst,
    If,
    Index,
    Num,
    ParamKind,
    Paren,
    Precision,
    Var,
    base_math_func,
    check_invariants,
)
from .lexer import IDENTIFIER, KEYWORD, LITERAL_FP, LITERAL_INT, Token, tokenize_c
from .structure import SignatureError, compute_span, parse_signature

# Canonical grammar text embedded in generation prompts.
GRAMMAR_TEXT = """\
<function> ::= "void" "compute" "(" <param-list> ")" "{" <block> "}"
<param-list> ::= <param-declaration> | <param-list> "," <param-declaration>
<param-declaration> ::= "int" <id> | <fp-type> <id> | <fp-type> "*" <id>
<assignment> ::= "comp" <assign-op> <expression> ";" | <fp-type> <id> <assign-op> <expression> ";"
<expression> ::= <term> | "(" <expression> ")" | <expression> <op> <expression>
<term> ::= <identifier> | <fp-numeral>
<block> ::= {<assignment>}+ | <if-block> <block> | <for-loop-block> <block>
<if-block> ::= "if" "(" <bool-expression> ")" "{" <block> "}"
<for-loop-block> ::= "for" "(" <loop-header> ")" "{" <block> "}"
<bool-expression> ::= <id> <bool-op> <expression>
<loop-header> ::= "int" <id> ";" <id> "<" <int-numeral> ";" "++" <id>
"""

GRAMMAR_PRODUCTIONS = tuple(line for line in GRAMMAR_TEXT.splitlines() if line.strip())


class GrammarError(ValueError):
    pass


class _Parser:
    def __init__(self, tokens: Sequence[Token], precision: Precision):
        self.toks = tokens
        self.pos = 0
        self.precision = precision

    def peek(self, offset: int = 0) -> Token | None:
        i = self.pos + offset
        return self.toks[i] if i < len(self.toks) else None

    def at(self, lexeme: str, offset: int = 0) -> bool:
        t = self.peek(offset)
        return t is not None and t.lexeme == lexeme

    def take(self, lexeme: str | None = None, kind: str | None = None) -> Token:
        t = self.peek()
        if t is None:
            raise GrammarError(f"unexpected end of input, expected {lexeme or kind}")
        if (lexeme is not None and t.lexeme != lexeme) or (kind is not None and t.kind != kind):
            raise GrammarError(f"expected {lexeme or kind} at {t.line}:{t.column}, got {t.lexeme!r}")
        self.pos += 1
        return t

    # expressions: precedence climbing over + - * /
    def expression(self, min_prec: int = 1) -> Expr:
        left = self.primary()
        while True:
            t = self.peek()
            if t is None or t.lexeme not in PRECEDENCE or PRECEDENCE[t.lexeme] < min_prec:
                return left
            op = self.take().lexeme
            right = self.expression(PRECEDENCE[op] + 1)
            left = BinOp(op, left, right)

    def primary(self) -> Expr:
        t = self.peek()
        if t is None:
            raise GrammarError("unexpected end of expression")
        if t.lexeme == "(":
            self.take("(")
            inner = self.expression()
            self.take(")")
            return Paren(inner)
        if t.kind in (LITERAL_FP, LITERAL_INT):
            self.pos += 1
            return Num(t.lexeme)
        if t.kind == IDENTIFIER:
            self.pos += 1
            if self.at("("):
                func = base_math_func(t.lexeme)
                if func is None:
                    raise GrammarError(f"call to non-math function {t.lexeme}")
                self.take("(")
                args = [self.expression()]
                while self.at(","):
                    self.take(",")
                    args.append(self.expression())
                self.take(")")
                if len(args) != (2 if func in BINARY_MATH_FUNCS else 1):
                    raise GrammarError(f"wrong arity for {t.lexeme}")
                return Call(func, tuple(args))
            if self.at("["):
                self.take("[")
                idx = self.take(kind=IDENTIFIER).lexeme
                self.take("]")
                return Index(t.lexeme, idx)
            return Var(t.lexeme)
        raise GrammarError(f"unexpected token {t.lexeme!r} at {t.line}:{t.column}")

    def block(self, top: bool) -> Block:
        stmts = []
        while True:
            t = self.peek()
            if t is None or t.lexeme == "}":
                break
            if top and t.lexeme == "*" and self.at(RESULT_PARAM, 1):
                break
            stmts.append(self.statement())
        if not stmts:
            raise GrammarError("empty block")
        return Block(tuple(stmts))

    def statement(self):
        t = self.peek()
        fp = self.precision.c_type
        if t.kind == KEYWORD and t.lexeme == "if":
            self.take("if")
            self.take("(")
            name = self.take(kind=IDENTIFIER).lexeme
            op = self.take().lexeme
            if op not in BOOL_OPS:
                raise GrammarError(f"bad comparison operator {op!r}")
            expr = self.expression()
            self.take(")")
            return If(BoolExpr(name, op, expr), self.braced())
        if t.kind == KEYWORD and t.lexeme == "for":
            self.take("for")
            self.take("(")
            self.take("int")
            var = self.take(kind=IDENTIFIER).lexeme
            self.take("=")
            if self.take(kind=LITERAL_INT).lexeme != "0":
                raise GrammarError("loop variables start at 0")
            self.take(";")
            self.take(var)
            self.take("<")
            bound = int(self.take(kind=LITERAL_INT).lexeme)
            self.take(";")
            self.take("++")
            self.take(var)
            self.take(")")
            return For(var, bound, self.braced())
        if t.kind == KEYWORD and t.lexeme == fp:
            self.take(fp)
            name = self.take(kind=IDENTIFIER).lexeme
            self.take("=")
            expr = self.expression()
            self.take(";")
            return Assign(name, "=", expr, declare=True)
        if t.lexeme == ACCUMULATOR:
            self.take(ACCUMULATOR)
            op = self.take().lexeme
            if op not in ASSIGN_OPS:
                raise GrammarError(f"bad assignment operator {op!r}")
            expr = self.expression()
            self.take(";")
            return Assign(ACCUMULATOR, op, expr)
        raise GrammarError(f"statement cannot start with {t.lexeme!r} at {t.line}:{t.column}")

    def braced(self) -> Block:
        self.take("{")
        body = self.block(top=False)
        self.take("}")
        return body


def parse_compute_ast(text: str | Sequence[Token], precision: Precision = Precision.FP64) -> GrammarAst:
    """Parse the compute function of a program back into a GrammarAst."""
    tokens = tokenize_c(text) if isinstance(text, str) else list(text)
    try:
        span = compute_span(tokens)
        signature = parse_signature(tokens, span, precision)
    except SignatureError as exc:
        raise GrammarError(str(exc)) from exc
    first = signature[0]
    if first.kind is not ParamKind.FP or first.name != ACCUMULATOR:
        raise GrammarError("first parameter must be the accumulator comp")
    body = tokens[span.lbrace + 1:span.rbrace]
    parser = _Parser(body, precision)
    block = parser.block(top=True)
    for lexeme in ("*", RESULT_PARAM, "=", ACCUMULATOR, ";"):
        parser.take(lexeme)
    if parser.peek() is not None:
        raise GrammarError("trailing statements after the result store")
    ast = GrammarAst(tuple(signature[1:]), block, precision)
    problems = [p for p in check_invariants(ast) if "needs a positive length" not in p]
    if problems:
        raise GrammarError("; ".join(problems))
    return ast
