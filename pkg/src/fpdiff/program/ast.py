"""Data types for the restricted floating-point program dialect.

A ``compute`` function is made of parameter declarations and a block tree.
Blocks follow the shape ``(if | for)* assignment+``; expressions are built
from identifiers, array elements indexed by a loop variable, fp numerals,
parentheses, binary operators and unary math-library calls.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator, Union


class Precision(enum.Enum):
    FP32 = "FP32"
    FP64 = "FP64"

    @property
    def c_type(self) -> str:
        return "float" if self is Precision.FP32 else "double"

    @property
    def bits(self) -> int:
        return 32 if self is Precision.FP32 else 64

    @property
    def hex_digits(self) -> int:
        return self.bits // 4

    @property
    def uint_type(self) -> str:
        return "unsigned int" if self is Precision.FP32 else "unsigned long long"

    @property
    def printf_format(self) -> str:
        return "%08x" if self is Precision.FP32 else "%016llx"

    @property
    def parse_func(self) -> str:
        return "strtof" if self is Precision.FP32 else "strtod"

    @classmethod
    def parse(cls, value: "str | Precision") -> "Precision":
        if isinstance(value, Precision):
            return value
        text = str(value).strip().upper()
        aliases = {"FLOAT": "FP32", "SINGLE": "FP32", "DOUBLE": "FP64"}
        return cls(aliases.get(text, text))


ACCUMULATOR = "comp"
RESULT_PARAM = "result"

BINARY_OPS = ("+", "-", "*", "/")
ASSIGN_OPS = ("=", "+=", "-=", "*=", "/=")
BOOL_OPS = ("<", ">", "<=", ">=", "==", "!=")
MATH_FUNCS = ("sqrt", "sin", "cos", "exp", "log", "fabs", "pow", "tanh", "floor", "fmod")
BINARY_MATH_FUNCS = frozenset({"pow", "fmod"})
PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2}


def math_func_name(name: str, precision: Precision) -> str:
    """Return the libm spelling of ``name`` for the given precision."""
    return name + "f" if precision is Precision.FP32 else name


def base_math_func(name: str) -> str | None:
    """Map ``sinf``/``sin`` back to ``sin``; None for non-math identifiers."""
    if name in MATH_FUNCS:
        return name
    if name.endswith("f") and name[:-1] in MATH_FUNCS:
        return name[:-1]
    return None


class ParamKind(enum.Enum):
    INT = "int"
    FP = "fp"
    FP_PTR = "fp_ptr"


@dataclass(frozen=True)
class Param:
    kind: ParamKind
    name: str
    # Declared element count for FP_PTR parameters; not part of the C text.
    length: int | None = field(default=None, compare=False)


# -- expressions -------------------------------------------------------------


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Index:
    array: str
    index: str


@dataclass(frozen=True)
class Num:
    text: str


@dataclass(frozen=True)
class Paren:
    inner: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple["Expr", ...]


Expr = Union[Var, Index, Num, Paren, BinOp, Call]


# -- statements --------------------------------------------------------------


@dataclass(frozen=True)
class Assign:
    """``comp <op> expr;`` when ``declare`` is False, else ``<fp> name = expr;``."""

    target: str
    op: str
    expr: Expr
    declare: bool = False


@dataclass(frozen=True)
class BoolExpr:
    name: str
    op: str
    expr: Expr


@dataclass(frozen=True)
class If:
    cond: BoolExpr
    body: "Block"


@dataclass(frozen=True)
class For:
    var: str
    bound: int
    body: "Block"


Stmt = Union[Assign, If, For]


@dataclass(frozen=True)
class Block:
    stmts: tuple[Stmt, ...]


@dataclass(frozen=True)
class GrammarAst:
    params: tuple[Param, ...]
    body: Block
    precision: Precision = Precision.FP64

    def signature(self) -> tuple[Param, ...]:
        """Input parameters in call order, accumulator first."""
        return (Param(ParamKind.FP, ACCUMULATOR),) + self.params


def iter_exprs(expr: Expr) -> Iterator[Expr]:
    yield expr
    if isinstance(expr, Paren):
        yield from iter_exprs(expr.inner)
    elif isinstance(expr, BinOp):
        yield from iter_exprs(expr.left)
        yield from iter_exprs(expr.right)
    elif isinstance(expr, Call):
        for arg in expr.args:
            yield from iter_exprs(arg)


def iter_stmts(block: Block) -> Iterator[Stmt]:
    for stmt in block.stmts:
        yield stmt
        if isinstance(stmt, (If, For)):
            yield from iter_stmts(stmt.body)


def expr_depth(expr: Expr) -> int:
    if isinstance(expr, Paren):
        return 1 + expr_depth(expr.inner)
    if isinstance(expr, BinOp):
        return 1 + max(expr_depth(expr.left), expr_depth(expr.right))
    if isinstance(expr, Call):
        return 1 + max(expr_depth(a) for a in expr.args)
    return 1


class AstError(ValueError):
    pass


@dataclass
class _Scope:
    scalars: set[str] = field(default_factory=set)
    arrays: set[str] = field(default_factory=set)
    loop_vars: set[str] = field(default_factory=set)

    def child(self) -> "_Scope":
        return _Scope(set(self.scalars), set(self.arrays), set(self.loop_vars))


def check_invariants(ast: GrammarAst) -> list[str]:
    """Return invariant violations of ``ast``; empty when well formed."""
    problems: list[str] = []
    scope = _Scope()
    scope.scalars.add(ACCUMULATOR)
    names = [ACCUMULATOR]
    for p in ast.params:
        names.append(p.name)
        if p.kind is ParamKind.FP_PTR:
            if not p.length or p.length < 1:
                problems.append(f"array parameter {p.name} needs a positive length")
            scope.arrays.add(p.name)
        else:
            scope.scalars.add(p.name)
    if len(set(names)) != len(names):
        problems.append("duplicate parameter names")

    def check_expr(expr: Expr, sc: _Scope) -> None:
        for e in iter_exprs(expr):
            if isinstance(e, Var) and e.name not in sc.scalars and e.name not in sc.loop_vars:
                problems.append(f"unresolved identifier {e.name}")
            elif isinstance(e, Index):
                if e.array not in sc.arrays:
                    problems.append(f"unresolved array {e.array}")
                if e.index not in sc.loop_vars:
                    problems.append(f"index {e.index} is not a loop variable")
            elif isinstance(e, Call):
                expected = 2 if e.func in BINARY_MATH_FUNCS else 1
                if e.func not in MATH_FUNCS or len(e.args) != expected:
                    problems.append(f"bad call {e.func}/{len(e.args)}")

    def walk(block: Block, sc: _Scope) -> None:
        if not block.stmts:
            problems.append("empty block")
            return
        seen_assign = False
        for stmt in block.stmts:
            if isinstance(stmt, Assign):
                seen_assign = True
                check_expr(stmt.expr, sc)
                if stmt.declare:
                    if stmt.op != "=":
                        problems.append(f"declaration of {stmt.target} must use '='")
                    if stmt.target in sc.scalars or stmt.target in sc.arrays:
                        problems.append(f"redeclaration of {stmt.target}")
                    sc.scalars.add(stmt.target)
                elif stmt.target != ACCUMULATOR:
                    problems.append(f"assignment to {stmt.target} outside a declaration")
            else:
                if seen_assign:
                    problems.append("control statement after an assignment in the same block")
                if isinstance(stmt, If):
                    if stmt.cond.name not in sc.scalars and stmt.cond.name not in sc.loop_vars:
                        problems.append(f"unresolved identifier {stmt.cond.name}")
                    check_expr(stmt.cond.expr, sc)
                    walk(stmt.body, sc.child())
                else:
                    if stmt.bound < 1:
                        problems.append("loop bound must be positive")
                    inner = sc.child()
                    inner.loop_vars.add(stmt.var)
                    walk(stmt.body, inner)
        if not seen_assign:
            problems.append("block does not end with an assignment")

    walk(ast.body, scope)
    if not any(isinstance(s, Assign) and s.target == ACCUMULATOR and not s.declare
               for s in iter_stmts(ast.body)):
        problems.append("comp is never assigned")
    return problems
