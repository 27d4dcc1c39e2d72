"""Seeded random generation of compute functions (the grammar baseline)."""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .ast import (
    ACCUMULATOR,
    ASSIGN_OPS,
    BINARY_MATH_FUNCS,
    BINARY_OPS,
    BOOL_OPS,
    MATH_FUNCS,
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
    PRECEDENCE,
    Param,
    ParamKind,
    Paren,
    Precision,
    Var,
)
from .render import render_c
from .source import GRAMMAR_RANDOM, ProgramSource, Provenance

LOOP_VAR_NAMES = ("i", "j", "k", "l", "m", "n")


@dataclass(frozen=True)
class GenConfig:
    max_expr_depth: int = 4
    max_block_stmts: int = 6
    max_loop_nest: int = 2
    max_if_nest: int = 2
    min_params: int = 2
    max_params: int = 6
    max_pointer_params: int = 2
    loop_bound_min: int = 1
    loop_bound_max: int = 10
    array_length: int = 10
    precision: Precision = Precision.FP64
    math_funcs: tuple[str, ...] = MATH_FUNCS

    def validate(self) -> list[str]:
        problems = []
        for name in ("max_expr_depth", "max_block_stmts", "min_params", "max_params",
                     "loop_bound_min", "array_length"):
            if getattr(self, name) < 1:
                problems.append(f"{name} must be positive")
        if self.max_loop_nest < 0 or self.max_if_nest < 0 or self.max_pointer_params < 0:
            problems.append("nesting and pointer limits must be non-negative")
        if self.min_params > self.max_params:
            problems.append("min_params exceeds max_params")
        if self.loop_bound_min > self.loop_bound_max:
            problems.append("loop_bound_min exceeds loop_bound_max")
        if self.loop_bound_max > self.array_length and self.max_pointer_params:
            problems.append("loop bounds may exceed the array length")
        if len(LOOP_VAR_NAMES) < self.max_loop_nest:
            problems.append("max_loop_nest too large")
        return problems


@dataclass
class _Scope:
    scalars: list[str]
    arrays: list[str]
    loop_vars: list[str] = field(default_factory=list)

    def child(self) -> "_Scope":
        return _Scope(list(self.scalars), list(self.arrays), list(self.loop_vars))


def combine(op: str, left: Expr, right: Expr) -> BinOp:
    """Build ``left op right``, parenthesizing operands C would regroup."""
    if isinstance(left, BinOp) and PRECEDENCE[left.op] < PRECEDENCE[op]:
        left = Paren(left)
    if isinstance(right, BinOp) and PRECEDENCE[right.op] <= PRECEDENCE[op]:
        right = Paren(right)
    return BinOp(op, left, right)


class _Generator:
    def __init__(self, seed: int, cfg: GenConfig):
        self.rng = random.Random(seed)
        self.cfg = cfg
        self.n_temps = 0
        self.int_names: set[str] = set(LOOP_VAR_NAMES)

    def is_int(self, expr: Expr) -> bool:
        if isinstance(expr, Var):
            return expr.name in self.int_names
        if isinstance(expr, Paren):
            return self.is_int(expr.inner)
        if isinstance(expr, BinOp):
            return self.is_int(expr.left) and self.is_int(expr.right)
        return False

    def numeral(self) -> Num:
        rng = self.rng
        mantissa = rng.randint(10000, 99999)
        exponent = rng.randint(-5, 5)
        text = f"{mantissa // 10000}.{mantissa % 10000:04d}E{exponent:+d}"
        if self.cfg.precision is Precision.FP32:
            text += "f"
        return Num(text)

    def term(self, scope: _Scope) -> Expr:
        rng = self.rng
        roll = rng.random()
        if scope.arrays and scope.loop_vars and roll < 0.25:
            return Index(rng.choice(scope.arrays), rng.choice(scope.loop_vars))
        if roll < 0.65:
            return Var(rng.choice(scope.scalars + scope.loop_vars))
        return self.numeral()

    def expr(self, scope: _Scope, depth: int) -> Expr:
        rng = self.rng
        if depth <= 1 or rng.random() < 0.25:
            return self.term(scope)
        roll = rng.random()
        if roll < 0.6:
            op = rng.choice(BINARY_OPS)
            left, right = self.expr(scope, depth - 1), self.expr(scope, depth - 1)
            if op == "/" and self.is_int(left) and self.is_int(right):
                # integer division by a zero loop index would trap
                op = rng.choice(("+", "-", "*"))
            return combine(op, left, right)
        if roll < 0.75:
            return Paren(self.expr(scope, depth - 1))
        func = rng.choice(self.cfg.math_funcs)
        arity = 2 if func in BINARY_MATH_FUNCS else 1
        return Call(func, tuple(self.expr(scope, depth - 1) for _ in range(arity)))

    def assignment(self, scope: _Scope, to_comp: bool) -> Assign:
        rng = self.rng
        expr = self.expr(scope, self.cfg.max_expr_depth)
        if to_comp:
            return Assign(ACCUMULATOR, rng.choice(ASSIGN_OPS), expr)
        self.n_temps += 1
        name = f"tmp_{self.n_temps}"
        stmt = Assign(name, "=", expr, declare=True)
        scope.scalars.append(name)
        return stmt

    def block(self, scope: _Scope, loop_depth: int, if_depth: int, top: bool) -> Block:
        rng = self.rng
        cfg = self.cfg
        low = (cfg.max_block_stmts + 1) // 2 if top else 1
        n = rng.randint(low, cfg.max_block_stmts)
        n_ctrl = rng.randint(0, n - 1) if n > 1 else 0
        stmts: list = []
        for _ in range(n_ctrl):
            can_loop = loop_depth < cfg.max_loop_nest
            can_if = if_depth < cfg.max_if_nest
            if can_loop and (not can_if or rng.random() < 0.6):
                var = LOOP_VAR_NAMES[loop_depth]
                inner = scope.child()
                inner.loop_vars.append(var)
                bound = rng.randint(cfg.loop_bound_min, cfg.loop_bound_max)
                stmts.append(For(var, bound, self.block(inner, loop_depth + 1, if_depth, False)))
            elif can_if:
                name = rng.choice(scope.scalars + scope.loop_vars)
                cond = BoolExpr(name, rng.choice(BOOL_OPS), self.expr(scope, min(2, cfg.max_expr_depth)))
                stmts.append(If(cond, self.block(scope.child(), loop_depth, if_depth + 1, False)))
        n_assign = n - len(stmts)
        for idx in range(n_assign):
            last = idx == n_assign - 1
            to_comp = (top and last) or rng.random() < 0.6
            stmts.append(self.assignment(scope, to_comp))
        return Block(tuple(stmts))

    def params(self) -> tuple[Param, ...]:
        rng = self.rng
        cfg = self.cfg
        count = rng.randint(cfg.min_params, cfg.max_params)
        n_ptr = 0
        params = []
        for i in range(1, count + 1):
            roll = rng.random()
            if roll < 0.25 and n_ptr < cfg.max_pointer_params:
                n_ptr += 1
                params.append(Param(ParamKind.FP_PTR, f"var_{i}", cfg.array_length))
            elif roll < 0.45:
                params.append(Param(ParamKind.INT, f"var_{i}"))
                self.int_names.add(f"var_{i}")
            else:
                params.append(Param(ParamKind.FP, f"var_{i}"))
        return tuple(params)

    def ast(self) -> GrammarAst:
        params = self.params()
        scope = _Scope(
            scalars=[ACCUMULATOR] + [p.name for p in params if p.kind is not ParamKind.FP_PTR],
            arrays=[p.name for p in params if p.kind is ParamKind.FP_PTR],
        )
        body = self.block(scope, 0, 0, True)
        return GrammarAst(params, body, self.cfg.precision)


def generate_ast(seed: int, cfg: GenConfig | None = None) -> GrammarAst:
    cfg = cfg or GenConfig()
    problems = cfg.validate()
    if problems:
        raise ValueError("invalid generation config: " + "; ".join(problems))
    return _Generator(seed, cfg).ast()


def generate_random_program(seed: int, cfg: GenConfig | None = None) -> ProgramSource:
    """Generate a complete C program; a pure function of ``(seed, cfg)``."""
    cfg = cfg or GenConfig()
    ast = generate_ast(seed, cfg)
    return ProgramSource(render_c(ast), cfg.precision, Provenance(GRAMMAR_RANDOM, seed=seed))
