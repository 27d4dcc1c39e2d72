"""Render a GrammarAst as a complete C translation unit.

Calling convention: ``compute`` takes the accumulator ``comp`` as its first
argument, then the input parameters, then an out-pointer ``result`` that
receives the final accumulator.  ``main`` reads every input from ``argv``
in signature order (arrays as a length followed by that many values),
calls ``compute`` and prints the raw bits of the result as lowercase hex.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .ast import (
    ACCUMULATOR,
    RESULT_PARAM,
    Assign,
    BinOp,
    Block,
    Call,
    Expr,
    For,
    GrammarAst,
    If,
    Index,
    Num,
    Param,
    ParamKind,
    Paren,
    Precision,
    Var,
    check_invariants,
    math_func_name,
)

ALLOWED_HEADERS = ("stdio.h", "stdlib.h", "math.h")
HEADER_LINES = "".join(f"#include <{h}>\n" for h in ALLOWED_HEADERS)
INDENT = "  "


class RenderError(ValueError):
    pass


@dataclass(frozen=True)
class InputArg:
    """One input value in signature order: a scalar or an array fill."""

    name: str
    value: float | int | tuple[float, ...]


def render_expr(expr: Expr, precision: Precision) -> str:
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Index):
        return f"{expr.array}[{expr.index}]"
    if isinstance(expr, Num):
        return expr.text
    if isinstance(expr, Paren):
        return "(" + render_expr(expr.inner, precision) + ")"
    if isinstance(expr, BinOp):
        return f"{render_expr(expr.left, precision)} {expr.op} {render_expr(expr.right, precision)}"
    if isinstance(expr, Call):
        args = ", ".join(render_expr(a, precision) for a in expr.args)
        return f"{math_func_name(expr.func, precision)}({args})"
    raise RenderError(f"unknown expression node {expr!r}")


def _render_block(block: Block, precision: Precision, depth: int, out: list[str]) -> None:
    pad = INDENT * depth
    fp = precision.c_type
    for stmt in block.stmts:
        if isinstance(stmt, Assign):
            expr = render_expr(stmt.expr, precision)
            if stmt.declare:
                out.append(f"{pad}{fp} {stmt.target} {stmt.op} {expr};")
            else:
                out.append(f"{pad}{stmt.target} {stmt.op} {expr};")
        elif isinstance(stmt, If):
            cond = f"{stmt.cond.name} {stmt.cond.op} {render_expr(stmt.cond.expr, precision)}"
            out.append(f"{pad}if ({cond}) {{")
            _render_block(stmt.body, precision, depth + 1, out)
            out.append(f"{pad}}}")
        elif isinstance(stmt, For):
            v = stmt.var
            out.append(f"{pad}for (int {v} = 0; {v} < {stmt.bound}; ++{v}) {{")
            _render_block(stmt.body, precision, depth + 1, out)
            out.append(f"{pad}}}")
        else:
            raise RenderError(f"unknown statement node {stmt!r}")


def param_decl(param: Param, precision: Precision) -> str:
    if param.kind is ParamKind.INT:
        return f"int {param.name}"
    if param.kind is ParamKind.FP:
        return f"{precision.c_type} {param.name}"
    return f"{precision.c_type}* {param.name}"


def render_signature(signature: Sequence[Param], precision: Precision, qualifier: str = "") -> str:
    params = [param_decl(p, precision) for p in signature]
    params.append(f"{precision.c_type}* {RESULT_PARAM}")
    prefix = f"{qualifier} " if qualifier else ""
    return f"{prefix}void compute({', '.join(params)})"


def render_compute(ast: GrammarAst) -> str:
    problems = [p for p in check_invariants(ast) if p.startswith("unresolved")]
    if problems:
        raise RenderError("; ".join(problems))
    lines = [render_signature(ast.signature(), ast.precision) + " {"]
    _render_block(ast.body, ast.precision, 1, lines)
    lines.append(f"{INDENT}*{RESULT_PARAM} = {ACCUMULATOR};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _literal(value: float | int, precision: Precision) -> str:
    if isinstance(value, int):
        return str(value)
    text = repr(float(value))
    if text in ("inf", "-inf", "nan"):
        raise RenderError(f"cannot embed non-finite input {text}")
    return text + ("f" if precision is Precision.FP32 else "")


def render_main(
    signature: Sequence[Param],
    precision: Precision,
    *,
    cuda: bool = False,
    inputs: Sequence[InputArg] | None = None,
) -> str:
    """Render ``main`` for the given compute signature.

    With ``inputs`` the values are embedded as constants instead of being
    read from ``argv``.
    """
    fp = precision.c_type
    parse = precision.parse_func
    lines = ["int main(int argc, char** argv) {"]
    add = lambda s: lines.append(INDENT + s)  # noqa: E731
    by_name = {a.name: a for a in inputs} if inputs is not None else None
    if by_name is None:
        add(f"if (argc < 2) {{ return 2; }}")
        add("int ai = 1;")
    call_args: list[str] = []
    arrays: list[Param] = []
    for p in signature:
        local = f"arg_{p.name}"
        if by_name is not None and p.name not in by_name:
            raise RenderError(f"no input value for parameter {p.name}")
        if p.kind is ParamKind.INT:
            src = str(by_name[p.name].value) if by_name is not None else "atoi(argv[ai++])"
            add(f"int {local} = {src};")
            call_args.append(local)
        elif p.kind is ParamKind.FP:
            src = (_literal(by_name[p.name].value, precision) if by_name is not None
                   else f"{parse}(argv[ai++], NULL)")
            add(f"{fp} {local} = {src};")
            call_args.append(local)
        else:
            length = f"len_{p.name}"
            if by_name is not None:
                fills = tuple(by_name[p.name].value)  # type: ignore[arg-type]
                add(f"int {length} = {len(fills)};")
                add(f"{fp}* {local} = ({fp}*) malloc(sizeof({fp}) * {length});")
                for k, v in enumerate(fills):
                    add(f"{local}[{k}] = {_literal(v, precision)};")
            else:
                add(f"int {length} = atoi(argv[ai++]);")
                add(f"{fp}* {local} = ({fp}*) malloc(sizeof({fp}) * {length});")
                add(f"for (int k = 0; k < {length}; ++k) {{ {local}[k] = {parse}(argv[ai++], NULL); }}")
            arrays.append(p)
            call_args.append(f"dev_{p.name}" if cuda else local)
    add(f"{fp} {RESULT_PARAM} = 0;")
    if cuda:
        for p in arrays:
            size = f"sizeof({fp}) * len_{p.name}"
            add(f"{fp}* dev_{p.name};")
            add(f"cudaMalloc((void**) &dev_{p.name}, {size});")
            add(f"cudaMemcpy(dev_{p.name}, arg_{p.name}, {size}, cudaMemcpyHostToDevice);")
        add(f"{fp}* dev_{RESULT_PARAM};")
        add(f"cudaMalloc((void**) &dev_{RESULT_PARAM}, sizeof({fp}));")
        call_args.append(f"dev_{RESULT_PARAM}")
        add(f"compute<<<1, 1>>>({', '.join(call_args)});")
        add("cudaDeviceSynchronize();")
        add(f"cudaMemcpy(&{RESULT_PARAM}, dev_{RESULT_PARAM}, sizeof({fp}), cudaMemcpyDeviceToHost);")
    else:
        call_args.append(f"&{RESULT_PARAM}")
        add(f"compute({', '.join(call_args)});")
    add(f"union {{ {fp} value; {precision.uint_type} bits; }} out;")
    add(f"out.value = {RESULT_PARAM};")
    add(f'printf("{precision.printf_format}\\n", out.bits);')
    if cuda:
        for p in arrays:
            add(f"cudaFree(dev_{p.name});")
        add(f"cudaFree(dev_{RESULT_PARAM});")
    for p in arrays:
        add(f"free(arg_{p.name});")
    add("return 0;")
    lines.append("}")
    return "\n".join(lines) + "\n"


def render_c(ast: GrammarAst, inputs_by_argv: bool = True,
             inputs: Sequence[InputArg] | None = None) -> str:
    """Render ``ast`` as a full C program.

    When ``inputs_by_argv`` is false, ``inputs`` must be given and are baked
    into ``main`` so the program runs without arguments.
    """
    if not inputs_by_argv and inputs is None:
        raise RenderError("inputs are required when not reading them from argv")
    main = render_main(ast.signature(), ast.precision,
                       inputs=None if inputs_by_argv else inputs)
    return HEADER_LINES + "\n" + render_compute(ast) + "\n" + main
