"""Prompt templates for the two generation strategies."""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass

from ..program.ast import MATH_FUNCS, Precision
from ..program.grammar import GRAMMAR_TEXT
from ..program.render import ALLOWED_HEADERS
from ..program.source import ProgramSource


class Strategy(enum.Enum):
    GRAMMAR_BASED = "grammar"
    FEEDBACK_MUTATION = "mutation"


@dataclass(frozen=True)
class Prompt:
    strategy: Strategy
    text: str
    precision: Precision
    parent_program_id: str | None = None

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.text.encode("utf-8")).hexdigest()


PROGRAM_BEGIN = "--- BEGIN PROGRAM ---"
PROGRAM_END = "--- END PROGRAM ---"

OUTPUT_INSTRUCTION = (
    "Reply with the C source code only. Do not use Markdown code fences and "
    "do not add any explanation before or after the code."
)

MUTATION_STRATEGIES = (
    "Reorder the arithmetic expressions or nest them more deeply.",
    "Change the numeric constants.",
    "Introduce new control flow, such as nested loops or conditionals.",
    "Call different functions from the C math library.",
    "Insert intermediate computations stored in temporary variables.",
)


def precision_directive(precision: Precision) -> str:
    if precision is Precision.FP32:
        return ("Precision: use single precision. Every floating-point parameter, "
                "variable and temporary must have type float, floating-point literals "
                "need an f suffix, and math functions must be the float variants "
                "(sinf, expf, ...).")
    return ("Precision: use double precision. Every floating-point parameter, "
            "variable and temporary must have type double.")


def structure_text(precision: Precision) -> str:
    fp = precision.c_type
    fmt = precision.printf_format
    uint = precision.uint_type
    return f"""\
Program structure:
- The program defines exactly two functions, main and compute, and nothing else at file scope except #include lines.
- compute has the signature void compute({fp} comp, <inputs...>, {fp}* result). Inputs are int, {fp} or {fp}* parameters. compute performs a sequence of arithmetic operations that update the scalar accumulator comp, and its last statement is *result = comp;
- main reads the inputs of compute from the command line in parameter order: comp first, then each input. Scalars are parsed with strtod (or atoi for int); an array is given as its length followed by that many values. main calls compute and prints the final result as its raw bit pattern in lowercase hexadecimal:
    union {{ {fp} value; {uint} bits; }} out;
    out.value = result;
    printf("{fmt}\\n", out.bits);
  Nothing else may be printed."""


def grammar_section() -> str:
    funcs = ", ".join(MATH_FUNCS)
    return (
        "The body of compute must follow this grammar:\n"
        + GRAMMAR_TEXT
        + f"<op> is one of + - * /, <assign-op> is one of = += -= *= /=, <bool-op> is one of "
        "< > <= >= == !=, and <fp-type> is the floating-point type given above. Loop variables "
        "start at 0 (for (int i = 0; i < 8; ++i)). A term may also be an array element indexed "
        f"by a loop variable, or a call to one of these math functions: {funcs}."
    )


def guidelines() -> str:
    headers = ", ".join(ALLOWED_HEADERS)
    return (
        "Guidelines:\n"
        f"- Include only these headers: {headers}.\n"
        "- Initialize every variable before it is used.\n"
        "- Avoid undefined behavior: no out-of-bounds array accesses, no uninitialized reads, "
        "no integer overflow or integer division by zero."
    )


def build_grammar_prompt(precision: Precision, grammar_text: str = GRAMMAR_TEXT,
                         extra_guidelines: str = "") -> Prompt:
    if not grammar_text.strip():
        raise ValueError("grammar text must not be empty")
    section = grammar_section().replace(GRAMMAR_TEXT, grammar_text)
    parts = [
        "Write a new C program that performs floating-point computations. Make it random "
        "in its choice of operations and structure, but keep it valid, compilable C.",
        precision_directive(precision),
        structure_text(precision),
        section,
        guidelines() + (("\n" + extra_guidelines) if extra_guidelines else ""),
        OUTPUT_INSTRUCTION,
    ]
    return Prompt(Strategy.GRAMMAR_BASED, "\n\n".join(parts), precision)


def build_mutation_prompt(parent: ProgramSource, precision: Precision,
                          parent_id: str | None = None) -> Prompt:
    if parent_id is None:
        parent_id = hashlib.sha256(parent.c_text.encode("utf-8")).hexdigest()[:12]
    strategies = "\n".join(f"{i}. {s}" for i, s in enumerate(MUTATION_STRATEGIES, 1))
    parts = [
        "Modify the C program below into a new program whose floating-point behavior is "
        "different from the original. Do not return the original program.",
        precision_directive(precision),
        structure_text(precision),
        guidelines(),
        "Consider these mutation strategies:\n" + strategies,
        f"Program to modify:\n{PROGRAM_BEGIN}\n{parent.c_text}{PROGRAM_END}",
        OUTPUT_INSTRUCTION,
    ]
    return Prompt(Strategy.FEEDBACK_MUTATION, "\n\n".join(parts), precision, parent_id)


def embedded_program(prompt_text: str) -> str | None:
    """The parent program embedded in a mutation prompt, if any."""
    start = prompt_text.find(PROGRAM_BEGIN + "\n")
    end = prompt_text.rfind(PROGRAM_END)
    if start < 0 or end < 0:
        return None
    return prompt_text[start + len(PROGRAM_BEGIN) + 1:end]
