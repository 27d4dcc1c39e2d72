"""C to CUDA translation and main canonicalization.

Both work from the compute signature: the compute definition is copied
verbatim (with ``__global__`` prepended for CUDA) and ``main`` is
re-rendered for the argv input contract.
"""

from __future__ import annotations

from dataclasses import replace

from .ast import Param
from .lexer import LexError, Token, tokenize_c
from .render import HEADER_LINES, render_main
from .source import ProgramSource
from .structure import SignatureError, compute_span, parse_signature


class TranslateError(ValueError):
    pass


def _line_offsets(text: str) -> list[int]:
    offsets = [0]
    for i, ch in enumerate(text):
        if ch == "\n":
            offsets.append(i + 1)
    return offsets


def _offset(offsets: list[int], tok: Token) -> int:
    return offsets[tok.line - 1] + tok.column - 1


def split_compute(src: ProgramSource) -> tuple[tuple[Param, ...], str, str]:
    """Return (input signature, compute header text, compute body text).

    The body text runs from the opening to the closing brace inclusive.
    """
    try:
        tokens = tokenize_c(src.c_text)
        span = compute_span(tokens)
        signature = parse_signature(tokens, span, src.precision)
    except (LexError, SignatureError) as exc:
        raise TranslateError(str(exc)) from exc
    offsets = _line_offsets(src.c_text)
    start = _offset(offsets, tokens[span.start])
    lbrace = _offset(offsets, tokens[span.lbrace])
    rbrace = _offset(offsets, tokens[span.rbrace])
    header = src.c_text[start:lbrace].rstrip()
    body = src.c_text[lbrace:rbrace + 1]
    return signature, header, body


def translate_to_cuda(src: ProgramSource) -> ProgramSource:
    """Turn compute into a single-thread kernel and marshal its arguments."""
    signature, header, body = split_compute(src)
    text = (HEADER_LINES + "\n" + "__global__ " + header + " " + body + "\n\n"
            + render_main(signature, src.precision, cuda=True))
    return replace(src, c_text=text, dialect="cuda")


def canonicalize_main(src: ProgramSource) -> ProgramSource:
    """Keep compute verbatim and replace everything else with the canonical
    headers and argv-driven main, so host and device builds share one input
    and output contract."""
    signature, header, body = split_compute(src)
    text = (HEADER_LINES + "\n" + header + " " + body + "\n\n"
            + render_main(signature, src.precision))
    return replace(src, c_text=text)
