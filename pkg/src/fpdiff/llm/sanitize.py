"""Turn raw model responses into candidate program sources."""

from __future__ import annotations

import re
from dataclasses import replace

from ..program.ast import Precision
from ..program.cuda import TranslateError, canonicalize_main
from ..program.source import LLM_GRAMMAR, ProgramSource, Provenance
from ..program.structure import validate_structure


class RejectedProgram(ValueError):
    def __init__(self, reason: str) -> None:
        super().__init__(reason)
        self.reason = reason


_FENCE = re.compile(r"```[^\n`]*\n(.*?)(?:```|\Z)", re.S)


def _unfence(text: str) -> str:
    blocks = _FENCE.findall(text)
    if not blocks:
        return text
    # several fenced blocks: prefer the one holding the program
    with_main = [b for b in blocks if "main" in b]
    return max(with_main or blocks, key=len)


def extract_code(raw_text: str) -> str:
    text = _unfence(raw_text.replace("\r\n", "\n"))
    start = text.find("#include")
    if start > 0:
        text = text[start:]
    end = text.rfind("}")
    if end >= 0:
        text = text[:end + 1]
    return text.strip() + "\n"


def sanitize_response(raw_text: str, precision: Precision = Precision.FP64,
                      provenance: Provenance | None = None) -> ProgramSource:
    text = extract_code(raw_text)
    if not text.strip():
        raise RejectedProgram("empty response")
    report = validate_structure(text)
    if not report.ok:
        raise RejectedProgram(report.violations[0])
    return ProgramSource(text, precision, provenance or Provenance(LLM_GRAMMAR))


def accept_response(raw_text: str, precision: Precision = Precision.FP64,
                    provenance: Provenance | None = None) -> ProgramSource:
    """Sanitize, then swap in the canonical argv-driven main.

    compute is kept byte for byte; only the harness is normalized so every
    build of the program reads the same inputs and prints the same way.
    """
    src = sanitize_response(raw_text, precision, provenance)
    try:
        canon = canonicalize_main(src)
    except TranslateError as exc:
        raise RejectedProgram(f"unsupported compute signature: {exc}") from exc
    report = validate_structure(canon)
    if not report.ok:
        raise RejectedProgram(report.violations[0])
    return replace(canon, precision=precision)
