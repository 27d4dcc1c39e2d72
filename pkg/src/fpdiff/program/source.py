from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any

from .ast import Precision

GRAMMAR_RANDOM = "grammar-random"
LLM_GRAMMAR = "llm-grammar"
LLM_MUTATION = "llm-mutation"


@dataclass(frozen=True)
class Provenance:
    kind: str
    seed: int | None = None
    prompt_id: str | None = None
    parent_id: str | None = None

    def to_json(self) -> dict[str, Any]:
        return {k: v for k, v in asdict(self).items() if v is not None}

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "Provenance":
        return cls(**data)


@dataclass(frozen=True)
class ProgramSource:
    c_text: str
    precision: Precision = Precision.FP64
    provenance: Provenance = field(default_factory=lambda: Provenance(GRAMMAR_RANDOM))
    dialect: str = "c"
