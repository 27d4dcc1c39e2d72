"""Input vectors for compute signatures.

Scalar fp values are log-uniform in magnitude over [1e-6, 1e6] with a random
sign, integers are uniform in [1, 10], arrays hold ``array_length`` values
drawn like scalars.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Any, Sequence

from ..program.ast import Param, ParamKind, Precision
from ..program.render import InputArg
from .fpbits import decode, encode


@dataclass(frozen=True)
class InputVector:
    values: tuple[InputArg, ...]
    rng_seed: int

    def argv(self) -> list[str]:
        out: list[str] = []
        for arg in self.values:
            if isinstance(arg.value, tuple):
                out.append(str(len(arg.value)))
                out.extend(repr(v) for v in arg.value)
            else:
                out.append(repr(arg.value))
        return out

    def to_json(self) -> dict[str, Any]:
        return {
            "rng_seed": self.rng_seed,
            "values": [{"name": a.name, "value": list(a.value) if isinstance(a.value, tuple) else a.value}
                       for a in self.values],
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "InputVector":
        values = tuple(
            InputArg(v["name"], tuple(v["value"]) if isinstance(v["value"], list) else v["value"])
            for v in data["values"]
        )
        return cls(values, data["rng_seed"])


def _fp_value(rng: random.Random, precision: Precision) -> float:
    magnitude = 10.0 ** rng.uniform(-6.0, 6.0)
    value = math.copysign(magnitude, rng.choice((-1.0, 1.0)))
    if precision is Precision.FP32:
        value = decode(encode(value, precision), precision)
    return value


def sample_inputs(signature: Sequence[Param], rng_seed: int,
                  precision: Precision = Precision.FP64, array_length: int = 10) -> InputVector:
    rng = random.Random(rng_seed)
    values = []
    for p in signature:
        if p.kind is ParamKind.INT:
            values.append(InputArg(p.name, rng.randint(1, 10)))
        elif p.kind is ParamKind.FP:
            values.append(InputArg(p.name, _fp_value(rng, precision)))
        else:
            length = p.length or array_length
            values.append(InputArg(p.name, tuple(_fp_value(rng, precision) for _ in range(length))))
    return InputVector(tuple(values), rng_seed)
