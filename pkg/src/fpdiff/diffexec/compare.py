"""Pairwise bitwise comparison of execution results."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

from ..program.ast import Precision
from .fpbits import Category, classify, decode, digit_difference, format_bits, kind_pair

RECORD_SCHEMA = 1
BASELINE_LEVEL = "O0_nofma"

CROSS = "cross"
BASELINE = "baseline"

Config = tuple[str, str]  # (compiler name, level name)


@dataclass(frozen=True)
class FpObservation:
    bits: int
    value: float
    category: Category
    config: Config

    @classmethod
    def from_bits(cls, bits: int, config: Config, precision: Precision = Precision.FP64) -> "FpObservation":
        return cls(bits, decode(bits, precision), classify(bits, precision), config)


class Status(enum.Enum):
    OK = "ok"
    CRASH = "crash"
    TIMEOUT = "timeout"
    MALFORMED = "malformed"


@dataclass(frozen=True)
class ExecutionOutcome:
    status: Status
    observation: FpObservation | None = None
    duration: float = 0.0
    returncode: int | None = None
    stdout: str = ""

    @property
    def ok(self) -> bool:
        return self.status is Status.OK

    def describe(self) -> str:
        if self.status is Status.CRASH:
            rc = self.returncode
            return f"crash (signal {-rc})" if rc is not None and rc < 0 else f"crash (exit {rc})"
        return self.status.value


@dataclass(frozen=True)
class ComparisonRecord:
    program_id: str
    mode: str
    level: str
    config_a: Config
    config_b: Config
    inconsistent: bool
    kind_pair: tuple[Category, Category]
    digit_diff: int | None
    bits_a: int
    bits_b: int
    precision: Precision = Precision.FP64

    def to_json(self) -> dict[str, Any]:
        return {
            "schema": RECORD_SCHEMA,
            "type": "comparison",
            "program": self.program_id,
            "mode": self.mode,
            "level": self.level,
            "config_a": list(self.config_a),
            "config_b": list(self.config_b),
            "inconsistent": self.inconsistent,
            "kind_pair": [c.value for c in self.kind_pair],
            "digit_diff": self.digit_diff,
            "bits_a": format_bits(self.bits_a, self.precision),
            "bits_b": format_bits(self.bits_b, self.precision),
        }

    @classmethod
    def from_json(cls, data: Mapping[str, Any], precision: Precision = Precision.FP64) -> "ComparisonRecord":
        a, b = (Category(c) for c in data["kind_pair"])
        return cls(
            program_id=data["program"],
            mode=data["mode"],
            level=data["level"],
            config_a=tuple(data["config_a"]),
            config_b=tuple(data["config_b"]),
            inconsistent=data["inconsistent"],
            kind_pair=(a, b),
            digit_diff=data.get("digit_diff"),
            bits_a=int(data["bits_a"], 16),
            bits_b=int(data["bits_b"], 16),
            precision=precision,
        )


@dataclass(frozen=True)
class Exclusion:
    program_id: str
    mode: str
    level: str
    config_a: Config
    config_b: Config
    reason: str

    def to_json(self) -> dict[str, Any]:
        return {
            "schema": RECORD_SCHEMA,
            "type": "exclusion",
            "program": self.program_id,
            "mode": self.mode,
            "level": self.level,
            "config_a": list(self.config_a),
            "config_b": list(self.config_b),
            "reason": self.reason,
        }

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "Exclusion":
        return cls(data["program"], data["mode"], data["level"], tuple(data["config_a"]),
                   tuple(data["config_b"]), data["reason"])


_FINITE = (Category.REAL, Category.ZERO)


def compare_pair(obs_a: FpObservation, obs_b: FpObservation, program_id: str = "",
                 precision: Precision = Precision.FP64) -> ComparisonRecord:
    (comp_a, level_a), (comp_b, level_b) = obs_a.config, obs_b.config
    if level_a == level_b:
        mode, level = CROSS, level_a
    elif comp_a == comp_b:
        mode = BASELINE
        level = level_b if level_a == BASELINE_LEVEL else level_a
    else:
        raise ValueError("observations share neither level nor compiler")
    inconsistent = obs_a.bits != obs_b.bits
    digits = None
    if inconsistent and obs_a.category in _FINITE and obs_b.category in _FINITE:
        digits = digit_difference(obs_a.value, obs_b.value)
    return ComparisonRecord(
        program_id=program_id,
        mode=mode,
        level=level,
        config_a=obs_a.config,
        config_b=obs_b.config,
        inconsistent=inconsistent,
        kind_pair=kind_pair(obs_a.category, obs_b.category),
        digit_diff=digits,
        bits_a=obs_a.bits,
        bits_b=obs_b.bits,
        precision=precision,
    )


def _failure(config: Config, outcome: ExecutionOutcome | None) -> str:
    what = "not built" if outcome is None else outcome.describe()
    return f"{config[0]}@{config[1]}: {what}"


def run_differential(
    program_id: str,
    outcomes: Mapping[Config, ExecutionOutcome],
    compilers: Sequence[str],
    levels: Sequence[str],
    precision: Precision = Precision.FP64,
) -> tuple[list[ComparisonRecord], list[Exclusion]]:
    """All compiler pairs at every level; configs without an Ok outcome
    (including ones that never built) turn their pairs into exclusions."""
    records: list[ComparisonRecord] = []
    exclusions: list[Exclusion] = []
    for level in levels:
        for ca, cb in itertools.combinations(compilers, 2):
            a, b = (ca, level), (cb, level)
            oa, ob = outcomes.get(a), outcomes.get(b)
            if oa is not None and ob is not None and oa.ok and ob.ok:
                records.append(compare_pair(oa.observation, ob.observation, program_id, precision))
            else:
                bad = [_failure(c, o) for c, o in ((a, oa), (b, ob)) if o is None or not o.ok]
                exclusions.append(Exclusion(program_id, CROSS, level, a, b, "; ".join(bad)))
    return records, exclusions


def baseline_comparisons(
    program_id: str,
    compiler: str,
    outcomes: Mapping[Config, ExecutionOutcome],
    levels: Sequence[str],
    precision: Precision = Precision.FP64,
) -> tuple[list[ComparisonRecord], list[Exclusion]]:
    """Compare every other level of one compiler against its O0_nofma build."""
    base_cfg = (compiler, BASELINE_LEVEL)
    base = outcomes.get(base_cfg)
    records: list[ComparisonRecord] = []
    exclusions: list[Exclusion] = []
    for level in levels:
        if level == BASELINE_LEVEL:
            continue
        cfg = (compiler, level)
        other = outcomes.get(cfg)
        if base is None or not base.ok:
            exclusions.append(Exclusion(program_id, BASELINE, level, base_cfg, cfg,
                                        "baseline missing: " + _failure(base_cfg, base)))
        elif other is None or not other.ok:
            exclusions.append(Exclusion(program_id, BASELINE, level, base_cfg, cfg, _failure(cfg, other)))
        else:
            records.append(compare_pair(base.observation, other.observation, program_id, precision))
    return records, exclusions


def is_successful(records: Sequence[ComparisonRecord]) -> bool:
    return any(r.inconsistent and r.mode == CROSS for r in records)
