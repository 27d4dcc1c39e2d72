"""Bit-level handling of printed floating-point results."""

from __future__ import annotations

import enum
import math
import re
import struct

import numpy as np

from ..program.ast import Precision


class Category(enum.Enum):
    REAL = "REAL"
    ZERO = "ZERO"
    POS_INF = "POS_INF"
    NEG_INF = "NEG_INF"
    NAN = "NAN"


CATEGORY_ORDER = (Category.REAL, Category.ZERO, Category.POS_INF, Category.NEG_INF, Category.NAN)
_RANK = {c: i for i, c in enumerate(CATEGORY_ORDER)}

# (exponent bits, mantissa bits)
_LAYOUT = {Precision.FP32: (8, 23), Precision.FP64: (11, 52)}

_HEX_RE = {
    Precision.FP32: re.compile(r"[0-9a-f]{8}\n?"),
    Precision.FP64: re.compile(r"[0-9a-f]{16}\n?"),
}

DIGITS = 16


class MalformedOutput(ValueError):
    pass


def parse_output(stdout_text: str, precision: Precision = Precision.FP64) -> int:
    """Return the bit pattern printed by a test program."""
    if not _HEX_RE[precision].fullmatch(stdout_text):
        raise MalformedOutput(f"expected {precision.hex_digits} lowercase hex digits, got {stdout_text[:64]!r}")
    return int(stdout_text.rstrip("\n"), 16)


def format_bits(bits: int, precision: Precision = Precision.FP64) -> str:
    return f"{bits:0{precision.hex_digits}x}"


def classify(bits: int, precision: Precision = Precision.FP64) -> Category:
    exp_bits, man_bits = _LAYOUT[precision]
    mantissa = bits & ((1 << man_bits) - 1)
    exponent = (bits >> man_bits) & ((1 << exp_bits) - 1)
    if exponent == (1 << exp_bits) - 1:
        if mantissa:
            return Category.NAN
        return Category.NEG_INF if bits >> (exp_bits + man_bits) else Category.POS_INF
    if exponent == 0 and mantissa == 0:
        return Category.ZERO
    return Category.REAL


def classify_array(bits: np.ndarray, precision: Precision = Precision.FP64) -> np.ndarray:
    """Vectorized classify; returns indices into CATEGORY_ORDER as uint8."""
    exp_bits, man_bits = _LAYOUT[precision]
    dtype = np.uint32 if precision is Precision.FP32 else np.uint64
    b = bits.astype(dtype, copy=False)
    man_mask = dtype((1 << man_bits) - 1)
    exp_max = dtype((1 << exp_bits) - 1)
    exponent = (b >> dtype(man_bits)) & exp_max
    has_mantissa = (b & man_mask) != 0
    negative = (b >> dtype(exp_bits + man_bits)) != 0
    special = exponent == exp_max
    out = np.zeros(b.shape, dtype=np.uint8)  # REAL
    out[(exponent == 0) & ~has_mantissa] = _RANK[Category.ZERO]
    out[special & ~has_mantissa & ~negative] = _RANK[Category.POS_INF]
    out[special & ~has_mantissa & negative] = _RANK[Category.NEG_INF]
    out[special & has_mantissa] = _RANK[Category.NAN]
    return out


def decode(bits: int, precision: Precision = Precision.FP64) -> float:
    if precision is Precision.FP32:
        return struct.unpack(">f", bits.to_bytes(4, "big"))[0]
    return struct.unpack(">d", bits.to_bytes(8, "big"))[0]


def encode(value: float, precision: Precision = Precision.FP64) -> int:
    if precision is Precision.FP32:
        return int.from_bytes(struct.pack(">f", value), "big")
    return int.from_bytes(struct.pack(">d", value), "big")


def kind_pair(a: Category, b: Category) -> tuple[Category, Category]:
    """Unordered pair of categories in canonical order."""
    return (a, b) if _RANK[a] <= _RANK[b] else (b, a)


def _digits(value: float) -> tuple[bool, str, int]:
    text = format(abs(value), f".{DIGITS - 1}e")
    mantissa, exponent = text.split("e")
    return math.copysign(1.0, value) < 0, mantissa.replace(".", ""), int(exponent)


def digit_difference(a: float, b: float) -> int:
    """Number of disagreeing leading significant digits among the first 16.

    Both values are rounded to 16 significant decimal digits.  Different
    signs or decimal exponents give 16.  Values whose 16-digit renderings
    coincide (they differ beyond the 16th digit) count as 1.
    """
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("digit difference is defined for finite values only")
    sign_a, digits_a, exp_a = _digits(a)
    sign_b, digits_b, exp_b = _digits(b)
    if sign_a != sign_b or exp_a != exp_b:
        return DIGITS
    common = 0
    for x, y in zip(digits_a, digits_b):
        if x != y:
            break
        common += 1
    return max(1, DIGITS - common)
