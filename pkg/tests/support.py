"""Shared builders for synthetic records and corpora."""

from fpdiff.diffexec.compare import BASELINE, CROSS, ComparisonRecord
from fpdiff.diffexec.fpbits import Category, kind_pair


def record(pid="p0", level="O3", a="gcc", b="clang", kinds=(Category.REAL, Category.REAL),
           inconsistent=True, digit_diff=None, mode=CROSS):
    if mode == BASELINE:
        config_a, config_b = (a, "O0_nofma"), (a, level)
    else:
        config_a, config_b = (a, level), (b, level)
    pair = kind_pair(*kinds)
    if inconsistent and digit_diff is None and set(pair) <= {Category.REAL, Category.ZERO}:
        digit_diff = 5
    return ComparisonRecord(pid, mode, level, config_a, config_b, inconsistent, pair,
                            digit_diff if inconsistent else None, 0, 1 if inconsistent else 0)
