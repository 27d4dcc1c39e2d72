from __future__ import annotations

import shutil

import pytest

from fpdiff.compiler import CompilerSpec, Family


def _spec(name: str, family: Family) -> CompilerSpec:
    if shutil.which(name) is None:
        pytest.skip(f"{name} not installed")
    return CompilerSpec(name, name, family)


@pytest.fixture
def gcc() -> CompilerSpec:
    return _spec("gcc", Family.GCC)


@pytest.fixture
def clang() -> CompilerSpec:
    return _spec("clang", Family.CLANG)


@pytest.fixture
def host_pair(gcc, clang) -> tuple[CompilerSpec, CompilerSpec]:
    return (gcc, clang)
