"""Compiler x optimization-level matrix and compiler invocation."""

from __future__ import annotations

import enum
import os
import shutil
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

from .proc import run_command

LEVELS = ("O0_nofma", "O0", "O1", "O2", "O3", "O3_fastmath")
DEFAULT_COMPILE_TIMEOUT = 60.0


class Family(enum.Enum):
    GCC = "gcc-like"
    CLANG = "clang-like"
    NVCC = "nvcc-like"


class Role(enum.Enum):
    HOST = "host"
    DEVICE = "device"


# One row per level: (gcc/clang flags, nvcc flags)
_FLAG_TABLE = {
    "O0_nofma": (("-O0", "-ffp-contract=off"), ("-O0", "--fmad=false")),
    "O0": (("-O0",), ("-O0",)),
    "O1": (("-O1",), ("-O1",)),
    "O2": (("-O2",), ("-O2",)),
    "O3": (("-O3",), ("-O3",)),
    "O3_fastmath": (("-O3", "-ffast-math"), ("-O3", "--use_fast_math")),
}


class UnknownLevel(ValueError):
    pass


class ConfigError(ValueError):
    pass


class ToolchainMissing(RuntimeError):
    pass


def flags_for(family: Family | str, level: str) -> list[str]:
    family = Family(family)
    try:
        host, device = _FLAG_TABLE[level]
    except KeyError:
        raise UnknownLevel(level) from None
    return list(device if family is Family.NVCC else host)


@dataclass
class CompilerSpec:
    name: str
    path: str
    family: Family
    role: Role = Role.HOST
    version: str = ""

    def __post_init__(self) -> None:
        self.family = Family(self.family)
        self.role = Role(self.role)
        if self.role is Role.DEVICE and self.family is not Family.NVCC:
            raise ConfigError(f"{self.name}: device compilers must be nvcc-like")
        if self.family is Family.NVCC and self.role is not Role.DEVICE:
            raise ConfigError(f"{self.name}: nvcc-like compilers are device compilers")


def guess_family(path: str, banner: str = "") -> Family:
    text = (Path(path).name + " " + banner).lower()
    if "nvcc" in text or "cuda compilation tools" in text:
        return Family.NVCC
    if "clang" in text:
        return Family.CLANG
    return Family.GCC


def probe_toolchain(spec: CompilerSpec | str, timeout: float = 30.0) -> str:
    """Return the compiler's version banner (first non-empty lines)."""
    path = spec.path if isinstance(spec, CompilerSpec) else spec
    exe = shutil.which(path)
    if exe is None:
        raise ToolchainMissing(f"compiler not found: {path}")
    try:
        res = run_command([exe, "--version"], timeout=timeout)
    except OSError as exc:
        raise ToolchainMissing(f"cannot run {path}: {exc}") from exc
    if res.timed_out or res.returncode != 0:
        raise ToolchainMissing(f"{path} --version failed")
    lines = [ln.strip() for ln in (res.stdout or res.stderr).splitlines() if ln.strip()]
    banner = lines[0] if lines else ""
    if isinstance(spec, CompilerSpec) and spec.family is Family.NVCC:
        banner = " | ".join(lines[-2:]) if lines else banner
    return banner


def cuda_device_present() -> bool:
    if any(Path("/dev").glob("nvidia[0-9]*")):
        return True
    smi = shutil.which("nvidia-smi")
    if smi is None:
        return False
    res = run_command([smi, "-L"], timeout=30.0)
    return res.returncode == 0 and "GPU" in res.stdout


@dataclass(frozen=True)
class CompileJob:
    program_id: str
    compiler: CompilerSpec
    level: str
    source: Path
    output: Path

    @property
    def config(self) -> tuple[str, str]:
        return (self.compiler.name, self.level)

    def argv(self) -> list[str]:
        cmd = [self.compiler.path, *flags_for(self.compiler.family, self.level),
               "-o", str(self.output), str(self.source)]
        if self.compiler.role is Role.HOST:
            cmd.append("-lm")
        return cmd


class OutcomeKind(enum.Enum):
    SUCCESS = "success"
    FAILURE = "failure"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class CompileOutcome:
    job: CompileJob
    kind: OutcomeKind
    duration: float
    binary: Path | None = None
    diagnostics: str = ""
    exit_code: int | None = None

    @property
    def ok(self) -> bool:
        return self.kind is OutcomeKind.SUCCESS


def expand_matrix(
    program_id: str,
    compilers: Sequence[CompilerSpec],
    levels: Sequence[str],
    c_source: Path,
    cuda_source: Path | None,
    build_dir: Path,
) -> list[CompileJob]:
    """One job per (compiler, level); device compilers build the CUDA text."""
    if len(compilers) < 2:
        raise ConfigError("differential testing needs at least two compilers")
    for level in levels:
        if level not in _FLAG_TABLE:
            raise UnknownLevel(level)
    jobs = []
    for spec in compilers:
        if spec.role is Role.DEVICE:
            if cuda_source is None:
                raise ConfigError(f"{program_id}: no CUDA translation for device compiler {spec.name}")
            source = cuda_source
        else:
            source = c_source
        for level in levels:
            out = build_dir / program_id / f"{spec.name}-{level}"
            jobs.append(CompileJob(program_id, spec, level, source, out))
    return jobs


def compile_job(job: CompileJob, timeout: float = DEFAULT_COMPILE_TIMEOUT) -> CompileOutcome:
    job.output.parent.mkdir(parents=True, exist_ok=True)
    if job.output.exists():
        job.output.unlink()
    with tempfile.TemporaryDirectory(prefix="fpdiff-cc-") as workdir:
        # absolute paths: the compiler runs in a private working directory
        argv = replace(job, source=job.source.resolve(), output=job.output.resolve()).argv()
        try:
            res = run_command(argv, timeout=timeout, cwd=workdir)
        except OSError as exc:
            return CompileOutcome(job, OutcomeKind.FAILURE, 0.0, diagnostics=str(exc))
    if res.timed_out:
        return CompileOutcome(job, OutcomeKind.TIMEOUT, res.duration, diagnostics=res.stderr)
    if res.returncode != 0 or not os.access(job.output, os.X_OK):
        return CompileOutcome(job, OutcomeKind.FAILURE, res.duration, diagnostics=res.stderr,
                              exit_code=res.returncode)
    return CompileOutcome(job, OutcomeKind.SUCCESS, res.duration, binary=job.output, exit_code=0)


def compile_all(jobs: Iterable[CompileJob], timeout: float = DEFAULT_COMPILE_TIMEOUT,
                workers: int | None = None) -> list[CompileOutcome]:
    """Compile jobs in a bounded pool; outcomes come back in job order."""
    jobs = list(jobs)
    workers = workers or os.cpu_count() or 1
    if workers == 1 or len(jobs) <= 1:
        return [compile_job(j, timeout) for j in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda j: compile_job(j, timeout), jobs))
