import os
from pathlib import Path

import pytest

from fpdiff.compiler import (LEVELS, CompileJob, CompilerSpec, ConfigError, Family, OutcomeKind,
                             Role, ToolchainMissing, UnknownLevel, compile_all, compile_job,
                             expand_matrix, flags_for, guess_family, probe_toolchain)
from fpdiff.program.generator import generate_random_program

TABLE = {
    ("host", "O0_nofma"): ["-O0", "-ffp-contract=off"],
    ("device", "O0_nofma"): ["-O0", "--fmad=false"],
    ("host", "O0"): ["-O0"],
    ("device", "O0"): ["-O0"],
    ("host", "O1"): ["-O1"],
    ("device", "O1"): ["-O1"],
    ("host", "O2"): ["-O2"],
    ("device", "O2"): ["-O2"],
    ("host", "O3"): ["-O3"],
    ("device", "O3"): ["-O3"],
    ("host", "O3_fastmath"): ["-O3", "-ffast-math"],
    ("device", "O3_fastmath"): ["-O3", "--use_fast_math"],
}


@pytest.mark.parametrize("column,level", sorted(TABLE))
def test_flags_match_table(column, level):
    families = [Family.GCC, Family.CLANG] if column == "host" else [Family.NVCC]
    for fam in families:
        assert flags_for(fam, level) == TABLE[(column, level)]


def test_unknown_level():
    with pytest.raises(UnknownLevel):
        flags_for(Family.GCC, "O4")


def test_flags_are_fresh_lists():
    flags_for(Family.GCC, "O3").append("-g")
    assert flags_for(Family.GCC, "O3") == ["-O3"]


def test_device_role_requires_nvcc():
    with pytest.raises(ConfigError):
        CompilerSpec("gcc", "gcc", Family.GCC, Role.DEVICE)
    with pytest.raises(ConfigError):
        CompilerSpec("nvcc", "nvcc", Family.NVCC, Role.HOST)


@pytest.mark.parametrize("path,banner,family", [
    ("/usr/bin/gcc-12", "", Family.GCC),
    ("/usr/bin/clang", "", Family.CLANG),
    ("cc", "Ubuntu clang version 15", Family.CLANG),
    ("/usr/local/cuda/bin/nvcc", "", Family.NVCC),
])
def test_guess_family(path, banner, family):
    assert guess_family(path, banner) is family


def _specs(n_host=2, device=False):
    specs = [CompilerSpec(f"h{i}", "cc", Family.GCC) for i in range(n_host)]
    if device:
        specs.append(CompilerSpec("nvcc", "nvcc", Family.NVCC, Role.DEVICE))
    return specs


def test_matrix_three_compilers(tmp_path):
    jobs = expand_matrix("p", _specs(2, device=True), LEVELS, tmp_path / "p.c", tmp_path / "p.cu", tmp_path)
    assert len(jobs) == 18
    assert {j.source.suffix for j in jobs if j.compiler.role is Role.DEVICE} == {".cu"}
    assert {j.source.suffix for j in jobs if j.compiler.role is Role.HOST} == {".c"}
    assert len({j.output for j in jobs}) == 18


def test_matrix_two_host_compilers(tmp_path):
    jobs = expand_matrix("p", _specs(2), LEVELS, tmp_path / "p.c", None, tmp_path)
    assert len(jobs) == 12 and all(j.source.name == "p.c" for j in jobs)
    assert jobs[0].output == tmp_path / "p" / "h0-O0_nofma"


def test_matrix_needs_two_compilers(tmp_path):
    with pytest.raises(ConfigError):
        expand_matrix("p", _specs(1), LEVELS, tmp_path / "p.c", None, tmp_path)


def test_matrix_device_without_translation(tmp_path):
    with pytest.raises(ConfigError):
        expand_matrix("p", _specs(2, device=True), LEVELS, tmp_path / "p.c", None, tmp_path)


def test_host_jobs_link_libm(tmp_path):
    job = expand_matrix("p", _specs(2), ["O3_fastmath"], tmp_path / "p.c", None, tmp_path)[0]
    argv = job.argv()
    assert argv[:3] == ["cc", "-O3", "-ffast-math"] and argv[-1] == "-lm"


def test_compile_success(tmp_path, gcc):
    src = tmp_path / "ok.c"
    src.write_text(generate_random_program(3).c_text)
    out = compile_job(CompileJob("ok", gcc, "O2", src, tmp_path / "b" / "ok"))
    assert out.kind is OutcomeKind.SUCCESS and out.ok
    assert out.binary is not None and os.access(out.binary, os.X_OK)
    assert out.duration > 0


def test_compile_failure_keeps_diagnostics(tmp_path, gcc):
    src = tmp_path / "bad.c"
    src.write_text("int main(void) { return undeclared_thing; }\n")
    out = compile_job(CompileJob("bad", gcc, "O0", src, tmp_path / "bad"))
    assert out.kind is OutcomeKind.FAILURE
    assert "undeclared_thing" in out.diagnostics and out.exit_code not in (0, None)
    assert out.binary is None


PATHOLOGICAL = """
#define A(x) x x x x x x x x x x
#define B(x) A(A(A(x)))
#define C(x) B(B(B(x)))
int main(void) { int v = 0; C(v++;) return v; }
"""


def test_compile_timeout(tmp_path, gcc):
    src = tmp_path / "slow.c"
    src.write_text(PATHOLOGICAL)
    out = compile_job(CompileJob("slow", gcc, "O2", src, tmp_path / "slow"), timeout=1.0)
    assert out.kind is OutcomeKind.TIMEOUT
    assert out.duration < 10


def test_compile_all_one_outcome_per_job_in_order(tmp_path, host_pair):
    src = tmp_path / "p.c"
    src.write_text(generate_random_program(11).c_text)
    jobs = expand_matrix("p", host_pair, LEVELS, src, None, tmp_path / "build")
    outs = compile_all(jobs, workers=4)
    assert [o.job for o in outs] == jobs
    assert all(o.ok for o in outs)


def test_compile_missing_compiler(tmp_path):
    src = tmp_path / "p.c"
    src.write_text("int main(void){return 0;}\n")
    spec = CompilerSpec("ghost", "/nonexistent/cc", Family.GCC)
    out = compile_job(CompileJob("p", spec, "O0", src, tmp_path / "p"))
    assert out.kind is OutcomeKind.FAILURE


def test_probe_gcc(gcc):
    assert "gcc" in probe_toolchain(gcc).lower()


def test_probe_clang(clang):
    assert "clang" in probe_toolchain(clang).lower()


def test_probe_missing():
    with pytest.raises(ToolchainMissing):
        probe_toolchain("/definitely/not/a/compiler")
