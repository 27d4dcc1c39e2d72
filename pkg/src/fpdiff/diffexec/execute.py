from __future__ import annotations

from pathlib import Path
from typing import Sequence

from ..program.ast import Precision
from ..proc import run_command
from .compare import Config, ExecutionOutcome, FpObservation, Status
from .fpbits import MalformedOutput, parse_output
from .inputs import InputVector

DEFAULT_EXEC_TIMEOUT = 10.0


def execute(
    binary: str | Path,
    inputs: InputVector | Sequence[str],
    timeout: float = DEFAULT_EXEC_TIMEOUT,
    precision: Precision = Precision.FP64,
    config: Config = ("", ""),
) -> ExecutionOutcome:
    """Run one binary and parse its single line of hex output."""
    argv = inputs.argv() if isinstance(inputs, InputVector) else list(inputs)
    res = run_command([str(binary), *argv], timeout=timeout)
    if res.timed_out:
        return ExecutionOutcome(Status.TIMEOUT, duration=res.duration, stdout=res.stdout)
    if res.returncode != 0:
        return ExecutionOutcome(Status.CRASH, duration=res.duration, returncode=res.returncode,
                                stdout=res.stdout)
    try:
        bits = parse_output(res.stdout, precision)
    except MalformedOutput:
        return ExecutionOutcome(Status.MALFORMED, duration=res.duration, returncode=0, stdout=res.stdout)
    return ExecutionOutcome(Status.OK, FpObservation.from_bits(bits, config, precision),
                            duration=res.duration, returncode=0, stdout=res.stdout)
