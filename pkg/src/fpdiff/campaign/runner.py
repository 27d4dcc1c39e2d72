"""The generate / compile / differential-test / feed-back loop."""

from __future__ import annotations

import hashlib
import json
import logging
import shutil
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable

from ..compiler import (CompilerSpec, ConfigError, Role, ToolchainMissing, compile_all,
                        cuda_device_present, expand_matrix, probe_toolchain)
from ..diffexec.compare import (RECORD_SCHEMA, ExecutionOutcome, baseline_comparisons,
                                run_differential)
from ..diffexec.execute import execute
from ..diffexec.inputs import sample_inputs
from ..llm.backends import BackendError, LlmBackend, generate
from ..llm.prompts import Prompt, Strategy, build_grammar_prompt, build_mutation_prompt
from ..llm.sanitize import RejectedProgram, accept_response
from ..llm.strategy import select_strategy
from ..program.cuda import TranslateError, split_compute, translate_to_cuda
from ..program.generator import generate_random_program
from ..program.source import (GRAMMAR_RANDOM, LLM_GRAMMAR, LLM_MUTATION, ProgramSource,
                              Provenance)
from .config import CampaignConfig, validate_config
from .report import CampaignReport, build_report
from .state import (AUDIT, MANIFEST, RECORDS, CampaignState, CorruptState, derive_rng,
                    derive_seed, pick_mutation_parent, update_successful_set)

log = logging.getLogger(__name__)

PHASES = ("generation", "compilation", "execution", "analysis")


@dataclass
class Timer:
    totals: dict[str, float]

    def __call__(self, phase: str):
        timer = self

        class _Span:
            def __enter__(self):
                self.start = time.perf_counter()

            def __exit__(self, *exc):
                timer.totals[phase] = timer.totals.get(phase, 0.0) + time.perf_counter() - self.start

        return _Span()


def program_id(attempt: int) -> str:
    return f"prog{attempt:05d}"


def probe_all(compilers: tuple[CompilerSpec, ...]) -> dict[str, str]:
    versions = {}
    for spec in compilers:
        versions[spec.name] = probe_toolchain(spec)
    if any(c.role is Role.DEVICE for c in compilers) and not cuda_device_present():
        raise ToolchainMissing("a device compiler is configured but no CUDA device is present")
    return versions


def _header(cfg: CampaignConfig) -> dict:
    return {
        "schema": RECORD_SCHEMA,
        "type": "campaign",
        "budget": cfg.budget,
        "mode": cfg.mode,
        "precision": cfg.precision.name,
        "compilers": cfg.compiler_names,
        "levels": list(cfg.levels),
        "baseline": cfg.baseline,
        "seed": cfg.seed,
    }


class _Loop:
    def __init__(self, cfg: CampaignConfig, state: CampaignState, backend: LlmBackend | None,
                 timer: Timer, sleep: Callable[[float], None]) -> None:
        self.cfg = cfg
        self.state = state
        self.backend = backend
        self.timer = timer
        self.sleep = sleep
        self.has_device = any(c.role is Role.DEVICE for c in cfg.compilers)

    # -- generation
    def _prompt(self, attempt: int) -> tuple[Prompt, Provenance]:
        cfg, st = self.cfg, self.state
        rng = derive_rng(cfg.seed, "strategy", attempt)
        strategy = Strategy.GRAMMAR_BASED
        if cfg.mode == "hybrid":
            strategy = select_strategy(rng, len(st.successful), cfg.p_mutation)
        if strategy is Strategy.FEEDBACK_MUTATION:
            parent = pick_mutation_parent(st.successful, rng)
            text = (st.programs_dir / f"{parent}.c").read_text()
            prompt = build_mutation_prompt(ProgramSource(text, cfg.precision), cfg.precision, parent)
            return prompt, Provenance(LLM_MUTATION, attempt, prompt.digest[:16], parent)
        prompt = build_grammar_prompt(cfg.precision)
        return prompt, Provenance(LLM_GRAMMAR, attempt, prompt.digest[:16])

    def generate(self, attempt: int) -> ProgramSource:
        cfg = self.cfg
        if cfg.mode == "grammar-random":
            seed = derive_seed(cfg.seed, "program", attempt)
            src = generate_random_program(seed, replace(cfg.generator, precision=cfg.precision))
            return replace(src, provenance=Provenance(GRAMMAR_RANDOM, seed))
        prompt, prov = self._prompt(attempt)
        audit = {"attempt": attempt, "strategy": prompt.strategy.value, "prompt": prov.prompt_id,
                 "parent": prompt.parent_program_id,
                 "successful_set": self.state.successful.members() if prompt.parent_program_id else None}
        stem = self.state.prompts_dir / f"{attempt:05d}"
        stem.with_suffix(".prompt.txt").write_text(prompt.text)
        try:
            raw = generate(self.backend, prompt, cfg.sampling, cfg.llm_timeout,
                           seed=derive_seed(cfg.seed, "llm", attempt), retries=cfg.llm_retries,
                           sleep=self.sleep)
        except BackendError as exc:
            self.state.append(AUDIT, [{**audit, "outcome": f"backend: {exc.kind}"}])
            raise RejectedProgram(f"backend: {exc}") from exc
        stem.with_suffix(".response.txt").write_text(raw)
        try:
            src = accept_response(raw, cfg.precision, prov)
        except RejectedProgram as exc:
            self.state.append(AUDIT, [{**audit, "outcome": f"rejected: {exc.reason}"}])
            raise RejectedProgram(f"invalid: {exc.reason}") from exc
        self.state.append(AUDIT, [{**audit, "outcome": "generated"}])
        return src

    # -- one iteration
    def _execute_all(self, pid, binaries, inputs) -> dict:
        def run(item):
            (cfg_key, binary) = item
            return cfg_key, execute(binary, inputs, self.cfg.exec_timeout, self.cfg.precision, cfg_key)

        workers = self.cfg.workers or None
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return dict(pool.map(run, binaries.items()))

    def iteration(self, attempt: int) -> tuple[list[dict], bool]:
        """Returns the lines to append and whether the program was accepted."""
        cfg, st = self.cfg, self.state
        pid = program_id(attempt)
        with self.timer("generation"):
            try:
                src = self.generate(attempt)
            except RejectedProgram as exc:
                return [{"type": "rejection", "attempt": attempt, "reason": exc.reason}], False
        try:
            signature, _, _ = split_compute(src)
            cuda_src = translate_to_cuda(src) if self.has_device else None
        except TranslateError as exc:
            return [{"type": "rejection", "attempt": attempt,
                     "reason": f"invalid: unsupported compute signature: {exc}"}], False
        c_path = st.programs_dir / f"{pid}.c"
        c_path.write_text(src.c_text)
        cu_path = None
        if cuda_src is not None:
            cu_path = st.programs_dir / f"{pid}.cu"
            cu_path.write_text(cuda_src.c_text)
        with self.timer("compilation"):
            jobs = expand_matrix(pid, cfg.compilers, cfg.levels, c_path, cu_path, st.build_dir)
            outcomes = compile_all(jobs, cfg.compile_timeout, cfg.workers)
        built = {o.job.config: o.binary for o in outcomes if o.ok}
        if not built:
            c_path.unlink()
            if cu_path:
                cu_path.unlink()
            kinds = sorted({o.kind.value for o in outcomes})
            return [{"type": "rejection", "attempt": attempt,
                     "reason": f"compile: no configuration built ({', '.join(kinds)})"}], False
        inputs = sample_inputs(signature, derive_seed(cfg.seed, "inputs", attempt), cfg.precision,
                               cfg.generator.array_length)
        with self.timer("execution"):
            results: dict[tuple[str, str], ExecutionOutcome] = self._execute_all(pid, built, inputs)
        with self.timer("analysis"):
            records, exclusions = run_differential(pid, results, cfg.compiler_names, cfg.levels,
                                                   cfg.precision)
            base_records, base_exclusions = [], []
            if cfg.baseline:
                for name in cfg.compiler_names:
                    r, e = baseline_comparisons(pid, name, results, cfg.levels, cfg.precision)
                    base_records += r
                    base_exclusions += e
        if not cfg.keep_binaries:
            shutil.rmtree(st.build_dir / pid, ignore_errors=True)
        program_line = {
            "type": "program",
            "program": pid,
            "attempt": attempt,
            "provenance": src.provenance.to_json(),
            "sha256": hashlib.sha256(src.c_text.encode()).hexdigest(),
            "inputs": inputs.to_json(),
            "builds": {"ok": len(built), "failed": len(outcomes) - len(built)},
            "compile_failures": sorted(f"{o.job.compiler.name}@{o.job.level}: {o.kind.value}"
                                       for o in outcomes if not o.ok),
        }
        lines = [program_line]
        lines += [r.to_json() for r in records + base_records]
        lines += [e.to_json() for e in exclusions + base_exclusions]
        update_successful_set(st.successful, pid, records)
        return lines, True


def open_state(cfg: CampaignConfig) -> CampaignState:
    root = cfg.campaign_dir
    if (root / MANIFEST).exists():
        state = CampaignState.load(root)
        if state.config_digest != cfg.digest():
            raise ConfigError(f"{root} holds a campaign with a different configuration")
        state.rollback()
        state.verify_successful()
        return state
    if root.exists() and (root / RECORDS).exists():
        raise CorruptState(root / MANIFEST, "manifest missing")
    state = CampaignState.fresh(root, cfg.digest())
    state.append(RECORDS, [_header(cfg)])
    state.commit()
    return state


def run_campaign(cfg: CampaignConfig, backend: LlmBackend | None = None, *,
                 on_iteration: Callable[[CampaignState], None] | None = None,
                 sleep: Callable[[float], None] = time.sleep,
                 probe: bool = True) -> CampaignReport:
    """Run (or resume) a campaign until ``budget`` programs are accepted or
    the attempt cap is reached, then write the report."""
    validate_config(cfg)
    toolchains = probe_all(cfg.compilers) if probe else {}
    if cfg.mode != "grammar-random" and backend is None:
        backend = cfg.backend.build()  # type: ignore[union-attr]
    state = open_state(cfg)
    state.toolchains = toolchains or state.toolchains
    timer = Timer({p: 0.0 for p in PHASES})
    wall = time.perf_counter()
    loop = _Loop(cfg, state, backend, timer, sleep)
    while not state.complete and state.accepted < cfg.budget and state.attempts < cfg.attempt_cap:
        attempt = state.attempts
        lines, accepted = loop.iteration(attempt)
        state.append(RECORDS, lines)
        state.attempts += 1
        if accepted:
            state.accepted += 1
        else:
            state.rejected += 1
            kind = lines[0]["reason"].split(":", 1)[0]
            state.rejections[kind] = state.rejections.get(kind, 0) + 1
            log.info("attempt %d rejected: %s", attempt, lines[0]["reason"])
        state.commit()
        if on_iteration is not None:
            on_iteration(state)
    state.complete = True
    state.commit()
    with timer("analysis"):
        report = build_report(cfg.campaign_dir)
        report.write(state.report_dir)
    timer.totals["total"] = time.perf_counter() - wall
    report.time = dict(timer.totals)
    (cfg.campaign_dir / "timing.json").write_text(json.dumps(report.time, indent=2) + "\n")
    return report
