"""Campaign configuration: schema, loading and validation."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping

import yaml

from ..compiler import LEVELS, CompilerSpec, ConfigError, Family, Role, guess_family
from ..diffexec.compare import BASELINE_LEVEL
from ..llm.backends import HttpChatBackend, LlmBackend, MockBackend, SamplingParams
from ..program.ast import Precision
from ..program.generator import GenConfig

CONFIG_SCHEMA = 1
MODES = ("grammar-random", "llm", "hybrid")
LLM_MODES = ("llm", "hybrid")


@dataclass(frozen=True)
class BackendConfig:
    kind: str = "mock"  # mock | http
    seed: int = 0
    trigger_rate: float = 0.0
    endpoint: str = ""
    model: str = ""
    api_key_env: str = "OPENAI_API_KEY"

    def build(self) -> LlmBackend:
        if self.kind == "mock":
            return MockBackend(self.seed, trigger_rate=self.trigger_rate,
                               **({"model": self.model} if self.model else {}))
        return HttpChatBackend(self.endpoint, self.model, self.api_key_env)


@dataclass(frozen=True)
class CampaignConfig:
    budget: int
    compilers: tuple[CompilerSpec, ...]
    campaign_dir: Path
    precision: Precision = Precision.FP64
    levels: tuple[str, ...] = LEVELS
    mode: str = "grammar-random"
    p_mutation: float = 0.5
    sampling: SamplingParams = SamplingParams()
    seed: int = 0
    compile_timeout: float = 60.0
    exec_timeout: float = 10.0
    llm_timeout: float = 60.0
    llm_retries: int = 3
    backend: BackendConfig | None = None
    baseline: bool = True
    generator: GenConfig = GenConfig()
    attempt_factor: int = 3
    workers: int | None = None
    keep_binaries: bool = False

    @property
    def attempt_cap(self) -> int:
        return self.attempt_factor * self.budget

    @property
    def compiler_names(self) -> list[str]:
        return [c.name for c in self.compilers]

    def identity(self) -> dict[str, Any]:
        """Fields that determine campaign results (paths and worker counts excluded)."""
        return {
            "schema": CONFIG_SCHEMA,
            "budget": self.budget,
            "precision": self.precision.name,
            "compilers": [{"name": c.name, "path": c.path, "family": c.family.value,
                           "role": c.role.value} for c in self.compilers],
            "levels": list(self.levels),
            "mode": self.mode,
            "p_mutation": self.p_mutation,
            "sampling": asdict(self.sampling),
            "seed": self.seed,
            "backend": asdict(self.backend) if self.backend else None,
            "baseline": self.baseline,
            "generator": {k: v for k, v in asdict(replace(self.generator, precision=self.precision)).items()
                          if k != "precision"},
            "attempt_factor": self.attempt_factor,
            "exec_timeout": self.exec_timeout,
        }

    def digest(self) -> str:
        blob = json.dumps(self.identity(), sort_keys=True, default=list).encode()
        return hashlib.sha256(blob).hexdigest()


def config_problems(cfg: CampaignConfig) -> list[str]:
    """Every violated invariant, as a readable message."""
    out = []
    if cfg.budget < 1:
        out.append("budget must be a positive integer")
    if len(cfg.compilers) < 2:
        out.append("at least two compilers are required for differential testing")
    names = cfg.compiler_names
    if len(set(names)) != len(names):
        out.append("compiler names must be unique")
    unknown = [lv for lv in cfg.levels if lv not in LEVELS]
    if unknown:
        out.append(f"unknown optimization levels: {', '.join(unknown)} (allowed: {', '.join(LEVELS)})")
    if len(set(cfg.levels)) != len(cfg.levels):
        out.append("levels must not repeat")
    if not cfg.levels:
        out.append("at least one optimization level is required")
    if cfg.baseline and BASELINE_LEVEL not in cfg.levels:
        out.append(f"the baseline table requires level {BASELINE_LEVEL}")
    if cfg.mode not in MODES:
        out.append(f"unknown generator mode {cfg.mode!r} (allowed: {', '.join(MODES)})")
    if cfg.mode in LLM_MODES:
        if cfg.backend is None:
            out.append(f"mode {cfg.mode} requires a backend configuration")
        elif cfg.backend.kind not in ("mock", "http"):
            out.append(f"unknown backend kind {cfg.backend.kind!r}")
        elif cfg.backend.kind == "http" and not (cfg.backend.endpoint and cfg.backend.model):
            out.append("http backend requires endpoint and model")
    if cfg.backend is not None and not 0.0 <= cfg.backend.trigger_rate <= 1.0:
        out.append("backend trigger_rate must be in [0, 1]")
    if not 0.0 <= cfg.p_mutation <= 1.0:
        out.append("p_mutation must be in [0, 1]")
    for name in ("compile_timeout", "exec_timeout", "llm_timeout"):
        if getattr(cfg, name) <= 0:
            out.append(f"{name} must be positive")
    if cfg.attempt_factor < 1:
        out.append("attempt_factor must be at least 1")
    if cfg.llm_retries < 1:
        out.append("llm_retries must be at least 1")
    if cfg.workers is not None and cfg.workers < 1:
        out.append("workers must be positive")
    out.extend(f"generator: {p}" for p in cfg.generator.validate())
    return out


def validate_config(cfg: CampaignConfig) -> CampaignConfig:
    problems = config_problems(cfg)
    if problems:
        raise ConfigError("; ".join(problems))
    return cfg


def _family(name: str) -> Family:
    # accept both "clang" and the enum value "clang-like"
    for fam in Family:
        if name in (fam.value, fam.value.removesuffix("-like"), fam.name.lower()):
            return fam
    raise ConfigError(f"unknown compiler family {name!r} (allowed: gcc, clang, nvcc)")


def _compiler(entry: Mapping[str, Any] | str) -> CompilerSpec:
    if isinstance(entry, str):
        entry = {"path": entry}
    if "path" not in entry:
        raise ConfigError(f"compiler entry without path: {dict(entry)}")
    path = str(entry["path"])
    family = _family(str(entry["family"])) if "family" in entry else guess_family(path)
    role = Role(entry.get("role", "device" if family is Family.NVCC else "host"))
    return CompilerSpec(name=str(entry.get("name", Path(path).name)), path=path, family=family, role=role)


_SIMPLE = {"budget", "mode", "p_mutation", "seed", "compile_timeout", "exec_timeout", "llm_timeout",
           "llm_retries", "baseline", "attempt_factor", "workers", "keep_binaries"}


def config_from_dict(data: Mapping[str, Any], base_dir: Path | None = None) -> CampaignConfig:
    data = dict(data)
    schema = data.pop("schema", CONFIG_SCHEMA)
    if schema != CONFIG_SCHEMA:
        raise ConfigError(f"unsupported config schema {schema} (expected {CONFIG_SCHEMA})")
    known = _SIMPLE | {"compilers", "campaign_dir", "precision", "levels", "sampling", "backend", "generator"}
    extra = set(data) - known
    if extra:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(extra))}")
    for key in ("budget", "compilers", "campaign_dir"):
        if key not in data:
            raise ConfigError(f"missing required key: {key}")
    try:
        campaign_dir = Path(data["campaign_dir"])
        if base_dir is not None and not campaign_dir.is_absolute():
            campaign_dir = base_dir / campaign_dir
        precision = Precision.parse(data.get("precision", "FP64"))
        kwargs: dict[str, Any] = {k: data[k] for k in _SIMPLE if k in data}
        gen = data.get("generator") or {}
        gen_fields = {f.name for f in fields(GenConfig)} - {"precision"}
        if set(gen) - gen_fields:
            raise ConfigError(f"unknown generator keys: {', '.join(sorted(set(gen) - gen_fields))}")
        if "math_funcs" in gen:
            gen = {**gen, "math_funcs": tuple(gen["math_funcs"])}
        return CampaignConfig(
            compilers=tuple(_compiler(c) for c in data["compilers"]),
            campaign_dir=campaign_dir,
            precision=precision,
            levels=tuple(data.get("levels", LEVELS)),
            sampling=SamplingParams(**(data.get("sampling") or {})),
            backend=BackendConfig(**data["backend"]) if data.get("backend") else None,
            generator=GenConfig(precision=precision, **gen),
            **kwargs,
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid config: {exc}") from exc


def load_config(path: str | Path, overrides: Mapping[str, Any] | None = None) -> CampaignConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping")
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return config_from_dict(data, base_dir=path.parent)
