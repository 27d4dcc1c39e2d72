"""Text-generation backends.

``MockBackend`` is offline and deterministic; ``HttpChatBackend`` speaks a
generic chat-completions protocol over HTTP.
"""

from __future__ import annotations

import abc
import hashlib
import os
import random
import time
from dataclasses import dataclass, replace
from typing import Callable

import httpx

from ..program.ast import Precision
from ..program.generator import GenConfig, generate_random_program
from ..program.lexer import LexError, tokenize_c
from ..program.structure import SignatureError, compute_span
from .prompts import Prompt, Strategy, embedded_program

DEFAULT_RETRIES = 3
DEFAULT_BACKOFF = 2.0
DEFAULT_TIMEOUT = 60.0


@dataclass(frozen=True)
class SamplingParams:
    temperature: float = 1.2
    frequency_penalty: float = 0.5
    presence_penalty: float = 0.6
    max_tokens: int = 2048

    def __post_init__(self) -> None:
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")


class BackendError(RuntimeError):
    KINDS = ("timeout", "transport", "quota", "server", "bad_response", "config")

    def __init__(self, kind: str, message: str = "") -> None:
        if kind not in self.KINDS:
            raise ValueError(f"unknown backend error kind: {kind}")
        super().__init__(f"{kind}: {message}" if message else kind)
        self.kind = kind


class LlmBackend(abc.ABC):
    name: str = "abstract"
    model: str = ""

    @property
    def identity(self) -> str:
        return f"{self.name}/{self.model}" if self.model else self.name

    @abc.abstractmethod
    def complete(self, prompt: Prompt, params: SamplingParams, timeout: float,
                 seed: int | None = None) -> str:
        """One request; raise BackendError on failure."""


def generate(backend: LlmBackend, prompt: Prompt, params: SamplingParams | None = None,
             timeout: float = DEFAULT_TIMEOUT, *, seed: int | None = None,
             retries: int = DEFAULT_RETRIES, backoff: float = DEFAULT_BACKOFF,
             sleep: Callable[[float], None] = time.sleep) -> str:
    """Call the backend, retrying failures with exponential backoff."""
    if timeout <= 0:
        raise ValueError("timeout must be positive")
    params = params or SamplingParams()
    last: BackendError | None = None
    for attempt in range(max(1, retries)):
        if attempt:
            sleep(backoff * 2 ** (attempt - 1))
        try:
            return backend.complete(prompt, params, timeout, seed)
        except BackendError as exc:
            if exc.kind == "config":
                raise
            last = exc
    assert last is not None
    raise last


# Reassociation-sensitive reduction: exact reordering under -ffast-math
# changes the rounding of the running sum.
REDUCTION_TRIGGER = """\
#include <stdio.h>
#include <stdlib.h>
#include <math.h>

void compute(double comp, double* var_1, double var_2, double* result) {
  for (int i = 0; i < 10; ++i) {
    comp += var_1[i] * var_2 + (var_1[i] / 3.0);
  }
  for (int j = 0; j < 10; ++j) {
    comp -= var_1[j] * 1.0000001;
  }
  *result = comp;
}

int main(int argc, char** argv) {
  int a = 1;
  double comp = atof(argv[a++]);
  int n_1 = atoi(argv[a++]);
  double* var_1 = (double*) malloc(sizeof(double) * n_1);
  for (int k = 0; k < n_1; ++k) { var_1[k] = atof(argv[a++]); }
  double var_2 = atof(argv[a++]);
  double result = 0.0;
  compute(comp, var_1, var_2, &result);
  union { double d; unsigned long long u; } out;
  out.d = result;
  printf("%016llx\\n", out.u);
  free(var_1);
  return 0;
}
"""

_WRAPPERS = (
    "{code}",
    "```c\n{code}```\n",
    "Sure! Here is the program:\n\n```c\n{code}```\n\nIt applies a series of floating-point updates.",
    "Here is the code:\n{code}",
)


def _perturb_literals(text: str, rng: random.Random, rate: float = 0.5) -> str:
    """Rescale some floating-point literals inside compute."""
    try:
        tokens = tokenize_c(text)
        span = compute_span(tokens)
    except (LexError, SignatureError):
        return text
    edits = [t for t in tokens[span.lbrace:span.rbrace]
             if t.kind == "literal-fp" and rng.random() < rate]
    lines = text.split("\n")
    for tok in reversed(edits):
        suffix = "f" if tok.lexeme[-1] in "fF" else ""
        value = float(tok.lexeme.rstrip("fFlL")) * rng.choice((0.5, 0.9, 1.1, 2.0, 10.0, 1e-3))
        row = lines[tok.line - 1]
        col = tok.column - 1
        lines[tok.line - 1] = row[:col] + f"{value:.4E}{suffix}" + row[col + len(tok.lexeme):]
    return "\n".join(lines)


class MockBackend(LlmBackend):
    """Offline stand-in: output depends only on (prompt hash, seeds)."""

    name = "mock"

    def __init__(self, seed: int = 0, *, model: str = "mock-1",
                 trigger_rate: float = 0.0, trigger_source: str = REDUCTION_TRIGGER,
                 gen_config: GenConfig | None = None, wrap: bool = True) -> None:
        if not 0.0 <= trigger_rate <= 1.0:
            raise ValueError("trigger_rate must be in [0, 1]")
        self.seed = seed
        self.model = model
        self.trigger_rate = trigger_rate
        self.trigger_source = trigger_source
        self.gen_config = gen_config or GenConfig()
        self.wrap = wrap
        self.calls = 0

    def _rng(self, prompt: Prompt, seed: int | None) -> random.Random:
        key = f"{self.seed}|{seed}|{prompt.digest}".encode()
        return random.Random(int.from_bytes(hashlib.sha256(key).digest()[:8], "big"))

    def complete(self, prompt: Prompt, params: SamplingParams, timeout: float,
                 seed: int | None = None) -> str:
        self.calls += 1
        rng = self._rng(prompt, seed)
        code = None
        if prompt.strategy is Strategy.FEEDBACK_MUTATION:
            parent = embedded_program(prompt.text)
            if parent is not None and rng.random() < 0.7:
                code = _perturb_literals(parent, rng)
        if code is None and prompt.precision is Precision.FP64 and rng.random() < self.trigger_rate:
            code = self.trigger_source
        if code is None:
            cfg = replace(self.gen_config, precision=prompt.precision)
            code = generate_random_program(rng.getrandbits(32), cfg).c_text
        if not self.wrap:
            return code
        return rng.choice(_WRAPPERS).format(code=code)


class HttpChatBackend(LlmBackend):
    """Chat-completions over HTTP (OpenAI-compatible request and response shape)."""

    name = "http"

    def __init__(self, endpoint: str, model: str, api_key_env: str = "OPENAI_API_KEY",
                 system_prompt: str = "You are a C programmer who writes numerical test programs.",
                 transport: httpx.BaseTransport | None = None) -> None:
        self.endpoint = endpoint
        self.model = model
        self.api_key_env = api_key_env
        self.system_prompt = system_prompt
        self.transport = transport

    def request_body(self, prompt: Prompt, params: SamplingParams, seed: int | None) -> dict:
        body = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": self.system_prompt},
                {"role": "user", "content": prompt.text},
            ],
            "temperature": params.temperature,
            "frequency_penalty": params.frequency_penalty,
            "presence_penalty": params.presence_penalty,
            "max_tokens": params.max_tokens,
        }
        if seed is not None:
            body["seed"] = seed
        return body

    def complete(self, prompt: Prompt, params: SamplingParams, timeout: float,
                 seed: int | None = None) -> str:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.api_key_env) if self.api_key_env else None
        if key:
            headers["Authorization"] = f"Bearer {key}"
        try:
            with httpx.Client(transport=self.transport, timeout=timeout) as client:
                resp = client.post(self.endpoint, json=self.request_body(prompt, params, seed),
                                   headers=headers)
        except httpx.TimeoutException as exc:
            raise BackendError("timeout", str(exc)) from exc
        except httpx.HTTPError as exc:
            raise BackendError("transport", str(exc)) from exc
        if resp.status_code == 429:
            raise BackendError("quota", resp.text[:200])
        if resp.status_code >= 500:
            raise BackendError("server", f"HTTP {resp.status_code}")
        if resp.status_code >= 400:
            raise BackendError("transport", f"HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            text = resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BackendError("bad_response", f"unexpected body: {exc}") from exc
        if not isinstance(text, str) or not text:
            raise BackendError("bad_response", "empty completion")
        return text
