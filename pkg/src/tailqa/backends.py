"""Text-completion backends for question generation and answering.

All backends expose ``generate(prompt) -> completion``. The mock backends are
pure and deterministic so the whole pipeline can run offline and reproduce
byte-identical outputs; the HTTP backend talks to any completion endpoint
with configurable request/response field names.
"""

from __future__ import annotations

import os
import time
from typing import Mapping

import requests

from .errors import BackendError, ConfigError


class CompletionBackend:
    """Base contract: named backend with bounded in-flight budget."""

    name = "base"
    max_in_flight = 1
    timeout = 30.0

    def generate(self, prompt: str) -> str:
        raise NotImplementedError


def _final_slot(prompt: str) -> str:
    """Last non-empty prompt line, with any trailing '=>' marker removed."""
    lines = [ln for ln in prompt.splitlines() if ln.strip()]
    if not lines:
        return ""
    slot = lines[-1].strip()
    if slot.endswith("=>"):
        slot = slot[:-2].strip()
    return slot


class MockQuestionBackend(CompletionBackend):
    """Deterministic offline question generator.

    Reads the target slot ("subject | property [| object] =>") and emits
    "what is the <property> of <subject>?". Crude but reproducible, which is
    what pipeline and evaluator tests need.
    """

    name = "mock"

    def generate(self, prompt: str) -> str:
        slot = _final_slot(prompt)
        parts = [p.strip() for p in slot.split(" | ")]
        if len(parts) < 2 or not parts[0] or not parts[1]:
            raise BackendError(f"mock backend cannot parse prompt slot {slot!r}")
        subject, prop = parts[0], parts[1]
        return f"what is the {prop} of {subject}?"


class HTTPCompletionBackend(CompletionBackend):
    """Generic HTTP text-completion client.

    The request body is {"model": model, <prompt_field>: prompt, **params}
    and the completion is extracted from the response JSON by walking
    ``completion_path`` (dot-separated keys / list indexes). Credentials come
    from the environment variable named by ``key_env``, never from config
    values.
    """

    def __init__(self, base_url: str, model: str = "", *, name: str = "http",
                 prompt_field: str = "prompt",
                 completion_path: str = "choices.0.text",
                 params: Mapping[str, object] | None = None,
                 key_env: str = "", timeout: float = 30.0, max_in_flight: int = 4):
        if not base_url:
            raise ConfigError("http backend requires a base_url")
        self.name = name
        self.base_url = base_url
        self.model = model
        self.prompt_field = prompt_field
        self.completion_path = completion_path.split(".")
        self.params = dict(params or {})
        self.key_env = key_env
        self.timeout = timeout
        self.max_in_flight = max_in_flight

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.key_env:
            key = os.environ.get(self.key_env, "")
            if not key:
                raise ConfigError(f"backend credential env var {self.key_env} is not set")
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def generate(self, prompt: str) -> str:
        body: dict[str, object] = dict(self.params)
        if self.model:
            body["model"] = self.model
        body[self.prompt_field] = prompt
        try:
            resp = requests.post(self.base_url, json=body,
                                 headers=self._headers(), timeout=self.timeout)
            resp.raise_for_status()
            payload = resp.json()
        except requests.RequestException as e:
            raise BackendError(f"{self.name}: request failed: {e}") from e
        return self._extract(payload)

    def _extract(self, payload: object) -> str:
        node = payload
        for step in self.completion_path:
            try:
                node = node[int(step)] if step.lstrip("-").isdigit() else node[step]  # type: ignore[index]
            except (KeyError, IndexError, TypeError) as e:
                raise BackendError(
                    f"{self.name}: response missing field at {'.'.join(self.completion_path)}") from e
        if not isinstance(node, str):
            raise BackendError(f"{self.name}: completion field is not text")
        return node


def generate_with_retries(backend: CompletionBackend, prompt: str,
                          attempts: int = 3, backoff: float = 0.5) -> str:
    """Call the backend, retrying transient failures up to ``attempts`` times."""
    last: BackendError | None = None
    for i in range(max(1, attempts)):
        try:
            return backend.generate(prompt)
        except BackendError as e:
            last = e
            if i + 1 < attempts:
                time.sleep(backoff * (i + 1))
    assert last is not None
    raise last
