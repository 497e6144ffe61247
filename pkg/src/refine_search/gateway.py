"""Uniform interface to language-model backends.

Covers the six generation roles (initial code, validation tests, directions,
refinement, shared-information update, scouting insight) over either an
OpenAI-compatible HTTP endpoint or a deterministic scripted mock. Prompt
templates are plain-text files with named placeholders and may be swapped
via a template directory.
"""

from __future__ import annotations

import json
import os
import re
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Optional

import requests

from .core import SharedInfoEntry, SharedInformation, Task, TestCase, TestKind, TextualDirection

API_KEY_ENV = "REFINE_SEARCH_API_KEY"
DEFAULT_VALIDATION_TEST_COUNT = 6
DEFAULT_TEMPERATURE = 0.7

CODE_GENERATION_ROLES = frozenset({"init_code", "refine_code"})


class Role(str, Enum):
    INIT_CODE = "init_code"
    GEN_TESTS = "gen_tests"
    GEN_DIRECTIONS = "gen_directions"
    REFINE_CODE = "refine_code"
    UPDATE_SHARED_INFO = "update_shared_info"
    SCOUT_INSIGHT = "scout_insight"


@dataclass(frozen=True)
class SamplingParams:
    temperature: float = DEFAULT_TEMPERATURE
    max_tokens: int = 2048
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be > 0")


@dataclass(frozen=True)
class GenerationRequest:
    role: Role
    messages: tuple[tuple[str, str], ...]  # (speaker, text); speaker in {system, user}
    params: SamplingParams = SamplingParams()
    task_id: str = ""

    def __post_init__(self) -> None:
        if not self.messages:
            raise ValueError("messages must be non-empty")
        if self.messages[0][0] != "system":
            raise ValueError("first message must have the system role")


class GatewayError(Exception):
    pass


class TransportError(GatewayError):
    """Transient backend failure; retried up to the configured bound."""


class UnscriptedCallError(GatewayError):
    pass


class HttpBackend:
    """OpenAI-compatible chat-completions client."""

    def __init__(self, base_url: str, model: str, api_key: Optional[str] = None, timeout_s: float = 60.0):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV, "")
        self.timeout_s = timeout_s

    def complete(self, request: GenerationRequest) -> str:
        body = {
            "model": self.model,
            "messages": [{"role": speaker, "content": text} for speaker, text in request.messages],
            "temperature": request.params.temperature,
            "max_tokens": request.params.max_tokens,
        }
        if request.params.seed is not None:
            body["seed"] = request.params.seed
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            resp = requests.post(
                f"{self.base_url}/chat/completions", json=body, headers=headers, timeout=self.timeout_s
            )
        except requests.RequestException as exc:
            raise TransportError(str(exc)) from exc
        if resp.status_code >= 500:
            raise TransportError(f"server error {resp.status_code}")
        if resp.status_code != 200:
            raise GatewayError(f"backend returned {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, ValueError) as exc:
            raise GatewayError(f"malformed completion response: {exc}") from exc


@dataclass
class MockScript:
    """Deterministic response table keyed by "task_id/role/call_index"."""

    responses: dict[str, str] = field(default_factory=dict)
    default_response: Optional[str] = None

    @classmethod
    def load(cls, path: str | Path) -> "MockScript":
        data = json.loads(Path(path).read_text())
        return cls(responses=dict(data.get("responses", {})), default_response=data.get("default_response"))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps({"responses": self.responses, "default_response": self.default_response}, indent=2)
        )

    def lookup(self, task_id: str, role: Role, call_index: int) -> str:
        key = f"{task_id}/{role.value}/{call_index}"
        if key in self.responses:
            return self.responses[key]
        if self.default_response is not None:
            return self.default_response
        raise UnscriptedCallError(f"unscripted call: {key}")


class MockBackend:
    """Scripted backend; call_index is tracked per (task_id, role)."""

    def __init__(self, script: MockScript):
        self.script = script
        self._counters: dict[tuple[str, str], int] = {}
        self._lock = threading.Lock()

    def complete(self, request: GenerationRequest) -> str:
        key = (request.task_id, request.role.value)
        with self._lock:
            self._counters[key] = self._counters.get(key, 0) + 1
            index = self._counters[key]
        return self.script.lookup(request.task_id, request.role, index)


_FENCE_RE = re.compile(r"```[^\n]*\n(.*?)```", re.DOTALL)
_NUMBERED_RE = re.compile(r"^\s*\d+[.)]\s*(.+)$")
_BULLET_RE = re.compile(r"^\s*[-*]\s+(.+)$")


def extract_code(response: str) -> str:
    """Contents of the first fenced code block, else the whole trimmed text."""
    match = _FENCE_RE.search(response)
    if match:
        return match.group(1).strip("\n")
    return response.strip()


def parse_directions(response: str, limit: int) -> list[str]:
    """Parse direction texts: numbered list, then bulleted list, then one per line."""
    lines = [line for line in response.splitlines() if line.strip()]
    for pattern in (_NUMBERED_RE, _BULLET_RE):
        items = [m.group(1).strip() for m in (pattern.match(line) for line in lines) if m]
        if items:
            return items[:limit]
    return [line.strip() for line in lines][:limit]


class Gateway:
    """Role-aware front end over a backend, with templates and retries.

    Tracks per-task call counts by role so that strategy budget accounting
    (code generations only) can be audited externally.
    """

    def __init__(
        self,
        backend,
        template_dir: Optional[str | Path] = None,
        max_retries: int = 2,
        retry_delay_s: float = 0.0,
        params: SamplingParams = SamplingParams(),
    ):
        self.backend = backend
        self.template_dir = Path(template_dir) if template_dir else None
        self.max_retries = max_retries
        self.retry_delay_s = retry_delay_s
        self.params = params
        self._call_counts: dict[tuple[str, str], int] = {}
        self._lock = threading.Lock()

    # -- plumbing ---------------------------------------------------------

    def _template(self, role: Role) -> str:
        if self.template_dir is not None:
            path = self.template_dir / f"{role.value}.txt"
            if path.exists():
                return path.read_text()
        return resources.files("refine_search.prompts").joinpath(f"{role.value}.txt").read_text()

    def _render(self, role: Role, **fields: object) -> str:

        class _Defaulting(dict):
            def __missing__(self, key):
                return ""

        return self._template(role).format_map(_Defaulting(**{k: str(v) for k, v in fields.items()}))

    def complete(self, request: GenerationRequest) -> str:
        with self._lock:
            key = (request.task_id, request.role.value)
            self._call_counts[key] = self._call_counts.get(key, 0) + 1
        last_error: Optional[Exception] = None
        for attempt in range(self.max_retries + 1):
            try:
                return self.backend.complete(request)
            except TransportError as exc:
                last_error = exc
                if attempt < self.max_retries and self.retry_delay_s:
                    time.sleep(self.retry_delay_s)
        raise GatewayError(f"transport failed after {self.max_retries + 1} attempts: {last_error}")

    def _ask(self, task: Task, role: Role, user_text: str) -> str:
        request = GenerationRequest(
            role=role,
            messages=(("system", "You are a careful coding assistant."), ("user", user_text)),
            params=self.params,
            task_id=task.task_id,
        )
        return self.complete(request)

    def call_count(self, task_id: str, role: Role) -> int:
        with self._lock:
            return self._call_counts.get((task_id, role.value), 0)

    def code_generation_calls(self, task_id: str) -> int:
        """Calls that count against the budget k: initial codes and refinements."""
        return self.call_count(task_id, Role.INIT_CODE) + self.call_count(task_id, Role.REFINE_CODE)

    # -- generation roles -------------------------------------------------

    def generate_initial_codes(self, task: Task, n: int, info: SharedInformation) -> list[str]:
        if n < 1:
            raise ValueError("n must be >= 1")
        prompt = self._render(Role.INIT_CODE, prompt=task.prompt, shared_info=info.rendered)
        return [extract_code(self._ask(task, Role.INIT_CODE, prompt)) for _ in range(n)]

    def generate_directions(
        self,
        task: Task,
        code: str,
        info: SharedInformation,
        m: int,
        feedback: str = "",
    ) -> list[TextualDirection]:
        if m < 1:
            raise ValueError("m must be >= 1")
        prompt = self._render(
            Role.GEN_DIRECTIONS,
            prompt=task.prompt,
            code=code,
            shared_info=info.rendered,
            feedback=feedback,
            count=m,
        )
        response = self._ask(task, Role.GEN_DIRECTIONS, prompt)
        texts = parse_directions(response, m)
        if not texts:
            # One retry, then fall back to the raw response as a single direction.
            response = self._ask(task, Role.GEN_DIRECTIONS, prompt)
            texts = parse_directions(response, m)
            if not texts:
                if response.strip():
                    texts = [response.strip()]
                else:
                    raise GatewayError("no directions parsed")
        return [TextualDirection(text=t) for t in texts]

    def refine_code(self, task: Task, code: str, direction: TextualDirection) -> str:
        if not direction.text:
            raise ValueError("direction text must be non-empty")
        prompt = self._render(Role.REFINE_CODE, prompt=task.prompt, code=code, direction=direction.text)
        return extract_code(self._ask(task, Role.REFINE_CODE, prompt))

    def update_shared_info(
        self,
        task: Task,
        code: str,
        info: SharedInformation,
        direction: TextualDirection,
        refined_code: str,
        score_before: float,
        score_after: float,
        role: Role = Role.UPDATE_SHARED_INFO,
    ) -> SharedInformation:
        if not (0.0 <= score_before <= 1.0 and 0.0 <= score_after <= 1.0):
            raise ValueError("scores must lie in [0, 1]")
        prompt = self._render(
            role,
            prompt=task.prompt,
            code=code,
            direction=direction.text,
            score_before=score_before,
            score_after=score_after,
        )
        try:
            summary = self._ask(task, role, prompt).strip()
        except GatewayError:
            delta = score_after - score_before
            outcome = "improved" if delta > 0 else ("regressed" if delta < 0 else "did not change")
            summary = f"the validation score {outcome} ({score_before:.3f} -> {score_after:.3f})"
        entry = SharedInfoEntry(
            direction_text=direction.text,
            outcome_summary=summary,
            score_delta=score_after - score_before,
        )
        return info.appended(entry)

    def generate_validation_tests(self, task: Task, count: int = DEFAULT_VALIDATION_TEST_COUNT) -> list[TestCase]:
        if count < 1:
            raise ValueError("count must be >= 1")
        prompt = self._render(Role.GEN_TESTS, prompt=task.prompt, count=count)
        response = self._ask(task, Role.GEN_TESTS, prompt)
        body = extract_code(response)
        hidden_payloads = {t.payload for t in task.hidden_tests}
        seen: set[str] = set()
        tests: list[TestCase] = []
        for line in body.splitlines():
            line = line.strip()
            if not line.startswith("assert"):
                continue
            # Never admit a model "generated" copy of a hidden test.
            if line in seen or line in hidden_payloads:
                continue
            seen.add(line)
            tests.append(TestCase(test_id=f"{task.task_id}::v{len(tests) + 1}", payload=line, kind=TestKind.ASSERTION))
            if len(tests) == count:
                break
        if not tests:
            raise GatewayError("no tests generated")
        return tests
