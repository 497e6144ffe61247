"""Client for the exec-runner subprocess: scores candidate code against tests.

Talks newline-delimited JSON over the runner's stdin/stdout. A small pool of
runner subprocesses is kept; each handles one request at a time. A runner
that crashes mid-request yields error statuses (never a silent pass) and is
restarted for the next request.
"""

from __future__ import annotations

import json
import queue
import subprocess
import sys
import threading
import uuid
from dataclasses import dataclass
from typing import Optional, Sequence

from .core import Task, TestCase

DEFAULT_TIMEOUT_MS = 5000
DEFAULT_POOL_SIZE = 2


class SandboxUnavailableError(Exception):
    pass


@dataclass(frozen=True)
class ExecRequest:
    request_id: str
    code: str
    tests: tuple[TestCase, ...]
    timeout_ms: int = DEFAULT_TIMEOUT_MS
    entry_point: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.tests:
            raise ValueError("tests must be non-empty")
        if self.timeout_ms <= 0:
            raise ValueError("timeout_ms must be > 0")

    def to_wire(self) -> dict:
        return {
            "request_id": self.request_id,
            "code": self.code,
            "tests": [t.to_dict() for t in self.tests],
            "timeout_ms": self.timeout_ms,
            "entry_point": self.entry_point,
        }


@dataclass(frozen=True)
class TestVerdict:
    test_id: str
    status: str  # pass | fail | error | timeout
    detail: Optional[str] = None


@dataclass(frozen=True)
class ExecResult:
    request_id: str
    per_test: tuple[TestVerdict, ...]


def default_runner_cmd() -> list[str]:
    return [sys.executable, "-m", "exec_runner"]


class _Runner:
    def __init__(self, cmd: Sequence[str], startup_timeout_s: float):
        self.cmd = list(cmd)
        self.startup_timeout_s = startup_timeout_s
        self.proc: Optional[subprocess.Popen] = None

    def start(self) -> None:
        self.proc = subprocess.Popen(
            self.cmd,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL,
            text=True,
        )
        ready = self._read_line(self.startup_timeout_s)
        if ready is None or not json.loads(ready).get("ready"):
            raise SandboxUnavailableError(f"runner failed handshake: {self.cmd}")

    def _read_line(self, timeout_s: float) -> Optional[str]:
        # Reading happens in a helper thread so a wedged runner cannot hang us.
        result: list[Optional[str]] = [None]

        def read() -> None:
            result[0] = self.proc.stdout.readline()

        thread = threading.Thread(target=read, daemon=True)
        thread.start()
        thread.join(timeout_s)
        if thread.is_alive() or not result[0]:
            return None
        return result[0]

    def alive(self) -> bool:
        return self.proc is not None and self.proc.poll() is None

    def request(self, req: ExecRequest, deadline_s: float) -> Optional[dict]:
        try:
            self.proc.stdin.write(json.dumps(req.to_wire()) + "\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError, ValueError):
            return None
        line = self._read_line(deadline_s)
        if line is None:
            return None
        try:
            return json.loads(line)
        except ValueError:
            return None

    def stop(self) -> None:
        if self.proc is not None:
            try:
                self.proc.kill()
                self.proc.wait(timeout=5)
            except Exception:
                pass
            self.proc = None


class Sandbox:
    """Pool of exec-runner subprocesses with request/response matching."""

    def __init__(
        self,
        runner_cmd: Optional[Sequence[str]] = None,
        pool_size: int = DEFAULT_POOL_SIZE,
        grace_ms: int = 500,
        startup_timeout_s: float = 20.0,
    ):
        self.runner_cmd = list(runner_cmd) if runner_cmd else default_runner_cmd()
        self.grace_ms = grace_ms
        self.startup_timeout_s = startup_timeout_s
        self._idle: queue.Queue[_Runner] = queue.Queue()
        for _ in range(pool_size):
            self._idle.put(_Runner(self.runner_cmd, startup_timeout_s))

    def evaluate(
        self,
        code: str,
        tests: Sequence[TestCase],
        timeout_ms: int = DEFAULT_TIMEOUT_MS,
        entry_point: Optional[str] = None,
    ) -> ExecResult:
        req = ExecRequest(
            request_id=uuid.uuid4().hex,
            code=code,
            tests=tuple(tests),
            timeout_ms=timeout_ms,
            entry_point=entry_point,
        )
        # Per-test timeouts are enforced inside the runner; this deadline only
        # guards against a wedged runner process.
        deadline_s = (timeout_ms + self.grace_ms) * len(tests) / 1000.0 + 10.0
        runner = self._idle.get()
        try:
            if not runner.alive():
                self._restart(runner)
            response = runner.request(req, deadline_s)
            if response is None:
                # Crash or wedge mid-request: report errors, recycle the runner.
                self._restart(runner)
                return ExecResult(
                    request_id=req.request_id,
                    per_test=tuple(
                        TestVerdict(test_id=t.test_id, status="error", detail="runner crashed") for t in req.tests
                    ),
                )
            return self._parse_response(req, response)
        finally:
            self._idle.put(runner)

    def _restart(self, runner: _Runner) -> None:
        runner.stop()
        try:
            runner.start()
        except (SandboxUnavailableError, OSError) as exc:
            raise SandboxUnavailableError(f"sandbox unavailable: {exc}") from exc

    @staticmethod
    def _parse_response(req: ExecRequest, response: dict) -> ExecResult:
        verdicts = {
            v.get("test_id"): TestVerdict(
                test_id=v.get("test_id", ""), status=v.get("status", "error"), detail=v.get("detail")
            )
            for v in response.get("per_test", [])
        }
        per_test = tuple(
            verdicts.get(t.test_id, TestVerdict(test_id=t.test_id, status="error", detail="missing verdict"))
            for t in req.tests
        )
        return ExecResult(request_id=req.request_id, per_test=per_test)

    def close(self) -> None:
        while True:
            try:
                self._idle.get_nowait().stop()
            except queue.Empty:
                break

    def __enter__(self) -> "Sandbox":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def validation_score(result: ExecResult) -> float:
    if not result.per_test:
        raise ValueError("empty result")
    passed = sum(1 for v in result.per_test if v.status == "pass")
    return passed / len(result.per_test)


def hidden_verdict(
    code: str, task: Task, sandbox: Sandbox, timeout_ms: int = DEFAULT_TIMEOUT_MS
) -> bool:
    """True iff every hidden test passes."""
    if not task.hidden_tests:
        raise ValueError("task has no hidden tests")
    result = sandbox.evaluate(code, task.hidden_tests, timeout_ms, task.entry_point)
    return all(v.status == "pass" for v in result.per_test)
