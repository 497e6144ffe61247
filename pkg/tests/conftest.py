import re

import pytest

from refine_search.core import Task, TestCase
from refine_search.gateway import Gateway, MockBackend, MockScript
from refine_search.sandbox import ExecResult, Sandbox, TestVerdict

WRONG_CODE = "```\ndef solution(x=0):\n    return 0\n```"
RIGHT_CODE = "```\ndef solution(x=0):\n    return 1\n```"


@pytest.fixture(scope="session")
def sandbox():
    with Sandbox(pool_size=4) as sb:
        yield sb


class FakeSandbox:
    """Scores candidates by a ``# score=X`` marker embedded in the code.

    Lets strategy tests control validation outcomes without spawning runner
    subprocesses; speaks the same evaluate() surface as the real sandbox.
    """

    def evaluate(self, code, tests, timeout_ms=0, entry_point=None):
        match = re.search(r"score\s*=\s*([0-9.]+)", code)
        fraction = float(match.group(1)) if match else 0.0
        n_pass = round(fraction * len(tests))
        per_test = tuple(
            TestVerdict(test_id=t.test_id, status="pass" if i < n_pass else "fail")
            for i, t in enumerate(tests)
        )
        return ExecResult(request_id="fake", per_test=per_test)


@pytest.fixture
def fake_sandbox():
    return FakeSandbox()


def make_task(task_id="t1", prompt="return one"):
    return Task(
        task_id=task_id,
        prompt=prompt,
        hidden_tests=[TestCase(f"{task_id}::h1", "assert solution() == 1")],
    )


def make_gateway(responses=None, default="1. improve the handling of edge cases"):
    script = MockScript(responses=dict(responses or {}), default_response=default)
    return Gateway(MockBackend(script))


def scored(fraction):
    """Candidate text whose FakeSandbox validation score is ``fraction``."""
    return f"```\n# score={fraction}\ndef solution():\n    return 1\n```"
