"""Domain types shared by all modules: tasks, codes, directions, traces.

Everything here is a plain value object. Traces are built once by a strategy
run and treated as immutable afterwards; the JSON trace format mirrors the
dataclasses field-for-field.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Optional

TRACE_SUFFIX = ".trace.json"


class TestKind(str, Enum):
    ASSERTION = "assertion"
    IO_PAIR = "io_pair"


class StrategyKind(str, Enum):
    BON = "bon"
    LINEAR = "linear"
    TREE = "tree"
    SFS = "sfs"
    IRTD = "irtd"


@dataclass(frozen=True)
class TestCase:
    test_id: str
    payload: str
    kind: TestKind = TestKind.ASSERTION

    def to_dict(self) -> dict:
        return {"test_id": self.test_id, "payload": self.payload, "kind": self.kind.value}

    @classmethod
    def from_dict(cls, d: dict) -> "TestCase":
        return cls(test_id=d["test_id"], payload=d["payload"], kind=TestKind(d.get("kind", "assertion")))


@dataclass
class Task:
    """A code-generation problem: prompt, hidden tests, generated validation tests."""

    task_id: str
    prompt: str
    hidden_tests: list[TestCase] = field(default_factory=list)
    validation_tests: list[TestCase] = field(default_factory=list)
    entry_point: Optional[str] = None

    def __post_init__(self) -> None:
        for tests in (self.hidden_tests, self.validation_tests):
            ids = [t.test_id for t in tests]
            if len(ids) != len(set(ids)):
                raise ValueError(f"duplicate test_id in task {self.task_id!r}")
        hidden_payloads = {t.payload for t in self.hidden_tests}
        for t in self.validation_tests:
            if t.payload in hidden_payloads:
                raise ValueError(
                    f"validation test {t.test_id!r} duplicates a hidden test in task {self.task_id!r}"
                )


@dataclass
class TextualDirection:
    """A natural-language refinement instruction, annotated after use."""

    text: str
    feedback: Optional[str] = None
    used: bool = False

    def __post_init__(self) -> None:
        if self.feedback is not None and not self.used:
            raise ValueError("feedback requires used=True")

    def to_dict(self) -> dict:
        return {"text": self.text, "feedback": self.feedback, "used": self.used}

    @classmethod
    def from_dict(cls, d: dict) -> "TextualDirection":
        return cls(text=d["text"], feedback=d.get("feedback"), used=d.get("used", False))


@dataclass(frozen=True)
class SharedInfoEntry:
    direction_text: str
    outcome_summary: str
    score_delta: float


@dataclass(frozen=True)
class SharedInformation:
    """Append-only record of tried directions and their outcomes.

    ``rendered`` is the prompt-injectable summary; it mentions every entry's
    direction text. Updates return a new object, the original is untouched.
    """

    entries: tuple[SharedInfoEntry, ...] = ()
    rendered: str = ""

    @classmethod
    def empty(cls) -> "SharedInformation":
        return cls()

    def appended(self, entry: SharedInfoEntry) -> "SharedInformation":
        entries = self.entries + (entry,)
        lines = ["Previously tried directions:"]
        for e in entries:
            sign = "+" if e.score_delta >= 0 else ""
            lines.append(f"- {e.direction_text} (score change {sign}{e.score_delta:.3f}): {e.outcome_summary}")
        return SharedInformation(entries=entries, rendered="\n".join(lines))


@dataclass
class CandidateNode:
    """One generated code with its lineage in the search trace.

    Initial codes have depth 1; a refinement's depth is its parent's plus one.
    """

    node_id: int
    source: str
    parent: Optional[int] = None
    direction_used: Optional[TextualDirection] = None
    depth: int = 1
    validation_score: float = 0.0
    passed_all_validation: bool = False
    hidden_result: Optional[bool] = None

    def __post_init__(self) -> None:
        if (self.depth == 1) != (self.parent is None):
            raise ValueError("depth 1 iff parent absent")
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if not 0.0 <= self.validation_score <= 1.0:
            raise ValueError("validation_score out of [0, 1]")

    def to_dict(self) -> dict:
        return {
            "node_id": self.node_id,
            "source": self.source,
            "parent": self.parent,
            "direction_used": self.direction_used.to_dict() if self.direction_used else None,
            "depth": self.depth,
            "validation_score": self.validation_score,
            "passed_all_validation": self.passed_all_validation,
            "hidden_result": self.hidden_result,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CandidateNode":
        direction = d.get("direction_used")
        return cls(
            node_id=d["node_id"],
            source=d["source"],
            parent=d.get("parent"),
            direction_used=TextualDirection.from_dict(direction) if direction else None,
            depth=d["depth"],
            validation_score=d["validation_score"],
            passed_all_validation=d["passed_all_validation"],
            hidden_result=d.get("hidden_result"),
        )


@dataclass
class SearchTrace:
    """The full tree/list of candidate nodes for one task run."""

    task_id: str
    strategy: StrategyKind
    nodes: list[CandidateNode] = field(default_factory=list)
    budget_k: int = 16
    terminated_early: bool = False
    run_seed: int = 0

    def validate(self) -> None:
        if len(self.nodes) > self.budget_k:
            raise ValueError("node count exceeds budget_k")
        by_id = {n.node_id: n for n in self.nodes}
        prev = 0
        for n in self.nodes:
            if n.node_id <= prev:
                raise ValueError("node_id must be strictly increasing")
            prev = n.node_id
            if n.parent is not None:
                parent = by_id.get(n.parent)
                if parent is None:
                    raise ValueError(f"node {n.node_id} has unknown parent {n.parent}")
                if n.depth != parent.depth + 1:
                    raise ValueError(f"node {n.node_id} depth inconsistent with parent")
        if self.terminated_early and self.nodes:
            last = self.nodes[-1]
            if not last.passed_all_validation and len(self.nodes) != self.budget_k:
                raise ValueError("terminated_early without a passing final node or exhausted budget")

    def node(self, node_id: int) -> CandidateNode:
        for n in self.nodes:
            if n.node_id == node_id:
                return n
        raise KeyError(node_id)

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "strategy": self.strategy.value,
            "nodes": [n.to_dict() for n in sorted(self.nodes, key=lambda n: n.node_id)],
            "budget_k": self.budget_k,
            "terminated_early": self.terminated_early,
            "run_seed": self.run_seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SearchTrace":
        return cls(
            task_id=d["task_id"],
            strategy=StrategyKind(d["strategy"]),
            nodes=[CandidateNode.from_dict(n) for n in d["nodes"]],
            budget_k=d["budget_k"],
            terminated_early=d["terminated_early"],
            run_seed=d["run_seed"],
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def load(cls, path: str | Path) -> "SearchTrace":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def file_name(self) -> str:
        safe_id = self.task_id.replace("/", "_")
        return f"{safe_id}.{self.strategy.value}.{self.run_seed}{TRACE_SUFFIX}"


def first_correct_depth(trace: SearchTrace, correctness: Callable[[int], bool]) -> Optional[int]:
    """Depth of the earliest-generated node judged correct, or None."""
    for node in sorted(trace.nodes, key=lambda n: n.node_id):
        if correctness(node.node_id):
            return node.depth
    return None


def max_depth(trace: SearchTrace) -> int:
    if not trace.nodes:
        raise ValueError("empty trace")
    return max(n.depth for n in trace.nodes)


def load_tasks(path: str | Path) -> list[Task]:
    """Load a JSONL dataset, one task per line.

    Accepts HumanEval-style records ({task_id, prompt, test, entry_point})
    and MBPP-style records ({task_id, text, test_list}).
    """
    tasks = []
    for line_no, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        record = json.loads(line)
        try:
            tasks.append(task_from_record(record))
        except KeyError as exc:
            raise ValueError(f"{path}:{line_no}: unrecognized dataset record (missing {exc})") from exc
    return tasks


def task_from_record(record: dict) -> Task:
    task_id = str(record["task_id"])
    if "test" in record and "prompt" in record:
        # HumanEval style: a check() function plus entry point to call it on.
        entry_point = record.get("entry_point")
        payload = record["test"]
        if entry_point:
            payload = payload.rstrip() + f"\n\ncheck({entry_point})\n"
        hidden = [TestCase(test_id=f"{task_id}::hidden", payload=payload)]
        return Task(task_id=task_id, prompt=record["prompt"], hidden_tests=hidden, entry_point=entry_point)
    if "test_list" in record:
        hidden = [
            TestCase(test_id=f"{task_id}::hidden{i}", payload=payload)
            for i, payload in enumerate(record["test_list"], start=1)
        ]
        return Task(task_id=task_id, prompt=record["text"], hidden_tests=hidden)
    raise KeyError("'test' or 'test_list'")


def load_traces(paths: Iterable[str | Path]) -> list[SearchTrace]:
    return [SearchTrace.load(p) for p in paths]
