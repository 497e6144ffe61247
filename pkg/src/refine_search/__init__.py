"""Multi-turn code-correction search strategies over pluggable LLM and
execution backends, with a finite version-space safety laboratory."""

from .core import (
    CandidateNode,
    SearchTrace,
    SharedInformation,
    StrategyKind,
    Task,
    TestCase,
    TestKind,
    TextualDirection,
    first_correct_depth,
    load_tasks,
    max_depth,
)
from .gateway import Gateway, HttpBackend, MockBackend, MockScript, Role, SamplingParams
from .sandbox import ExecResult, Sandbox, hidden_verdict, validation_score
from .strategies import StrategyConfig, run_strategy, select_node_sfs, simulate_selection_depth

__all__ = [
    "CandidateNode",
    "ExecResult",
    "Gateway",
    "HttpBackend",
    "MockBackend",
    "MockScript",
    "Role",
    "SamplingParams",
    "Sandbox",
    "SearchTrace",
    "SharedInformation",
    "StrategyConfig",
    "StrategyKind",
    "Task",
    "TestCase",
    "TestKind",
    "TextualDirection",
    "first_correct_depth",
    "hidden_verdict",
    "load_tasks",
    "max_depth",
    "run_strategy",
    "select_node_sfs",
    "simulate_selection_depth",
    "validation_score",
]
