"""Experiment execution: dataset x strategies x runs, Pass@k, scaling curves.

Trace files are the unit of persistence and resumption: an existing trace
file is never recomputed. Hidden verdicts are materialized after the search
runs (the search itself never sees hidden tests).
"""

from __future__ import annotations

import csv
import json
import math
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional, Sequence

from scipy import stats

from .core import SearchTrace, Task, load_tasks
from .gateway import Gateway, HttpBackend, MockBackend, MockScript
from .sandbox import Sandbox, hidden_verdict
from .strategies import StrategyConfig, run_strategy


class UnevaluatedTraceError(ValueError):
    pass


def pass_at_k(traces: Sequence[SearchTrace], j: int) -> float:
    """Fraction of tasks with a hidden-correct node among their first j nodes."""
    if not traces:
        raise ValueError("no traces")
    if j <= 0:
        return 0.0
    solved = 0
    for trace in traces:
        hit = False
        for node in trace.nodes:
            if node.node_id > j:
                break
            if node.hidden_result is None:
                raise UnevaluatedTraceError(f"unevaluated trace: {trace.task_id} node {node.node_id}")
            if node.hidden_result:
                hit = True
        solved += hit
    return solved / len(traces)


def confidence_interval(values: Sequence[float], level: float = 0.95) -> tuple[float, float]:
    """Mean and two-sided Student-t half width at the given confidence level."""
    n = len(values)
    if n < 2:
        raise ValueError("need at least two values")
    mean = sum(values) / n
    variance = sum((v - mean) ** 2 for v in values) / (n - 1)
    s = math.sqrt(variance)
    t_crit = float(stats.t.ppf((1 + level) / 2, n - 1))
    return mean, t_crit * s / math.sqrt(n)


@dataclass
class ScalingCurve:
    budgets: list[int]
    means: list[float]
    ci_half_widths: list[float]

    def save_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["j", "mean", "ci_half_width"])
            for j, mean, ci in zip(self.budgets, self.means, self.ci_half_widths):
                writer.writerow([j, f"{mean:.6f}", f"{ci:.6f}"])


@dataclass
class ExperimentSpec:
    dataset: Path
    strategies: dict[str, StrategyConfig]  # label -> config
    runs: int = 5
    parallelism: int = 2
    output_dir: Path = Path("runs")
    seed_base: int = 0
    backend: str = "mock"  # "mock" or "http"
    mock_script: Optional[Path] = None
    base_url: Optional[str] = None
    model: Optional[str] = None
    template_dir: Optional[Path] = None
    timeout_ms: int = 5000

    def __post_init__(self) -> None:
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.backend not in ("mock", "http"):
            raise ValueError("backend must be 'mock' or 'http'")

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentSpec":
        path = Path(path)
        if path.suffix == ".toml":
            data = tomllib.loads(path.read_text())
        else:
            data = json.loads(path.read_text())
        strategies = {}
        for entry in data.pop("strategies"):
            entry = dict(entry)
            label = entry.pop("label", entry["kind"])
            strategies[label] = StrategyConfig.from_dict(entry)
        for key in ("dataset", "output_dir", "mock_script", "template_dir"):
            if data.get(key):
                data[key] = Path(data[key])
        return cls(strategies=strategies, **data)

    def gateway_factory(self) -> Callable[[], Gateway]:
        if self.backend == "mock":
            if self.mock_script is None:
                raise ValueError("mock backend requires mock_script")
            script = MockScript.load(self.mock_script)
            return lambda: Gateway(MockBackend(script), template_dir=self.template_dir)
        if not self.base_url or not self.model:
            raise ValueError("http backend requires base_url and model")
        backend = HttpBackend(self.base_url, self.model)
        return lambda: Gateway(backend, template_dir=self.template_dir)


@dataclass
class ExperimentResult:
    curves: dict[str, ScalingCurve]
    trace_files: list[Path]
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def materialize_hidden_verdicts(
    trace: SearchTrace, task: Task, sandbox: Sandbox, timeout_ms: int = 5000
) -> SearchTrace:
    """Fill hidden_result for every node that does not yet have one."""
    for node in trace.nodes:
        if node.hidden_result is None:
            node.hidden_result = hidden_verdict(node.source, task, sandbox, timeout_ms)
    return trace


def run_experiment(
    spec: ExperimentSpec,
    gateway_factory: Optional[Callable[[], Gateway]] = None,
    sandbox: Optional[Sandbox] = None,
) -> ExperimentResult:
    """Run every (strategy, run, task) cell, persist traces, compute curves.

    Existing trace files are reused untouched (resumability). Individual task
    failures are recorded and excluded from the curves; more than 10% of
    failing cells aborts the experiment.
    """
    tasks = load_tasks(spec.dataset)
    tasks_by_id = {t.task_id: t for t in tasks}
    gateway_factory = gateway_factory or spec.gateway_factory()
    own_sandbox = sandbox is None
    sandbox = sandbox or Sandbox()
    spec.output_dir.mkdir(parents=True, exist_ok=True)
    result = ExperimentResult(curves={}, trace_files=[])
    total_cells = len(spec.strategies) * spec.runs * len(tasks)
    try:
        # label -> run index -> list of trace paths
        produced: dict[str, dict[int, list[Path]]] = {
            label: {r: [] for r in range(spec.runs)} for label in spec.strategies
        }

        def run_cell(label: str, run_idx: int, task: Task) -> Optional[Path]:
            config = replace(
                spec.strategies[label],
                run_seed=spec.seed_base + run_idx,
                timeout_ms=spec.timeout_ms,
            )
            out_dir = spec.output_dir / label
            out_dir.mkdir(parents=True, exist_ok=True)
            trace = SearchTrace(
                task_id=task.task_id, strategy=config.kind, run_seed=config.run_seed
            )
            path = out_dir / trace.file_name()
            if path.exists():
                return path
            trace = run_strategy(task, config, gateway_factory(), sandbox)
            trace = materialize_hidden_verdicts(trace, task, sandbox, spec.timeout_ms)
            trace.save(path)
            return path

        for label in spec.strategies:
            for run_idx in range(spec.runs):
                with ThreadPoolExecutor(max_workers=spec.parallelism) as pool:
                    futures = {
                        pool.submit(run_cell, label, run_idx, task): task for task in tasks
                    }
                    for future, task in futures.items():
                        try:
                            path = future.result()
                        except Exception as exc:
                            result.failures.append(f"{label}/run{run_idx}/{task.task_id}: {exc}")
                            continue
                        produced[label][run_idx].append(path)
                        result.trace_files.append(path)
                if len(result.failures) > 0.1 * total_cells:
                    raise RuntimeError(
                        f"aborting: {len(result.failures)} of {total_cells} cells failed"
                    )

        for label, config in spec.strategies.items():
            per_run_curves: list[list[float]] = []
            for run_idx in range(spec.runs):
                paths = sorted(produced[label][run_idx])
                if not paths:
                    continue
                traces = [SearchTrace.load(p) for p in paths]
                for trace in traces:
                    # Resumed traces may predate verdict materialization.
                    if any(n.hidden_result is None for n in trace.nodes):
                        materialize_hidden_verdicts(
                            trace, tasks_by_id[trace.task_id], sandbox, spec.timeout_ms
                        )
                        trace.save(spec.output_dir / label / trace.file_name())
                per_run_curves.append(
                    [pass_at_k(traces, j) for j in range(1, config.budget_k + 1)]
                )
            if not per_run_curves:
                continue
            budgets = list(range(1, config.budget_k + 1))
            means, cis = [], []
            for idx in range(len(budgets)):
                values = [curve[idx] for curve in per_run_curves]
                if len(values) >= 2:
                    mean, ci = confidence_interval(values)
                else:
                    mean, ci = values[0], 0.0
                means.append(mean)
                cis.append(ci)
            curve = ScalingCurve(budgets=budgets, means=means, ci_half_widths=cis)
            curve.save_csv(spec.output_dir / f"curve.{label}.csv")
            result.curves[label] = curve

        summary = {
            "dataset": str(spec.dataset),
            "tasks": len(tasks),
            "runs": spec.runs,
            "strategies": sorted(spec.strategies),
            "failures": result.failures,
        }
        (spec.output_dir / "summary.json").write_text(json.dumps(summary, indent=2))
        return result
    finally:
        if own_sandbox:
            sandbox.close()
