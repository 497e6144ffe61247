"""Command-line entry point.

Subcommands: run, analyze depth, analyze diversity, vspace campaign,
vspace demo, eval, doctor. Exit code 0 only when the requested operation
completed with zero violations or failures.
"""

from __future__ import annotations

import glob
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

import click

from . import analysis, harness, vspace
from .core import SearchTrace, load_tasks
from .gateway import API_KEY_ENV, Gateway, HttpBackend, GenerationRequest, Role
from .sandbox import Sandbox, SandboxUnavailableError, default_runner_cmd


@click.group()
def main() -> None:
    """Multi-turn code-correction search and version-space verification."""


@main.command("run")
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True))
@click.option("--jobs", type=int, default=None, help="Worker pool size (caps machine parallelism at 8).")
def run_cmd(spec_path: str, jobs: int | None) -> None:
    """Run an experiment spec: traces plus scaling curves."""
    spec = harness.ExperimentSpec.load(spec_path)
    if jobs is not None:
        spec.parallelism = jobs
    else:
        spec.parallelism = min(spec.parallelism or os.cpu_count() or 1, 8)
    result = harness.run_experiment(spec)
    click.echo(f"traces: {len(result.trace_files)}  curves: {sorted(result.curves)}")
    for failure in result.failures:
        click.echo(f"failure: {failure}", err=True)
    sys.exit(0 if result.ok else 1)


@main.group("analyze")
def analyze_group() -> None:
    """Post-hoc trace analyses."""


def _load_trace_globs(patterns: tuple[str, ...]) -> list[SearchTrace]:
    paths = sorted(p for pattern in patterns for p in glob.glob(pattern))
    if not paths:
        raise click.ClickException("no trace files matched")
    return [SearchTrace.load(p) for p in paths]


@analyze_group.command("depth")
@click.argument("traces", nargs=-1, required=True)
@click.option("--out-dir", type=click.Path(), default=".")
def analyze_depth(traces: tuple[str, ...], out_dir: str) -> None:
    """Depth-distribution CSVs (first-correct and maximum depth)."""
    loaded = _load_trace_globs(traces)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    first = analysis.first_correct_depth_table(loaded)
    first.save_csv(out / "first_correct_depth.csv")
    deepest = analysis.max_depth_table(loaded)
    deepest.save_csv(out / "max_depth.csv")
    click.echo(f"first-correct depth: {first.percentages()} (unsolved: {first.excluded})")
    click.echo(f"max depth: {deepest.percentages()}")


@analyze_group.command("diversity")
@click.argument("traces", nargs=-1, required=True)
@click.option("--embeddings", "embeddings_path", type=click.Path(exists=True), help="Precomputed JSONL.")
@click.option("--endpoint", help="Embeddings endpoint base URL.")
@click.option("--model", default="all-MiniLM-L6-v2")
@click.option("--out-dir", type=click.Path(), default=".")
@click.option("--svg/--no-svg", default=False)
def analyze_diversity(
    traces: tuple[str, ...], embeddings_path: str | None, endpoint: str | None,
    model: str, out_dir: str, svg: bool,
) -> None:
    """Direction-diversity heatmap CSVs (both step groupings)."""
    loaded = _load_trace_globs(traces)
    if embeddings_path:
        source = analysis.PrecomputedEmbeddings(embeddings_path)
    elif endpoint:
        source = analysis.HttpEmbeddings(endpoint, model, os.environ.get(API_KEY_ENV, ""))
    else:
        raise click.ClickException("provide --embeddings or --endpoint")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for group in ("step", "initial_code"):
        vectors = analysis.embed_directions(loaded, source, group=group)
        matrix = analysis.diversity_matrix(vectors)
        analysis.save_matrix_csv(
            matrix, out / f"diversity.{group}.csv",
            header=f"mean cosine similarity, directions grouped by {group}",
        )
        if svg:
            analysis.save_heatmap_svg(matrix, out / f"diversity.{group}.svg", title=group)
    click.echo(f"wrote diversity matrices to {out}")


@main.group("vspace")
def vspace_group() -> None:
    """Version-space theorem verification."""


@vspace_group.command("campaign")
@click.option("--models", type=int, default=200)
@click.option("--seed", type=int, default=2024)
@click.option("--max-size", type=int, default=5)
@click.option("--history-len", type=int, default=4)
@click.option("--format", "fmt", type=click.Choice(["json", "table"]), default="table")
@click.option("--out", type=click.Path(), default=None)
def vspace_campaign(models: int, seed: int, max_size: int, history_len: int, fmt: str, out: str | None) -> None:
    """Verify the safety/drift theorems on seeded random instances."""
    report = vspace.run_campaign(
        n_models=models, seed=seed, max_size=max_size, max_history_len=history_len
    )
    if fmt == "json":
        click.echo(json.dumps(report.to_dict(), indent=2))
    else:
        click.echo(f"models checked:          {report.models}")
        click.echo(f"multi-code histories:    {report.multi_code_histories}")
        click.echo(f"single-code histories:   {report.single_code_histories}")
        click.echo(f"subset pairs:            {report.subset_pairs}")
        click.echo(f"drift prefixes:          {report.drift_prefixes}")
        click.echo(f"violations:              {len(report.violations)}")
        click.echo(f"elapsed:                 {report.elapsed_s:.1f}s")
    if out:
        Path(out).write_text(json.dumps(report.to_dict(), indent=2))
    sys.exit(0 if report.ok else 1)


@vspace_group.command("demo")
def vspace_demo() -> None:
    """The drifting-history collapse instance and the window-size example."""
    model, history = vspace.observation1_instance()
    step1 = vspace.consistent_directions(model, "c0", "e")
    step2 = vspace.consistent_directions(model, "c1", "e")
    collapsed = vspace.linear_version_space(model, history)
    click.echo(f"single-step constraint sets: {sorted(step1)} and {sorted(step2)}")
    click.echo(f"two-step drifting version space: {sorted(collapsed) or '{} (empty)'}")
    measures = vspace.DriftMeasures.compute(
        alpha=Fraction(1, 2), delta_drift=Fraction(1, 5), epsilon=Fraction(1, 10)
    )
    click.echo(
        f"window example: alpha=1/2, drift=1/5, epsilon=1/10 -> max safe window {measures.w_max}"
    )
    sys.exit(0 if not collapsed and step1 and step2 else 1)


@main.command("eval")
@click.argument("traces", nargs=-1, required=True)
@click.option("--dataset", required=True, type=click.Path(exists=True))
@click.option("--timeout-ms", type=int, default=5000)
def eval_cmd(traces: tuple[str, ...], dataset: str, timeout_ms: int) -> None:
    """Materialize hidden verdicts for existing trace files."""
    tasks = {t.task_id: t for t in load_tasks(dataset)}
    paths = sorted(p for pattern in traces for p in glob.glob(pattern))
    if not paths:
        raise click.ClickException("no trace files matched")
    failures = 0
    with Sandbox() as sandbox:
        for path in paths:
            trace = SearchTrace.load(path)
            task = tasks.get(trace.task_id)
            if task is None:
                click.echo(f"no task for trace {path}", err=True)
                failures += 1
                continue
            harness.materialize_hidden_verdicts(trace, task, sandbox, timeout_ms)
            trace.save(path)
    click.echo(f"evaluated {len(paths) - failures} traces")
    sys.exit(0 if failures == 0 else 1)


@main.command("doctor")
@click.option("--base-url", default=None, help="Check an OpenAI-compatible endpoint.")
@click.option("--model", default=None)
def doctor(base_url: str | None, model: str | None) -> None:
    """Backend and runner health check; prints effective configuration."""
    ok = True
    click.echo(f"runner command: {' '.join(default_runner_cmd())}")
    try:
        with Sandbox(pool_size=1) as sandbox:
            from .core import TestCase

            result = sandbox.evaluate("x = 1", [TestCase(test_id="probe", payload="assert x == 1")], 2000)
            status = result.per_test[0].status
            click.echo(f"runner probe: {status}")
            ok = ok and status == "pass"
    except SandboxUnavailableError as exc:
        click.echo(f"runner probe failed: {exc}")
        ok = False
    click.echo(f"api key env var {API_KEY_ENV}: {'set' if os.environ.get(API_KEY_ENV) else 'unset'}")
    if base_url and model:
        try:
            gateway = Gateway(HttpBackend(base_url, model), max_retries=0)
            text = gateway.complete(
                GenerationRequest(
                    role=Role.INIT_CODE,
                    messages=(("system", "ping"), ("user", "reply with pong")),
                    task_id="doctor",
                )
            )
            click.echo(f"backend probe: ok ({len(text)} chars)")
        except Exception as exc:
            click.echo(f"backend probe failed: {exc}")
            ok = False
    click.echo("config precedence: flags > spec file > environment > defaults")
    sys.exit(0 if ok else 1)


if __name__ == "__main__":
    main()
