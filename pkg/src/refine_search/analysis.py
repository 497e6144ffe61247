"""Post-hoc trace analysis: depth-distribution tables and direction-diversity
matrices over completed search traces."""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import requests

from .core import SearchTrace, first_correct_depth


@dataclass
class DepthTable:
    """Per-depth trace counts with two-decimal percentage formatting;
    ``excluded`` counts traces with no correct node (for the first-correct
    variant)."""

    counts: dict[int, int]
    excluded: int = 0

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def percentages(self) -> dict[int, float]:
        total = self.total
        if total == 0:
            return {}
        return {d: round(100.0 * c / total, 2) for d, c in sorted(self.counts.items())}

    def save_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["depth", "count", "percent"])
            percents = self.percentages()
            for depth in sorted(self.counts):
                writer.writerow([depth, self.counts[depth], f"{percents[depth]:.2f}"])
            if self.excluded:
                writer.writerow(["unsolved", self.excluded, ""])


def first_correct_depth_table(traces: Sequence[SearchTrace]) -> DepthTable:
    """Distribution of the depth of the earliest hidden-correct node, over
    traces containing at least one correct node."""
    counts: dict[int, int] = {}
    excluded = 0
    for trace in traces:
        correct = {n.node_id for n in trace.nodes if n.hidden_result}
        depth = first_correct_depth(trace, correct.__contains__)
        if depth is None:
            excluded += 1
        else:
            counts[depth] = counts.get(depth, 0) + 1
    return DepthTable(counts=counts, excluded=excluded)


def max_depth_table(traces: Sequence[SearchTrace]) -> DepthTable:
    counts: dict[int, int] = {}
    for trace in traces:
        depth = max(n.depth for n in trace.nodes)
        counts[depth] = counts.get(depth, 0) + 1
    return DepthTable(counts=counts)


# ---------------------------------------------------------------------------
# Direction diversity.
# ---------------------------------------------------------------------------


def diversity_matrix(step_vectors: Sequence[Sequence[np.ndarray]]) -> np.ndarray:
    """Step-by-step mean cosine similarity of direction embeddings.

    Entry (i, j) averages cos(u, v) over u in step i and v in step j,
    excluding self-pairs on the diagonal. A step with a single direction gets
    a diagonal of 1.0 by convention.
    """
    steps = []
    dim = None
    for vectors in step_vectors:
        arr = np.array([np.asarray(v, dtype=float) for v in vectors])
        if arr.size == 0:
            raise ValueError("empty step")
        if arr.ndim != 2:
            raise ValueError("dimension mismatch within a step")
        if dim is None:
            dim = arr.shape[1]
        elif arr.shape[1] != dim:
            raise ValueError("dimension mismatch across steps")
        norms = np.linalg.norm(arr, axis=1)
        if np.any(norms == 0):
            raise ValueError("zero vector")
        steps.append(arr / norms[:, None])
    n = len(steps)
    matrix = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            sims = steps[i] @ steps[j].T
            if i == j:
                m = sims.shape[0]
                if m == 1:
                    value = 1.0
                else:
                    value = (sims.sum() - np.trace(sims)) / (m * (m - 1))
            else:
                value = sims.mean()
            matrix[i, j] = matrix[j, i] = value
    return matrix


def _text_hash(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


class PrecomputedEmbeddings:
    """JSONL file of {text_hash, vector} records keyed by sha256 of the text."""

    def __init__(self, path: str | Path):
        self._vectors: dict[str, np.ndarray] = {}
        for line in Path(path).read_text().splitlines():
            if not line.strip():
                continue
            record = json.loads(line)
            self._vectors[record["text_hash"]] = np.asarray(record["vector"], dtype=float)

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        missing = [t for t in texts if _text_hash(t) not in self._vectors]
        if missing:
            raise KeyError(f"missing embeddings for directions: {missing}")
        return [self._vectors[_text_hash(t)] for t in texts]


class HttpEmbeddings:
    """Generic embeddings endpoint: POST {model, input} -> data[*].embedding."""

    def __init__(self, base_url: str, model: str, api_key: str = ""):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        resp = requests.post(
            f"{self.base_url}/embeddings",
            json={"model": self.model, "input": list(texts)},
            headers=headers,
            timeout=60,
        )
        resp.raise_for_status()
        data = resp.json()["data"]
        return [np.asarray(item["embedding"], dtype=float) for item in data]


def write_precomputed(path: str | Path, vectors: dict[str, Sequence[float]]) -> None:
    with open(path, "w") as fh:
        for text, vector in vectors.items():
            fh.write(json.dumps({"text_hash": _text_hash(text), "vector": list(vector)}) + "\n")


def directions_by_step(traces: Sequence[SearchTrace], group: str = "step") -> list[list[str]]:
    """Direction texts bucketed either by refinement ordinal within each
    trace ("step") or by the initial code the refinement descends from
    ("initial_code"). Both groupings are meaningful axes, so the CLI emits
    both, labeled."""
    if group not in ("step", "initial_code"):
        raise ValueError("group must be 'step' or 'initial_code'")
    buckets: dict[int, list[str]] = {}
    for trace in traces:
        by_id = {n.node_id: n for n in trace.nodes}
        refinements = [n for n in trace.nodes if n.direction_used is not None]
        roots = [n.node_id for n in trace.nodes if n.parent is None]
        for ordinal, node in enumerate(refinements):
            if group == "step":
                key = ordinal
            else:
                cur = node
                while cur.parent is not None:
                    cur = by_id[cur.parent]
                key = roots.index(cur.node_id)
            buckets.setdefault(key, []).append(node.direction_used.text)
    return [buckets[k] for k in sorted(buckets)]


def embed_directions(
    traces: Sequence[SearchTrace], source, group: str = "step"
) -> list[list[np.ndarray]]:
    """One unit vector per direction, bucketed per directions_by_step."""
    step_texts = directions_by_step(traces, group)
    result = []
    for texts in step_texts:
        vectors = source.embed(texts)
        normalized = []
        for v in vectors:
            norm = np.linalg.norm(v)
            if norm == 0:
                raise ValueError("zero embedding vector")
            normalized.append(v / norm)
        result.append(normalized)
    return result


def save_matrix_csv(matrix: np.ndarray, path: str | Path, header: Optional[str] = None) -> None:
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(f"# {header}\n")
        writer = csv.writer(fh)
        for row in matrix:
            writer.writerow([f"{v:.6f}" for v in row])


def save_heatmap_svg(matrix: np.ndarray, path: str | Path, title: str = "") -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 4))
    im = ax.imshow(matrix, vmin=-1.0, vmax=1.0, cmap="viridis")
    ax.set_xlabel("refinement step")
    ax.set_ylabel("refinement step")
    if title:
        ax.set_title(title)
    fig.colorbar(im, ax=ax)
    fig.savefig(path, format="svg", bbox_inches="tight")
    plt.close(fig)
