"""The five search strategies: best-of-N, linear refinement, MCTS, SFS, IRTD.

All strategies share the same plumbing: generate validation tests once, score
every candidate against them, and record each generated code as a node in a
SearchTrace. Only code generations count against the budget k; direction
generation, test generation, and shared-information updates are free.

Hidden tests are never consulted during search; verdicts are materialized
later by the harness.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

from .core import (
    CandidateNode,
    SearchTrace,
    SharedInformation,
    StrategyKind,
    Task,
    TextualDirection,
)
from .gateway import Gateway, Role
from .sandbox import ExecResult, validation_score


@dataclass
class StrategyConfig:
    kind: StrategyKind
    budget_k: int = 16
    n_init: int = 1
    m_directions: int = 3
    uct_c: float = 1.0
    validation_test_count: int = 6
    run_seed: int = 0
    early_stop: bool = True
    timeout_ms: int = 5000
    feedback_detail: str = "failures"  # "failures" or "counts"

    def __post_init__(self) -> None:
        if self.n_init < 1:
            raise ValueError("n_init must be >= 1")
        if self.budget_k < self.n_init:
            raise ValueError("budget_k must be >= n_init")
        if self.uct_c < 0:
            raise ValueError("uct_c must be >= 0")
        if self.feedback_detail not in ("failures", "counts"):
            raise ValueError("feedback_detail must be 'failures' or 'counts'")

    @classmethod
    def from_dict(cls, d: dict) -> "StrategyConfig":
        d = dict(d)
        d["kind"] = StrategyKind(d["kind"])
        return cls(**d)


@dataclass
class TreeNodeStats:
    """Per-node search statistics; quality is the node's raw validation score."""

    node_id: int
    quality: float = 0.0
    visits: int = 0
    unused_directions: list[TextualDirection] = field(default_factory=list)
    children: list[int] = field(default_factory=list)


def uct_value(child: TreeNodeStats, parent_visits: int, uct_c: float) -> float:
    return child.quality + uct_c * math.sqrt(math.log(parent_visits + 1) / (child.visits + 1))


def _uct_pick(
    tree: dict[int, TreeNodeStats],
    candidates: Sequence[int],
    parent_visits: int,
    uct_c: float,
    rng: Optional[random.Random],
) -> int:
    values = {cid: uct_value(tree[cid], parent_visits, uct_c) for cid in candidates}
    best = max(values.values())
    tied = [cid for cid in candidates if values[cid] == best]
    if rng is not None and len(tied) > 1:
        return tied[rng.randrange(len(tied))]
    return min(tied)


def _has_better_child(tree: dict[int, TreeNodeStats], node_id: int) -> bool:
    node = tree[node_id]
    return any(tree[c].quality > node.quality for c in node.children)


def select_node_sfs(
    tree: dict[int, TreeNodeStats],
    root: int,
    uct_c: float = 1.0,
    rng: Optional[random.Random] = None,
) -> int:
    """SFS node selection: descend by UCT only while the current node both
    has at least one better child (strictly higher quality) and has no unused
    textual directions; return the first node violating the loop condition."""
    cur = root
    while _has_better_child(tree, cur) and not tree[cur].unused_directions:
        cur = _uct_pick(tree, tree[cur].children, tree[cur].visits, uct_c, rng)
    return cur


# ---------------------------------------------------------------------------
# Selection-depth simulator for the depth-bias theorem.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SelectionDepthReport:
    distribution: dict[int, float]  # empirical Pr(depth = d) of the returned node
    epsilon_bound: float  # exact sum over qualifying depth-1 children of Pr(chosen)
    trials: int


class PremiseUnmetError(ValueError):
    pass


def simulate_selection_depth(
    tree_spec: dict, trials: int, seed: int, uct_c: float = 1.0
) -> SelectionDepthReport:
    """Empirical depth distribution of SFS selection with randomized UCT ties.

    ``tree_spec`` holds ``root`` and ``nodes``: per node id, quality, visits,
    an unused-direction count, and children. The root must have no unused
    directions and at least one better child, otherwise the depth-bias
    premise does not apply and an error is raised.

    The reported bound is the exact probability that the root-level UCT pick
    lands on a depth-1 child that itself has no unused directions and a
    better child (the only way selection can go past depth 1).
    """
    nodes = tree_spec["nodes"]
    root = tree_spec["root"]
    tree: dict[int, TreeNodeStats] = {}
    for nid, info in nodes.items():
        tree[nid] = TreeNodeStats(
            node_id=nid,
            quality=info["quality"],
            visits=info["visits"],
            unused_directions=[TextualDirection(text=f"u{i}") for i in range(info.get("unused", 0))],
            children=list(info.get("children", [])),
        )
    if tree[root].unused_directions or not _has_better_child(tree, root):
        raise PremiseUnmetError("theorem premise unmet")

    depth = {root: 0}
    frontier = [root]
    while frontier:
        nid = frontier.pop()
        for child in tree[nid].children:
            depth[child] = depth[nid] + 1
            frontier.append(child)

    # Exact bound: uniform tie-breaking over the argmax-UCT root children.
    children = tree[root].children
    values = {c: uct_value(tree[c], tree[root].visits, uct_c) for c in children}
    best = max(values.values())
    tied = [c for c in children if values[c] == best]
    qualifying = [c for c in tied if not tree[c].unused_directions and _has_better_child(tree, c)]
    epsilon = len(qualifying) / len(tied)

    rng = random.Random(seed)
    counts: dict[int, int] = {}
    for _ in range(trials):
        selected = select_node_sfs(tree, root, uct_c, rng)
        d = depth[selected]
        counts[d] = counts.get(d, 0) + 1
    distribution = {d: c / trials for d, c in sorted(counts.items())}
    return SelectionDepthReport(distribution=distribution, epsilon_bound=epsilon, trials=trials)


# ---------------------------------------------------------------------------
# Strategy runners.
# ---------------------------------------------------------------------------


class _Run:
    """Shared per-task state for one strategy run."""

    def __init__(self, task: Task, config: StrategyConfig, gateway: Gateway, sandbox):
        self.config = config
        self.gateway = gateway
        self.sandbox = sandbox
        self.rng = random.Random(config.run_seed)
        tests = gateway.generate_validation_tests(task, config.validation_test_count)
        self.task = replace(task, validation_tests=tests)
        self.trace = SearchTrace(
            task_id=task.task_id,
            strategy=config.kind,
            budget_k=config.budget_k,
            run_seed=config.run_seed,
        )
        self.last_result: dict[int, ExecResult] = {}

    def budget_left(self) -> bool:
        return len(self.trace.nodes) < self.config.budget_k

    def score(self, code: str) -> tuple[ExecResult, float, bool]:
        result = self.sandbox.evaluate(
            code, self.task.validation_tests, self.config.timeout_ms, self.task.entry_point
        )
        score = validation_score(result)
        passed = bool(self.task.validation_tests) and score == 1.0
        return result, score, passed

    def add_node(
        self,
        code: str,
        parent: Optional[CandidateNode] = None,
        direction: Optional[TextualDirection] = None,
    ) -> CandidateNode:
        result, score, passed = self.score(code)
        node = CandidateNode(
            node_id=len(self.trace.nodes) + 1,
            source=code,
            parent=parent.node_id if parent else None,
            direction_used=direction,
            depth=1 if parent is None else parent.depth + 1,
            validation_score=score,
            passed_all_validation=passed,
        )
        self.trace.nodes.append(node)
        self.last_result[node.node_id] = result
        return node

    def feedback_for(self, node: CandidateNode) -> str:
        result = self.last_result.get(node.node_id)
        if result is None:
            return ""
        failing = [v for v in result.per_test if v.status != "pass"]
        if self.config.feedback_detail == "counts":
            return f"{len(result.per_test) - len(failing)} of {len(result.per_test)} validation tests passed."
        if not failing:
            return "All validation tests passed."
        lines = ["Failing validation tests:"]
        for v in failing:
            detail = f" ({v.detail})" if v.detail else ""
            lines.append(f"- {v.test_id}: {v.status}{detail}")
        return "\n".join(lines)

    def finish(self, terminated_early: bool) -> SearchTrace:
        self.trace.terminated_early = terminated_early
        self.trace.validate()
        return self.trace


def run_bon(task: Task, config: StrategyConfig, gateway: Gateway, sandbox) -> SearchTrace:
    """Independent samples from the same prompt, all at depth 1."""
    run = _Run(task, config, gateway, sandbox)
    info = SharedInformation.empty()
    while run.budget_left():
        code = gateway.generate_initial_codes(run.task, 1, info)[0]
        node = run.add_node(code)
        if config.early_stop and node.passed_all_validation:
            return run.finish(terminated_early=True)
    return run.finish(terminated_early=False)


def run_linear(task: Task, config: StrategyConfig, gateway: Gateway, sandbox) -> SearchTrace:
    """A single refinement chain; each step refines the previous code."""
    if config.n_init != 1:
        raise ValueError("linear refinement requires n_init = 1")
    run = _Run(task, config, gateway, sandbox)
    info = SharedInformation.empty()
    cur = run.add_node(gateway.generate_initial_codes(run.task, 1, info)[0])
    if config.early_stop and cur.passed_all_validation:
        return run.finish(terminated_early=True)
    while run.budget_left():
        direction = gateway.generate_directions(
            run.task, cur.source, info, 1, feedback=run.feedback_for(cur)
        )[0]
        refined = gateway.refine_code(run.task, cur.source, direction)
        direction.used = True
        node = run.add_node(refined, parent=cur, direction=direction)
        direction.feedback = (
            f"validation score {cur.validation_score:.3f} -> {node.validation_score:.3f}"
        )
        cur = node
        if config.early_stop and node.passed_all_validation:
            return run.finish(terminated_early=True)
    return run.finish(terminated_early=False)


def _backprop_visits(tree: dict[int, TreeNodeStats], parents: dict[int, Optional[int]], node_id: int) -> None:
    cur: Optional[int] = node_id
    while cur is not None:
        tree[cur].visits += 1
        cur = parents[cur]


def _expand(
    run: _Run,
    tree: dict[int, TreeNodeStats],
    parents: dict[int, Optional[int]],
    node: CandidateNode,
    info: SharedInformation,
) -> tuple[CandidateNode, TextualDirection]:
    """Take one unused direction from ``node`` (generating a batch if none
    remain), refine, score, and attach the child to the search tree."""
    stats = tree[node.node_id]
    if not stats.unused_directions:
        stats.unused_directions = run.gateway.generate_directions(
            run.task, node.source, info, run.config.m_directions, feedback=run.feedback_for(node)
        )
    direction = stats.unused_directions.pop(run.rng.randrange(len(stats.unused_directions)))
    refined = run.gateway.refine_code(run.task, node.source, direction)
    direction.used = True
    child = run.add_node(refined, parent=node, direction=direction)
    direction.feedback = (
        f"validation score {node.validation_score:.3f} -> {child.validation_score:.3f}"
    )
    tree[child.node_id] = TreeNodeStats(node_id=child.node_id, quality=child.validation_score)
    stats.children.append(child.node_id)
    parents[child.node_id] = node.node_id
    _backprop_visits(tree, parents, child.node_id)
    return child, direction


def run_tree(task: Task, config: StrategyConfig, gateway: Gateway, sandbox) -> SearchTrace:
    """MCTS over codes: UCT selection, expansion by one refinement,
    evaluation on the validation tests, visit-count backpropagation."""
    if config.n_init != 1:
        raise ValueError("tree search requires n_init = 1")
    run = _Run(task, config, gateway, sandbox)
    info = SharedInformation.empty()
    root = run.add_node(gateway.generate_initial_codes(run.task, 1, info)[0])
    if config.early_stop and root.passed_all_validation:
        return run.finish(terminated_early=True)
    tree = {root.node_id: TreeNodeStats(node_id=root.node_id, quality=root.validation_score, visits=1)}
    parents: dict[int, Optional[int]] = {root.node_id: None}
    while run.budget_left():
        # Selection: descend while the node is fully expanded.
        cur = root.node_id
        while not tree[cur].unused_directions and tree[cur].children:
            cur = _uct_pick(tree, tree[cur].children, tree[cur].visits, config.uct_c, run.rng)
        child, _ = _expand(run, tree, parents, run.trace.node(cur), info)
        if config.early_stop and child.passed_all_validation:
            return run.finish(terminated_early=True)
    return run.finish(terminated_early=False)


def run_sfs(task: Task, config: StrategyConfig, gateway: Gateway, sandbox) -> SearchTrace:
    """Scattered forest search: a forest of initial codes (Foresting), each
    refinement steered by a sampled textual direction (Scattering), with
    per-direction insights shared across branches (Scouting)."""
    run = _Run(task, config, gateway, sandbox)
    info = SharedInformation.empty()
    tree: dict[int, TreeNodeStats] = {}
    parents: dict[int, Optional[int]] = {}
    roots: list[int] = []
    for _ in range(config.n_init):
        code = gateway.generate_initial_codes(run.task, 1, info)[0]
        node = run.add_node(code)
        tree[node.node_id] = TreeNodeStats(node_id=node.node_id, quality=node.validation_score, visits=1)
        parents[node.node_id] = None
        roots.append(node.node_id)
        if config.early_stop and node.passed_all_validation:
            return run.finish(terminated_early=True)
    while run.budget_left():
        # Root choice by UCT under a virtual super-root, then the SFS
        # selection walk within that root's subtree.
        super_visits = sum(tree[r].visits for r in roots)
        root_id = _uct_pick(tree, roots, super_visits, config.uct_c, run.rng)
        selected = select_node_sfs(tree, root_id, config.uct_c, run.rng)
        parent_node = run.trace.node(selected)
        child, direction = _expand(run, tree, parents, parent_node, info)
        info = gateway.update_shared_info(
            run.task,
            parent_node.source,
            info,
            direction,
            child.source,
            score_before=parent_node.validation_score,
            score_after=child.validation_score,
            role=Role.SCOUT_INSIGHT,
        )
        if config.early_stop and child.passed_all_validation:
            return run.finish(terminated_early=True)
    return run.finish(terminated_early=False)


def run_irtd(task: Task, config: StrategyConfig, gateway: Gateway, sandbox) -> SearchTrace:
    """Iterative refinement of textual directions: initial codes stay fixed
    as the refinement targets; every refined node has depth 2. Directions are
    regenerated each round from the shared information gathered so far."""
    run = _Run(task, config, gateway, sandbox)
    info = SharedInformation.empty()
    initials: list[CandidateNode] = []
    for _ in range(config.n_init):
        code = gateway.generate_initial_codes(run.task, 1, info)[0]
        node = run.add_node(code)
        initials.append(node)
        if node.passed_all_validation:
            return run.finish(terminated_early=True)
    max_refinements = config.budget_k - config.n_init
    steps = 0
    while steps < max_refinements:
        for base in initials:  # round-robin over the fixed initial codes
            directions = gateway.generate_directions(
                run.task, base.source, info, config.m_directions, feedback=run.feedback_for(base)
            )
            for direction in directions:
                refined = gateway.refine_code(run.task, base.source, direction)
                direction.used = True
                node = run.add_node(refined, parent=base, direction=direction)
                direction.feedback = (
                    f"validation score {base.validation_score:.3f} -> {node.validation_score:.3f}"
                )
                info = gateway.update_shared_info(
                    run.task,
                    base.source,
                    info,
                    direction,
                    node.source,
                    score_before=base.validation_score,
                    score_after=node.validation_score,
                )
                steps += 1
                if node.passed_all_validation:
                    return run.finish(terminated_early=True)
                if steps >= max_refinements:
                    return run.finish(terminated_early=False)
    return run.finish(terminated_early=False)


_RUNNERS = {
    StrategyKind.BON: run_bon,
    StrategyKind.LINEAR: run_linear,
    StrategyKind.TREE: run_tree,
    StrategyKind.SFS: run_sfs,
    StrategyKind.IRTD: run_irtd,
}


def run_strategy(task: Task, config: StrategyConfig, gateway: Gateway, sandbox) -> SearchTrace:
    return _RUNNERS[config.kind](task, config, gateway, sandbox)
