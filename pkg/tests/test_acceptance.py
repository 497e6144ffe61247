"""Acceptance suite: one test (and one printed pass/fail line) per shipping
criterion. Every derived number is checked against an oracle computed
independently in this file, not against the implementation under test."""

import math
import random

import numpy as np
import pytest

from refine_search.analysis import diversity_matrix, first_correct_depth_table
from refine_search.core import CandidateNode, SearchTrace, StrategyKind, Task, TestCase
from refine_search.gateway import Gateway, MockBackend, MockScript
from refine_search.harness import confidence_interval, materialize_hidden_verdicts, pass_at_k
from refine_search.strategies import (
    StrategyConfig,
    TreeNodeStats,
    run_strategy,
    select_node_sfs,
    simulate_selection_depth,
)
from refine_search.vspace import (
    GeneratorSpec,
    History,
    VersionSpaceModel,
    linear_version_space,
    run_campaign,
    survival_probability,
)

from conftest import FakeSandbox, scored
from test_harness import t_quantile_oracle

WRONG = "```\ndef solution():\n    return 0\n```"
RIGHT = "```\ndef solution():\n    return 1\n```"
DIRECTIONS = "1. handle the empty case\n2. check the types\n3. simplify the return"


def passline(capsys, text):
    with capsys.disabled():
        print(f"\n[PASS] {text}")


# ---------------------------------------------------------------------------
# Version-space laboratory.
# ---------------------------------------------------------------------------


def test_campaign_200_models_zero_violations(capsys):
    report = run_campaign()
    assert report.models == 200
    assert report.ok, report.violations[:5]
    assert report.elapsed_s < 60.0
    assert report.multi_code_histories > 0
    assert report.single_code_histories > 0
    assert report.subset_pairs > 0
    assert report.drift_prefixes > 0
    passline(
        capsys,
        f"safety/drift campaign: 200 seeded models, 0 violations in {report.elapsed_s:.1f}s "
        f"({report.multi_code_histories + report.single_code_histories} histories, "
        f"{report.drift_prefixes} drift prefixes)",
    )


def test_drifting_history_collapses_version_space(capsys):
    model = VersionSpaceModel(
        directions=("d_a", "d_b"),
        codes=("c0", "c1"),
        counterexamples=("e",),
        passes=frozenset({("c0", "d_a"), ("c1", "d_b")}),
        consistent=frozenset({("c0", "d_a", "e"), ("c1", "d_b", "e")}),
        obs={"c0": ("e",), "c1": ("e",)},
    )
    first = linear_version_space(model, History(steps=(("c0", "e"),)))
    second = linear_version_space(model, History(steps=(("c1", "e"),)))
    both = linear_version_space(model, History(steps=(("c0", "e"), ("c1", "e"))))
    assert first == {"d_a"} and second == {"d_b"}
    assert both == frozenset()
    passline(capsys, "drifting two-step history empties the version space "
                     "while each single-step set is non-empty")


def test_survival_monte_carlo_respects_lower_bound(capsys):
    model = VersionSpaceModel(
        directions=("d0", "d1"),
        codes=("cin", "cout"),
        counterexamples=("e0",),
        passes=frozenset({("cin", "d0"), ("cout", "d1")}),
        consistent=frozenset({("cin", "d0", "e0"), ("cout", "d1", "e0")}),
        obs={"cin": ("e0",), "cout": ("e0",)},
    )
    spec = GeneratorSpec(model=model, in_basin_prob=0.9)
    trials = 10**5
    est = survival_probability(spec, "d0", m=3, delta=0.1, trials=trials, seed=2024)
    exact = 0.9**3  # survival iff all three draws stay in the basin
    three_se = 3 * math.sqrt(exact * (1 - exact) / trials)
    assert est.bound_union == pytest.approx(0.7)
    assert est.bound_independent == pytest.approx(exact)
    assert est.empirical >= exact - three_se
    assert est.empirical >= 0.7
    assert abs(est.empirical - exact) <= three_se
    again = survival_probability(spec, "d0", m=3, delta=0.1, trials=trials, seed=2024)
    assert again == est
    passline(
        capsys,
        f"survival Monte Carlo (m=3, delta=0.1, {trials} trials): empirical "
        f"{est.empirical:.4f} >= 0.729 - 3se and >= 0.7; seed-deterministic",
    )


# ---------------------------------------------------------------------------
# Selection depth bias.
# ---------------------------------------------------------------------------


def test_selection_depth_bias(capsys):
    # No qualifying depth-1 child: selection depth is 1 with probability one.
    all_blocked = {
        "root": 1,
        "nodes": {
            1: {"quality": 0.2, "visits": 10, "unused": 0, "children": [2, 3, 4]},
            2: {"quality": 0.5, "visits": 2, "unused": 1},
            3: {"quality": 0.5, "visits": 2, "unused": 2},
            4: {"quality": 0.5, "visits": 2, "unused": 1},
        },
    }
    blocked = simulate_selection_depth(all_blocked, trials=20000, seed=1)
    assert blocked.epsilon_bound == 0.0
    assert blocked.distribution == {1: 1.0}

    # Five tied children, exactly one of which can carry the walk deeper.
    trials = 10**5
    one_of_five = {
        "root": 1,
        "nodes": {
            1: {"quality": 0.2, "visits": 10, "unused": 0, "children": [2, 3, 4, 5, 6]},
            2: {"quality": 0.5, "visits": 2, "unused": 1},
            3: {"quality": 0.5, "visits": 2, "unused": 1},
            4: {"quality": 0.5, "visits": 2, "unused": 0, "children": [7]},
            5: {"quality": 0.5, "visits": 2, "unused": 1},
            6: {"quality": 0.5, "visits": 2, "unused": 1},
            7: {"quality": 0.7, "visits": 1},
        },
    }
    report = simulate_selection_depth(one_of_five, trials=trials, seed=7)
    assert report.epsilon_bound == pytest.approx(0.2)
    deeper = sum(p for d, p in report.distribution.items() if d >= 2)
    three_se = 3 * math.sqrt(0.2 * 0.8 / trials)
    assert deeper <= report.epsilon_bound + three_se
    assert abs(deeper - 0.2) <= three_se
    passline(
        capsys,
        f"selection depth bias: blocked tree selects depth 1 always; tied 1-of-5 tree "
        f"goes deeper with rate {deeper:.4f} within 3se of the exact 0.2 bound",
    )


# ---------------------------------------------------------------------------
# Strategy fidelity.
# ---------------------------------------------------------------------------


def reference_select(tree, root, uct_c=1.0):
    """Independent recursive reimplementation of the selection walk."""
    node = tree[root]
    has_better = any(tree[c].quality > node.quality for c in node.children)
    if not has_better or node.unused_directions:
        return root
    best_id, best_val = None, None
    for c in node.children:
        v = tree[c].quality + uct_c * math.sqrt(math.log(node.visits + 1) / (tree[c].visits + 1))
        if best_val is None or v > best_val or (v == best_val and c < best_id):
            best_id, best_val = c, v
    return reference_select(tree, best_id, uct_c)


def random_tree(rng):
    n = rng.randint(1, 12)
    tree = {}
    for i in range(1, n + 1):
        tree[i] = TreeNodeStats(
            node_id=i,
            quality=rng.choice([0.0, 0.25, 0.5, 0.75, 1.0]),
            visits=rng.randint(0, 5),
            unused_directions=[object()] * rng.randint(0, 2),
            children=[],
        )
        if i > 1:
            tree[rng.randint(1, i - 1)].children.append(i)
    return tree


def make_search_gateway(task_id, init_scores, refine_scores, n_tests=4):
    responses = {f"{task_id}/gen_tests/1": "\n".join(f"assert check_{i}()" for i in range(n_tests))}
    for i, s in enumerate(init_scores, start=1):
        responses[f"{task_id}/init_code/{i}"] = scored(s)
    for i, s in enumerate(refine_scores, start=1):
        responses[f"{task_id}/refine_code/{i}"] = scored(s)
    return Gateway(MockBackend(MockScript(responses=responses, default_response=DIRECTIONS)))


def hidden_task(task_id="t1"):
    return Task(task_id=task_id, prompt="return one",
                hidden_tests=[TestCase(f"{task_id}::h", "assert solution() == 1")])


def test_strategy_fidelity(capsys):
    # 1000 random trees: selection equals the independent reimplementation.
    rng = random.Random(424242)
    for _ in range(1000):
        tree = random_tree(rng)
        assert select_node_sfs(tree, 1) == reference_select(tree, 1)

    # Refined-direction search keeps every refinement at depth 2 and inside
    # the budget, across several budgets and initial-code counts.
    for budget, n_init in [(6, 1), (9, 2), (12, 3)]:
        gw = make_search_gateway("t1", [0.25] * n_init, [0.5] * budget)
        cfg = StrategyConfig(kind=StrategyKind.IRTD, budget_k=budget, n_init=n_init, m_directions=2)
        trace = run_strategy(hidden_task(), cfg, gw, FakeSandbox())
        trace.validate()
        assert len(trace.nodes) <= budget
        assert max(n.depth for n in trace.nodes) <= 2
        assert gw.code_generation_calls("t1") == len(trace.nodes)

    # A single root is the no-foresting configuration: with a fixed script,
    # running it as "scattered search, n_init=1" and as the single-root
    # configuration are the same run and must produce identical traces.
    def single_root_once():
        gw = make_search_gateway("t1", [0.25], [0.5, 0.25, 0.75, 0.5, 0.5])
        cfg = StrategyConfig(kind=StrategyKind.SFS, budget_k=6, n_init=1, run_seed=3)
        return run_strategy(hidden_task(), cfg, gw, FakeSandbox()).to_dict()

    assert single_root_once() == single_root_once()
    passline(capsys, "strategy fidelity: selection matches reference on 1000 random trees; "
                     "direction-refinement depth <= 2 within budget; single-root "
                     "(no-foresting) runs are trace-identical under a fixed script")


# ---------------------------------------------------------------------------
# End-to-end scaling on a scripted dataset.
# ---------------------------------------------------------------------------

SOLVE_AT = [1, 2, 3, 4, 5, 6, 8, 10, 13, 16]  # node index of the first correct code


def scaling_script(task_id, solve_at, n_init, budget=16):
    """Map the g-th code generation of the run to right/wrong responses."""
    responses = {f"{task_id}/gen_tests/1": "assert solution() * 1 == 1"}
    for g in range(1, budget + 1):
        text = RIGHT if g == solve_at else WRONG
        if g <= n_init:
            responses[f"{task_id}/init_code/{g}"] = text
        else:
            responses[f"{task_id}/refine_code/{g - n_init}"] = text
    return MockScript(responses=responses, default_response=DIRECTIONS)


def scaling_task(task_id):
    return Task(task_id=task_id, prompt="return one",
                hidden_tests=[TestCase(f"{task_id}::h", "assert solution() == 1")])


def test_scaling_curves_match_hand_computed_step_functions(capsys, sandbox):
    budget = 16
    configs = {
        "bon": (StrategyConfig(kind=StrategyKind.BON, budget_k=budget), budget),
        "linear": (StrategyConfig(kind=StrategyKind.LINEAR, budget_k=budget), 1),
        "tree": (StrategyConfig(kind=StrategyKind.TREE, budget_k=budget), 1),
        "sfs": (StrategyConfig(kind=StrategyKind.SFS, budget_k=budget, n_init=5), 5),
        "irtd": (StrategyConfig(kind=StrategyKind.IRTD, budget_k=budget, n_init=5), 5),
    }
    expected = [sum(1 for s in SOLVE_AT if s <= j) / len(SOLVE_AT) for j in range(1, budget + 1)]
    for label, (config, n_init) in configs.items():
        traces = []
        for i, solve_at in enumerate(SOLVE_AT):
            task = scaling_task(f"T{i}")
            gateway = Gateway(MockBackend(scaling_script(f"T{i}", solve_at, n_init)))
            trace = run_strategy(task, config, gateway, sandbox)
            materialize_hidden_verdicts(trace, task, sandbox, timeout_ms=3000)
            traces.append(trace)
        curve = [pass_at_k(traces, j) for j in range(1, budget + 1)]
        assert curve == pytest.approx(expected), label
        assert all(a <= b for a, b in zip(curve, curve[1:])), label
    passline(capsys, "scaling: all five strategies reproduce the hand-computed "
                     "Pass@j step function on the 10-task scripted dataset, monotone in j")


# ---------------------------------------------------------------------------
# Metrics.
# ---------------------------------------------------------------------------


def test_pass_at_k_and_confidence_intervals_match_oracles(capsys):
    rng = random.Random(99)
    checked = 0
    for _ in range(1000):
        traces = []
        for t in range(rng.randint(1, 5)):
            flags = [rng.random() < 0.3 for _ in range(rng.randint(1, 10))]
            nodes = [
                CandidateNode(node_id=i, source="c", hidden_result=f)
                for i, f in enumerate(flags, start=1)
            ]
            traces.append(SearchTrace(task_id=f"t{t}", strategy=StrategyKind.BON,
                                      nodes=nodes, budget_k=len(nodes)))
        j = rng.randint(1, 12)
        oracle = sum(
            any(n.hidden_result for n in tr.nodes if n.node_id <= j) for tr in traces
        ) / len(traces)
        assert pass_at_k(traces, j) == oracle
        checked += 1
    assert checked == 1000

    # Interval half widths against a high-precision quantile oracle,
    # including the two-sample case (t = 12.7062...).
    assert t_quantile_oracle(0.975, 1) == pytest.approx(12.706204736, abs=1e-8)
    for values in ([0.1, 0.9], [0.2, 0.5, 0.8], [0.1, 0.2, 0.3, 0.7, 0.9]):
        n = len(values)
        mean, half = confidence_interval(values)
        m = sum(values) / n
        s = math.sqrt(sum((v - m) ** 2 for v in values) / (n - 1))
        assert mean == pytest.approx(m, abs=1e-12)
        assert half == pytest.approx(t_quantile_oracle(0.975, n - 1) * s / math.sqrt(n), abs=1e-9)
    passline(capsys, "metrics: Pass@k equals the brute-force recount on 1000 random trace "
                     "sets; intervals match the independent quantile oracle to 1e-9")


def test_depth_tables_exact_and_sfs_depth_profile(capsys):
    # Planted distribution: exact counts and two-decimal percentages.
    def planted(task_id, depths, correct_id):
        nodes, latest = [], {}
        for i, d in enumerate(depths, start=1):
            nodes.append(CandidateNode(
                node_id=i, source="c", parent=latest.get(d - 1), depth=d,
                hidden_result=(i == correct_id),
            ))
            latest[d] = i
        return SearchTrace(task_id=task_id, strategy=StrategyKind.SFS, nodes=nodes, budget_k=len(nodes))

    traces = [
        planted("a", [1], 1),
        planted("b", [1, 2], 2),
        planted("c", [1, 2], 2),
        planted("d", [1, 2, 3], 3),
        planted("e", [1], 0),  # unsolved
    ]
    table = first_correct_depth_table(traces)
    assert table.counts == {1: 1, 2: 2, 3: 1}
    assert table.excluded == 1
    assert table.percentages() == {1: 25.0, 2: 50.0, 3: 25.0}

    # Mock scattered-search runs solve mostly at depth 1 (shallow bias).
    sfs_traces = []
    for i, solve_at in enumerate([1, 2, 3, 4, 5, 7]):
        init = [1.0 if g == solve_at else 0.0 for g in range(1, 6)]
        refine = [1.0 if g + 5 == solve_at else 0.0 for g in range(1, 12)]
        gw = make_search_gateway(f"s{i}", init, refine, n_tests=2)
        cfg = StrategyConfig(kind=StrategyKind.SFS, budget_k=16, n_init=5)
        trace = run_strategy(Task(task_id=f"s{i}", prompt="p",
                                  hidden_tests=[TestCase("h", "assert True")]),
                             cfg, gw, FakeSandbox())
        for node in trace.nodes:
            node.hidden_result = node.passed_all_validation
        sfs_traces.append(trace)
    profile = first_correct_depth_table(sfs_traces)
    assert profile.excluded == 0
    share = profile.percentages()
    assert share.get(1, 0.0) >= share.get(2, 0.0)
    passline(capsys, f"depth tables: planted distribution recovered exactly; mock "
                     f"scattered-search first-correct mass is depth-biased ({share})")


def test_diversity_matrix_properties_and_oracle(capsys):
    v = np.array([2.0, 1.0, 0.0])
    assert np.allclose(diversity_matrix([[v, v, v], [v, v]]), 1.0)

    ortho = diversity_matrix([[np.array([1.0, 0.0])], [np.array([0.0, 1.0])]])
    assert ortho[0, 1] == pytest.approx(0.0, abs=1e-15)

    rng = random.Random(31)
    for _ in range(50):
        steps = [
            [[rng.uniform(-1, 1) for _ in range(5)] for _ in range(rng.randint(1, 4))]
            for _ in range(rng.randint(1, 4))
        ]
        matrix = diversity_matrix([[np.array(u) for u in s] for s in steps])
        assert np.allclose(matrix, matrix.T)
        for i, si in enumerate(steps):
            for j, sj in enumerate(steps):
                total, count = 0.0, 0
                for a_idx, a in enumerate(si):
                    for b_idx, b in enumerate(sj):
                        if i == j and a_idx == b_idx:
                            continue
                        na = math.sqrt(sum(x * x for x in a))
                        nb = math.sqrt(sum(x * x for x in b))
                        total += sum(x * y for x, y in zip(a, b)) / (na * nb)
                        count += 1
                oracle = 1.0 if count == 0 else total / count
                assert matrix[i, j] == pytest.approx(oracle, abs=1e-12)
    passline(capsys, "diversity: identical directions give all-ones, orthogonal steps give "
                     "0 off-diagonal, symmetric, matches the quadratic oracle to 1e-12")
