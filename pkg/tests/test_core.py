import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from refine_search.core import (
    CandidateNode,
    SearchTrace,
    SharedInfoEntry,
    SharedInformation,
    StrategyKind,
    Task,
    TestCase,
    TestKind,
    TextualDirection,
    first_correct_depth,
    load_tasks,
    max_depth,
    task_from_record,
)


def node(node_id, parent=None, depth=1, score=0.0, passed=False, hidden=None):
    return CandidateNode(
        node_id=node_id,
        source=f"code-{node_id}",
        parent=parent,
        depth=depth,
        validation_score=score,
        passed_all_validation=passed,
        hidden_result=hidden,
    )


class TestTask:
    def test_duplicate_test_ids_rejected(self):
        with pytest.raises(ValueError, match="duplicate test_id"):
            Task(
                task_id="t",
                prompt="p",
                hidden_tests=[TestCase("a", "x"), TestCase("a", "y")],
            )

    def test_validation_payload_must_differ_from_hidden(self):
        with pytest.raises(ValueError, match="duplicates a hidden test"):
            Task(
                task_id="t",
                prompt="p",
                hidden_tests=[TestCase("h", "assert f() == 1")],
                validation_tests=[TestCase("v", "assert f() == 1")],
            )

    def test_humaneval_record_appends_check_call(self):
        task = task_from_record(
            {
                "task_id": "HumanEval/0",
                "prompt": "def add(a, b):",
                "test": "def check(fn):\n    assert fn(1, 2) == 3",
                "entry_point": "add",
            }
        )
        assert task.entry_point == "add"
        assert len(task.hidden_tests) == 1
        assert task.hidden_tests[0].payload.endswith("check(add)\n")

    def test_mbpp_record_one_test_per_list_entry(self):
        task = task_from_record(
            {"task_id": 11, "text": "write add", "test_list": ["assert add(1,1)==2", "assert add(2,2)==4"]}
        )
        assert task.task_id == "11"
        assert [t.payload for t in task.hidden_tests] == ["assert add(1,1)==2", "assert add(2,2)==4"]

    def test_load_tasks_rejects_unknown_shape(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text(json.dumps({"task_id": "x", "question": "?"}) + "\n")
        with pytest.raises(ValueError, match="unrecognized dataset record"):
            load_tasks(path)


class TestDirectionsAndSharedInfo:
    def test_feedback_requires_used(self):
        with pytest.raises(ValueError, match="feedback requires"):
            TextualDirection(text="d", feedback="went well", used=False)

    def test_appended_preserves_original(self):
        info = SharedInformation.empty()
        info2 = info.appended(SharedInfoEntry("try memoization", "score improved", 0.25))
        assert info.entries == ()
        assert len(info2.entries) == 1
        assert "try memoization" in info2.rendered

    @given(st.lists(st.text(min_size=1, max_size=20), min_size=1, max_size=6))
    def test_rendered_mentions_every_direction(self, texts):
        info = SharedInformation.empty()
        for t in texts:
            info = info.appended(SharedInfoEntry(t, "ok", 0.0))
        assert all(t in info.rendered for t in texts)
        assert len(info.entries) == len(texts)


class TestCandidateNode:
    def test_depth_one_iff_no_parent(self):
        with pytest.raises(ValueError):
            CandidateNode(node_id=1, source="c", parent=None, depth=2)
        with pytest.raises(ValueError):
            CandidateNode(node_id=2, source="c", parent=1, depth=1)

    def test_score_bounds(self):
        with pytest.raises(ValueError):
            CandidateNode(node_id=1, source="c", validation_score=1.5)

    def test_roundtrip_with_direction(self):
        n = CandidateNode(
            node_id=3,
            source="code",
            parent=1,
            depth=2,
            direction_used=TextualDirection("simplify", feedback="better", used=True),
            validation_score=0.5,
        )
        assert CandidateNode.from_dict(n.to_dict()) == n


class TestSearchTrace:
    def make_trace(self, nodes, **kw):
        trace = SearchTrace(task_id="t/1", strategy=StrategyKind.LINEAR, nodes=nodes, **kw)
        return trace

    def test_validate_budget(self):
        trace = self.make_trace([node(i) for i in range(1, 4)], budget_k=2)
        with pytest.raises(ValueError, match="exceeds budget_k"):
            trace.validate()

    def test_validate_monotone_ids(self):
        trace = self.make_trace([node(2), node(1)])
        with pytest.raises(ValueError, match="strictly increasing"):
            trace.validate()

    def test_validate_parent_depth(self):
        bad = self.make_trace([node(1), node(2, parent=1, depth=3)])
        with pytest.raises(ValueError, match="depth inconsistent"):
            bad.validate()

    def test_validate_unknown_parent(self):
        bad = self.make_trace([node(2, parent=1, depth=2)])
        with pytest.raises(ValueError, match="unknown parent"):
            bad.validate()

    def test_terminated_early_needs_passing_tail_or_full_budget(self):
        bad = self.make_trace([node(1)], terminated_early=True, budget_k=4)
        with pytest.raises(ValueError, match="terminated_early"):
            bad.validate()
        ok = self.make_trace([node(1, passed=True, score=1.0)], terminated_early=True, budget_k=4)
        ok.validate()

    def test_roundtrip_and_file_name(self, tmp_path):
        trace = self.make_trace([node(1), node(2, parent=1, depth=2, score=1.0, passed=True)],
                                terminated_early=True, run_seed=7)
        trace.validate()
        path = tmp_path / trace.file_name()
        trace.save(path)
        assert path.name == "t_1.linear.7.trace.json"
        assert SearchTrace.load(path) == trace

    def test_first_correct_depth_uses_generation_order(self):
        trace = self.make_trace([node(1), node(2, parent=1, depth=2), node(3)])
        assert first_correct_depth(trace, lambda nid: nid >= 2) == 2
        assert first_correct_depth(trace, lambda nid: nid == 3) == 1
        assert first_correct_depth(trace, lambda nid: False) is None

    def test_max_depth_empty_trace_errors(self):
        with pytest.raises(ValueError, match="empty trace"):
            max_depth(self.make_trace([]))

    def test_io_pair_kind_roundtrips(self):
        t = TestCase("io1", '{"stdin": "2\\n", "stdout": "4\\n"}', kind=TestKind.IO_PAIR)
        assert TestCase.from_dict(t.to_dict()) == t
