"""Executing injected tests against a checkout and classifying outcomes."""

import hashlib
import json
from pathlib import Path

import pytest

from helpers import make_candidate, make_outcome
from brtgen.errors import PatchConflict, RunnerError
from brtgen.injector import find_best_matching_class, inject
from brtgen.lexer import index_test_classes
from brtgen.runner import (
    DEFAULT_PARSE_RULES,
    ExecutionOutcome,
    ProjectConfig,
    classify_brt,
    classify_fib,
    execute,
)

CANDIDATE = (
    "public void testProbe() {\n"
    "    assertTrue(new Gadget().spin() > 0);\n"
    "}"
)


def _make_project(tmp_path: Path, transcripts: dict) -> ProjectConfig:
    test_dir = tmp_path / "src" / "test" / "java" / "p"
    test_dir.mkdir(parents=True)
    (test_dir / "GadgetTest.java").write_text(
        "package p;\n\n"
        "import junit.framework.TestCase;\n\n"
        "public class GadgetTest extends TestCase {\n"
        "    public void testSpin() {\n"
        "        assertTrue(new Gadget().spin() >= 0);\n"
        "    }\n"
        "}\n"
    )
    (tmp_path / "transcripts.json").write_text(json.dumps(transcripts))
    return ProjectConfig(
        project_id="gadget",
        buggy_root=tmp_path,
        compile_command="python3 -m brtgen.mock_adapter transcripts.json compile",
        run_test_command="python3 -m brtgen.mock_adapter transcripts.json run {class} {method}",
        timeout_seconds=30,
        framework="inheritance-style",
    )


def _plan(project: ProjectConfig, method_text: str = CANDIDATE):
    classes = index_test_classes(project.buggy_root, project.test_source_globs)
    candidate = make_candidate(method_text, sample_index=0)
    match = find_best_matching_class(candidate, classes)
    return inject(candidate, match, [], project_root=project.buggy_root)


def _tree_digest(root: Path) -> str:
    digest = hashlib.sha256()
    for path in sorted(root.rglob("*")):
        if path.is_file():
            digest.update(str(path.relative_to(root)).encode())
            digest.update(path.read_bytes())
    return digest.hexdigest()


def test_pass_transcript(tmp_path):
    project = _make_project(tmp_path, {
        "runs": {"p.GadgetTest::testProbe": {"exit_code": 0, "stdout": "OK (1 test)"}},
    })
    outcome = execute(_plan(project), project, "buggy")
    assert outcome.status == "pass"
    assert outcome.failure_type is None
    assert outcome.duration_ms >= 0


def test_fail_parses_type_and_message(tmp_path):
    project = _make_project(tmp_path, {
        "runs": {"p.GadgetTest::testProbe": {
            "exit_code": 1,
            "stdout": ".F\njunit.framework.AssertionFailedError: expected:<false> but was:<true>\n\tat p.GadgetTest.testProbe",
        }},
    })
    outcome = execute(_plan(project), project, "buggy")
    assert outcome.status == "fail"
    assert outcome.failure_type == "junit.framework.AssertionFailedError"
    assert outcome.failure_message == "expected:<false> but was:<true>"
    assert outcome.matched_rule == "qualified-throwable"


def test_compile_error_classification(tmp_path):
    project = _make_project(tmp_path, {
        "compile_error_markers": ["Gadget"],
        "runs": {},
    })
    outcome = execute(_plan(project), project, "buggy")
    assert outcome.status == "compile_error"
    assert "cannot find symbol" in outcome.failure_message


def test_unmatched_failure_gets_fallback_type(tmp_path):
    project = _make_project(tmp_path, {
        "runs": {"p.GadgetTest::testProbe": {"exit_code": 2, "stdout": "something odd happened"}},
    })
    outcome = execute(_plan(project), project, "buggy")
    assert outcome.status == "fail"
    assert outcome.failure_type == "UnknownFailure"
    assert outcome.failure_message == "something odd happened"


def test_timeout_kills_and_classifies(tmp_path):
    project = _make_project(tmp_path, {"runs": {}})
    project.run_test_command = "python3 -c 'import time; time.sleep(30)'"
    project.timeout_seconds = 1
    outcome = execute(_plan(project), project, "buggy")
    assert outcome.status == "timeout"
    assert not classify_fib(outcome)


def test_runner_error_on_missing_command(tmp_path):
    project = _make_project(tmp_path, {"runs": {}})
    project.run_test_command = "definitely-not-a-command-xyz {class} {method}"
    with pytest.raises(RunnerError):
        execute(_plan(project), project, "buggy")


def test_checkout_restored_byte_exact(tmp_path):
    project = _make_project(tmp_path, {
        "runs": {"p.GadgetTest::testProbe": {"exit_code": 1, "stdout": "java.lang.AssertionError: x"}},
    })
    plan = _plan(project)
    before = _tree_digest(tmp_path)
    execute(plan, project, "buggy")
    assert _tree_digest(tmp_path) == before

    project.compile_command = "exit 1"  # even when compilation fails
    execute(plan, project, "buggy")
    assert _tree_digest(tmp_path) == before


def test_patch_conflict_when_checkout_drifts(tmp_path):
    project = _make_project(tmp_path, {"runs": {}})
    plan = _plan(project)
    target = tmp_path / plan.file_rel_path
    target.write_text(target.read_text() + "\n// drifted\n")
    with pytest.raises(PatchConflict):
        execute(plan, project, "buggy")


def test_outcome_determinism_with_mock_adapter(tmp_path):
    project = _make_project(tmp_path, {
        "runs": {"p.GadgetTest::testProbe": {"exit_code": 1, "stdout": "java.lang.AssertionError: boom"}},
    })
    plan = _plan(project)
    first = execute(plan, project, "buggy")
    second = execute(plan, project, "buggy")
    for field in ("status", "failure_type", "failure_message", "raw_output_digest", "matched_rule"):
        assert getattr(first, field) == getattr(second, field)


def test_fixed_root_required_for_fixed_version(tmp_path):
    project = _make_project(tmp_path, {"runs": {}})
    with pytest.raises(Exception):
        project.root_for("fixed")


def test_classify_fib():
    assert classify_fib(make_outcome("T", status="fail"))
    assert not classify_fib(make_outcome("", status="pass"))
    assert not classify_fib(make_outcome("", status="compile_error"))
    assert not classify_fib(make_outcome("", status="timeout"))
    with pytest.raises(ValueError):
        classify_fib(make_outcome("T", status="fail", version="fixed"))


def test_classify_brt():
    fail = make_outcome("T", status="fail")
    fixed_pass = make_outcome("", status="pass", version="fixed")
    fixed_fail = make_outcome("T", status="fail", version="fixed")
    buggy_pass = make_outcome("", status="pass")
    assert classify_brt(fail, fixed_pass)
    assert not classify_brt(fail, fixed_fail)
    assert not classify_brt(buggy_pass, fixed_pass)


def test_brt_implies_fib():
    import random
    rng = random.Random(3)
    statuses = ["pass", "fail", "compile_error", "timeout"]
    for _ in range(100):
        buggy = make_outcome("T", status=rng.choice(statuses))
        fixed = make_outcome("T", status=rng.choice(statuses), version="fixed")
        if classify_brt(buggy, fixed):
            assert classify_fib(buggy)


def test_default_rules_cover_common_shapes():
    cases = {
        "junit.framework.AssertionFailedError: expected:<1> but was:<2>":
            ("junit.framework.AssertionFailedError", "expected:<1> but was:<2>"),
        "Exception in thread \"main\" java.lang.NullPointerException\n\tat A.b":
            ("java.lang.NullPointerException", ""),
        "AssertionError: values differ":
            ("AssertionError", "values differ"),
        "Tests run: 3, Failures: 1, Errors: 0":
            ("TestFailure", "Tests run: 3, Failures: 1, Errors: 0"),
    }
    for output, expected in cases.items():
        for rule in DEFAULT_PARSE_RULES:
            parsed = rule.match(output)
            if parsed:
                assert parsed == expected
                break
        else:
            pytest.fail(f"no rule matched {output!r}")


def test_outcome_round_trip():
    outcome = ExecutionOutcome(
        bug_id="b", sample_index=2, version="buggy", status="fail",
        failure_type="T", failure_message="m", raw_output_digest="d",
        duration_ms=5, matched_rule="r",
    )
    assert ExecutionOutcome.from_dict(outcome.to_dict()) == outcome
