"""Applies an injection to a checkout, compiles and runs it, and
classifies the outcome.

The checkout is mutated in place and restored byte-exactly afterwards, so
buggy and fixed trees stay pristine between candidates. Failure parsing is
rule-table driven because unit-framework output formats differ per project.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import signal
import subprocess
import time
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, PatchConflict, RunnerError
from .injector import (
    DEFAULT_ASSERTION_IMPORT,
    DEFAULT_SOURCE_GLOBS,
    DEFAULT_TEST_ANNOTATION_IMPORT,
    InjectionPlan,
)
from .lexer import DEFAULT_TEST_GLOBS


@dataclass
class ParseRule:
    """One ordered rule mapping runner output to a failure type/message."""

    id: str
    pattern: str
    type_group: str | None = "type"
    type_const: str | None = None
    message_group: str | None = "message"
    flags: int = re.MULTILINE

    def match(self, output: str) -> tuple[str, str] | None:
        found = re.search(self.pattern, output, self.flags)
        if not found:
            return None
        if self.type_const is not None:
            failure_type = self.type_const
        else:
            failure_type = found.group(self.type_group) or ""
        message = ""
        if self.message_group is not None:
            try:
                message = found.group(self.message_group) or ""
            except (IndexError, re.error):
                message = ""
        return failure_type, message


DEFAULT_PARSE_RULES = [
    ParseRule(
        id="qualified-throwable",
        pattern=r"(?P<type>(?:[a-z][\w$]*\.)+[A-Z][\w$]*(?:Error|Exception|Failure))"
                r"(?::[ \t](?P<message>[^\n]*))?",
    ),
    ParseRule(
        id="simple-throwable",
        pattern=r"(?P<type>\b[A-Z][\w$]*(?:Error|Exception))\b"
                r"(?::[ \t](?P<message>[^\n]*))?",
    ),
    ParseRule(
        id="build-summary",
        pattern=r"^(?P<message>Tests run: \d+,\s*Failures: [1-9]\d*.*)$",
        type_group=None,
        type_const="TestFailure",
    ),
]


@dataclass
class ProjectConfig:
    """Where a project lives and how to compile and run its tests."""

    project_id: str
    buggy_root: Path
    fixed_root: Path | None = None
    test_source_globs: list[str] = field(default_factory=lambda: list(DEFAULT_TEST_GLOBS))
    source_globs: list[str] = field(default_factory=lambda: list(DEFAULT_SOURCE_GLOBS))
    compile_command: str = ""
    run_test_command: str = ""
    timeout_seconds: int = 180
    failure_parse_rules: list[ParseRule] = field(default_factory=lambda: list(DEFAULT_PARSE_RULES))
    framework: str = "annotation-style"  # or "inheritance-style"
    assertion_import: str = DEFAULT_ASSERTION_IMPORT
    test_annotation_import: str = DEFAULT_TEST_ANNOTATION_IMPORT

    def root_for(self, version: str) -> Path:
        if version == "buggy":
            return self.buggy_root
        if version == "fixed":
            if self.fixed_root is None:
                raise ConfigError(f"project {self.project_id} has no fixed_root")
            return self.fixed_root
        raise ValueError(f"unknown version: {version}")

    @classmethod
    def from_dict(cls, record: dict, base_dir: Path | None = None) -> "ProjectConfig":
        base = base_dir or Path(".")
        rules = [
            ParseRule(
                id=r["id"],
                pattern=r["pattern"],
                type_group=r.get("type_group", "type" if "type_const" not in r else None),
                type_const=r.get("type_const"),
                message_group=r.get("message_group", "message"),
            )
            for r in record["failure_parse_rules"]
        ] if "failure_parse_rules" in record else list(DEFAULT_PARSE_RULES)
        return cls(
            project_id=record["project_id"],
            buggy_root=base / record["buggy_root"],
            fixed_root=(base / record["fixed_root"]) if record.get("fixed_root") else None,
            test_source_globs=record.get("test_source_globs", list(DEFAULT_TEST_GLOBS)),
            source_globs=record.get("source_globs", list(DEFAULT_SOURCE_GLOBS)),
            compile_command=record.get("compile_command", ""),
            run_test_command=record.get("run_test_command", ""),
            timeout_seconds=record.get("timeout_seconds", 180),
            failure_parse_rules=rules,
            framework=record.get("framework", "annotation-style"),
            assertion_import=record.get("assertion_import", DEFAULT_ASSERTION_IMPORT),
            test_annotation_import=record.get(
                "test_annotation_import", DEFAULT_TEST_ANNOTATION_IMPORT
            ),
        )


def load_project_config(path: Path | str) -> ProjectConfig:
    path = Path(path)
    record = json.loads(path.read_text(encoding="utf-8"))
    return ProjectConfig.from_dict(record, base_dir=path.parent)


@dataclass
class ExecutionOutcome:
    bug_id: str
    sample_index: int
    version: str  # buggy | fixed
    status: str   # pass | fail | compile_error | timeout | runner_error
    failure_type: str | None = None
    failure_message: str | None = None
    raw_output_digest: str = ""
    duration_ms: int = 0
    matched_rule: str | None = None

    def to_dict(self) -> dict:
        return {
            "bug_id": self.bug_id,
            "sample_index": self.sample_index,
            "version": self.version,
            "status": self.status,
            "failure_type": self.failure_type,
            "failure_message": self.failure_message,
            "raw_output_digest": self.raw_output_digest,
            "duration_ms": self.duration_ms,
            "matched_rule": self.matched_rule,
        }

    @classmethod
    def from_dict(cls, record: dict) -> "ExecutionOutcome":
        return cls(**{k: record[k] for k in cls.__dataclass_fields__ if k in record})


def _run_shell(command: str, cwd: Path, timeout: int) -> tuple[int | None, str]:
    """Run via the shell; on timeout kill the whole process group."""
    proc = subprocess.Popen(
        command,
        shell=True,
        cwd=cwd,
        stdout=subprocess.PIPE,
        stderr=subprocess.STDOUT,
        start_new_session=True,
    )
    try:
        out, _ = proc.communicate(timeout=timeout)
    except subprocess.TimeoutExpired:
        try:
            os.killpg(os.getpgid(proc.pid), signal.SIGKILL)
        except (ProcessLookupError, PermissionError):
            proc.kill()
        proc.communicate()
        return None, ""
    return proc.returncode, out.decode("utf-8", errors="replace")


def _last_line(output: str) -> str:
    for line in reversed(output.splitlines()):
        if line.strip():
            return line.strip()
    return ""


def execute(plan: InjectionPlan, project: ProjectConfig, version: str) -> ExecutionOutcome:
    """Apply plan, compile, run, classify, and restore the checkout."""
    if plan.status != "planned":
        raise ValueError(f"cannot execute a {plan.status} plan")
    root = project.root_for(version)
    target = root / plan.file_rel_path
    if not target.exists():
        raise PatchConflict(f"{target} does not exist")
    original_bytes = target.read_bytes()
    if original_bytes.decode("utf-8", errors="replace") != plan.original_file_content:
        raise PatchConflict(f"{target} differs from the content the plan was made against")

    started = time.monotonic()
    outputs: list[str] = []

    def outcome(status: str, failure_type=None, failure_message=None, rule=None):
        combined = "\n".join(outputs)
        return ExecutionOutcome(
            bug_id=plan.bug_id,
            sample_index=plan.sample_index,
            version=version,
            status=status,
            failure_type=failure_type,
            failure_message=failure_message,
            raw_output_digest=hashlib.sha256(combined.encode("utf-8")).hexdigest(),
            duration_ms=int((time.monotonic() - started) * 1000),
            matched_rule=rule,
        )

    target.write_bytes(plan.modified_file_content.encode("utf-8"))
    try:
        if project.compile_command:
            code, out = _run_shell(project.compile_command, root, project.timeout_seconds)
            outputs.append(out)
            if code is None:
                return outcome("timeout")
            if code == 127:
                raise RunnerError(f"compile command not found: {project.compile_command}")
            if code != 0:
                return outcome("compile_error", failure_message=_last_line(out))

        if not project.run_test_command:
            raise ConfigError(f"project {project.project_id} has no run_test_command")
        command = project.run_test_command.format_map({
            "class": plan.class_qualified_name,
            "method": plan.final_method_name,
        })
        code, out = _run_shell(command, root, project.timeout_seconds)
        outputs.append(out)
        if code is None:
            return outcome("timeout")
        if code == 127:
            raise RunnerError(f"test command not found: {command}")
        if code == 0:
            return outcome("pass")
        for rule in project.failure_parse_rules:
            parsed = rule.match(out)
            if parsed:
                return outcome("fail", parsed[0], parsed[1], rule.id)
        return outcome("fail", "UnknownFailure", _last_line(out))
    finally:
        target.write_bytes(original_bytes)


def classify_fib(outcome_buggy: ExecutionOutcome) -> bool:
    """Fails-in-buggy: compiled and failed on the buggy version."""
    if outcome_buggy.version != "buggy":
        raise ValueError("FIB classification needs the buggy-version outcome")
    return outcome_buggy.status == "fail"


def classify_brt(outcome_buggy: ExecutionOutcome, outcome_fixed: ExecutionOutcome) -> bool:
    """Bug-reproducing: fails on the buggy version, passes on the fixed one."""
    return outcome_buggy.status == "fail" and outcome_fixed.status == "pass"
