"""Shared helpers for the test suite."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from brtgen import lexer
from brtgen.lexer import TestClassInfo, index_test_classes, method_spans, parse_test_classes
from brtgen.llm import CandidateTest
from brtgen.runner import ExecutionOutcome


def make_candidate(
    method_text: str, sample_index: int = 0, bug_id: str = "bug-1"
) -> CandidateTest:
    return CandidateTest(
        bug_id=bug_id,
        sample_index=sample_index,
        raw_completion=method_text,
        method_text=method_text,
        token_count=len(lexer.lex(method_text)),
        prompt_id="prompt-0",
    )


def make_outcome(
    failure_type: str,
    failure_message: str = "",
    sample_index: int = 0,
    status: str = "fail",
    version: str = "buggy",
    bug_id: str = "bug-1",
) -> ExecutionOutcome:
    return ExecutionOutcome(
        bug_id=bug_id,
        sample_index=sample_index,
        version=version,
        status=status,
        failure_type=failure_type if status == "fail" else None,
        failure_message=failure_message if status == "fail" else None,
    )


def cut_test_method(info: TestClassInfo, name: str) -> tuple[str, str]:
    """Remove the named test from a class; returns (method_text, reduced_source).

    A directly preceding @Test annotation is removed along with the method.
    """
    span = next(s for s in method_spans(info.source) if s.name == name)
    start = span.start
    head = info.source[:start]
    stripped = head.rstrip()
    if stripped.endswith("@Test"):
        start = len(stripped) - len("@Test")
    return info.source[span.start:span.end], info.source[:start] + info.source[span.end:]


def self_placement_cases(project_root: Path):
    """Yield (origin_class_name, test_name, method_text, classes) where the
    origin class no longer contains the method."""
    classes = index_test_classes(project_root)
    for info in classes:
        test_names = [s.name for s in method_spans(info.source) if s.name.startswith("test")]
        for name in test_names:
            method_text, reduced = cut_test_method(info, name)
            rebuilt = parse_test_classes(info.file_path, reduced)
            others = [c for c in classes if c.file_path != info.file_path]
            yield info.class_name, name, method_text, others + rebuilt


class StubHandler(BaseHTTPRequestHandler):
    """Serves canned JSON responses and records requests."""

    def _respond(self):
        self.server.requests.append({
            "path": self.path,
            "method": self.command,
            "headers": dict(self.headers),
        })
        status, payload, headers = self.server.responses[
            min(len(self.server.requests) - 1, len(self.server.responses) - 1)
        ]
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        for key, value in headers.items():
            self.send_header(key, value)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    do_GET = _respond
    do_POST = _respond

    def log_message(self, *args):
        pass


class StubServer:
    """Local HTTP stub; `responses` is a list of (status, payload, headers)
    served in request order (the last entry repeats)."""

    def __init__(self, responses):
        self.server = ThreadingHTTPServer(("127.0.0.1", 0), StubHandler)
        self.server.responses = responses
        self.server.requests = []
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)

    def __enter__(self):
        self.thread.start()
        return self

    def __exit__(self, *exc):
        self.server.shutdown()
        self.server.server_close()

    @property
    def url(self) -> str:
        host, port = self.server.server_address
        return f"http://{host}:{port}"

    @property
    def requests(self):
        return self.server.requests
