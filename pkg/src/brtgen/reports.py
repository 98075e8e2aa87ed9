"""Bug reports, few-shot example pairs, and dataset manifests.

Reports are plain JSON objects on disk (one per file) so datasets can be
assembled and diffed by hand; remote issues can be pulled straight from a
tracker's REST API.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field
from pathlib import Path

import requests

from .errors import (
    HttpError,
    MalformedRecord,
    MissingField,
    RateLimited,
    UnbalancedBraces,
    UnresolvedProject,
    UnsupportedTracker,
)
from . import lexer

TRACKER_TOKEN_ENV = "BRT_TRACKER_TOKEN"


@dataclass
class BugReport:
    """A natural-language bug report: the pipeline's input."""

    id: str
    title: str
    description: str
    project_id: str
    stack_trace: str | None = None
    is_crash: bool = False
    source_url: str | None = None

    def __post_init__(self):
        if not self.id:
            raise MissingField("id")
        if not self.title:
            raise MissingField("title")
        if self.stack_trace and not self.is_crash:
            raise MalformedRecord(
                f"report {self.id}: stack_trace present but is_crash is false"
            )

    @property
    def text(self) -> str:
        """Title, description and stack trace joined for matching heuristics."""
        parts = [self.title, self.description]
        if self.stack_trace:
            parts.append(self.stack_trace)
        return "\n".join(parts)

    def to_dict(self) -> dict:
        record = {
            "id": self.id,
            "title": self.title,
            "description": self.description,
            "project_id": self.project_id,
            "is_crash": self.is_crash,
        }
        if self.stack_trace is not None:
            record["stack_trace"] = self.stack_trace
        if self.source_url is not None:
            record["source_url"] = self.source_url
        return record

    @classmethod
    def from_dict(cls, record: dict) -> "BugReport":
        for key in ("id", "title", "project_id"):
            if not record.get(key):
                raise MissingField(key)
        stack_trace = record.get("stack_trace")
        is_crash = record.get("is_crash")
        if is_crash is None:
            is_crash = stack_trace is not None
        return cls(
            id=record["id"],
            title=record["title"],
            description=record.get("description", ""),
            project_id=record["project_id"],
            stack_trace=stack_trace,
            is_crash=bool(is_crash),
            source_url=record.get("source_url"),
        )


def load_report(path: Path | str) -> BugReport:
    """Load and validate one report record; unknown fields are ignored."""
    try:
        record = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedRecord(f"{path}: {exc}") from exc
    if not isinstance(record, dict):
        raise MalformedRecord(f"{path}: expected a JSON object")
    return BugReport.from_dict(record)


@dataclass
class ExampleEntry:
    """A report/test pair used as a few-shot example in prompts."""

    report: BugReport
    reproducing_test: str

    def __post_init__(self):
        if not lexer.braces_balanced(self.reproducing_test):
            raise UnbalancedBraces(
                f"example test for {self.report.id} does not brace-balance"
            )


@dataclass
class DatasetManifest:
    """The set of reports an evaluation run covers, plus project configs."""

    dataset_id: str
    reports: list[BugReport]
    project_configs: dict[str, Path] = field(default_factory=dict)

    def validate(self) -> None:
        seen: set[str] = set()
        for report in self.reports:
            if report.id in seen:
                raise MalformedRecord(f"duplicate report id: {report.id}")
            seen.add(report.id)
            if report.project_id not in self.project_configs:
                raise UnresolvedProject(
                    f"report {report.id}: unknown project {report.project_id}"
                )


def load_manifest(path: Path | str) -> DatasetManifest:
    """Load a manifest; report and project paths are relative to it."""
    path = Path(path)
    try:
        record = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedRecord(f"{path}: {exc}") from exc
    base = path.parent
    reports = [load_report(base / p) for p in record.get("reports", [])]
    configs = {
        project: base / p
        for project, p in record.get("project_configs", {}).items()
    }
    manifest = DatasetManifest(
        dataset_id=record.get("dataset_id", path.stem),
        reports=reports,
        project_configs=configs,
    )
    manifest.validate()
    return manifest


_API_ISSUE_URL = re.compile(
    r"^(?P<base>https?://[^/]+)/repos/(?P<owner>[^/]+)/(?P<repo>[^/]+)/issues/(?P<number>\d+)/?$"
)
_HTML_ISSUE_URL = re.compile(
    r"^https?://github\.com/(?P<owner>[^/]+)/(?P<repo>[^/]+)/issues/(?P<number>\d+)/?$"
)


def fetch_remote_report(issue_url: str, auth_token: str | None = None) -> BugReport:
    """Fetch an issue from a REST tracker and map it onto a BugReport.

    Only the issue title and body are consumed; comments are never pulled.
    """
    match = _API_ISSUE_URL.match(issue_url)
    if match:
        request_url = issue_url
    else:
        match = _HTML_ISSUE_URL.match(issue_url)
        if not match:
            raise UnsupportedTracker(issue_url)
        request_url = (
            "https://api.github.com/repos/"
            f"{match['owner']}/{match['repo']}/issues/{match['number']}"
        )

    token = auth_token or os.environ.get(TRACKER_TOKEN_ENV)
    headers = {"Accept": "application/json"}
    if token:
        headers["Authorization"] = f"Bearer {token}"
    try:
        response = requests.get(request_url, headers=headers, timeout=30)
    except requests.RequestException as exc:
        raise HttpError(0, str(exc)) from exc

    if response.status_code == 429 or (
        response.status_code == 403 and "Retry-After" in response.headers
    ):
        retry_after = response.headers.get("Retry-After")
        raise RateLimited(float(retry_after) if retry_after else None)
    if response.status_code != 200:
        raise HttpError(response.status_code)

    try:
        data = response.json()
    except ValueError as exc:
        raise MalformedRecord(f"{request_url}: not JSON") from exc
    if not data.get("title"):
        raise MissingField("title")

    repo = f"{match['owner']}/{match['repo']}"
    return BugReport(
        id=f"{repo}#{match['number']}",
        title=data["title"],
        description=data.get("body") or "",
        project_id=repo,
        source_url=data.get("html_url") or issue_url,
    )
