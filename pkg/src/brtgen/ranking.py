"""Selection and ranking of failing candidates.

Failing tests are clustered by failure output (type plus normalized
message); nothing is suggested unless the largest cluster strictly exceeds
the agreement threshold. Suggestions then interleave clusters round-robin
so early ranks cover diverse failure behaviors.

Every sort bottoms out at sample_index, so identical inputs always produce
identical rankings.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from . import lexer
from .errors import NotSelected
from .llm import CandidateTest
from .reports import BugReport
from .runner import ExecutionOutcome

_TIMESTAMP_PATTERNS = (
    re.compile(r"\b\d{4}-\d{2}-\d{2}[T ]\d{2}:\d{2}:\d{2}(?:\.\d+)?\b"),
    re.compile(r"\b\d{2}:\d{2}:\d{2}(?:\.\d+)?\b"),
    re.compile(r"\b\d{10,13}\b"),
)
_ADDRESS_PATTERNS = (
    re.compile(r"\b0x[0-9a-fA-F]+\b"),
    re.compile(r"@[0-9a-fA-F]{4,}\b"),
)


def normalize_message(message: str) -> str:
    return re.sub(r"\s+", " ", message).strip()


def abstract_message(message: str) -> str:
    """Blank out run-dependent fragments (timestamps, object addresses)."""
    for pattern in _TIMESTAMP_PATTERNS:
        message = pattern.sub("<timestamp>", message)
    for pattern in _ADDRESS_PATTERNS:
        message = pattern.sub("<addr>", message)
    return message


@dataclass(frozen=True)
class FailureKey:
    """Cluster identity: same failure type and same normalized message."""

    failure_type: str
    normalized_message: str

    @classmethod
    def from_outcome(cls, outcome: ExecutionOutcome, abstract: bool = False) -> "FailureKey":
        message = outcome.failure_message or ""
        if abstract:
            message = abstract_message(message)
        return cls(outcome.failure_type or "", normalize_message(message))


@dataclass
class Cluster:
    key: FailureKey
    members: list[CandidateTest]  # ordered by sample_index, pre-dedup
    size: int
    report_match: bool = False


@dataclass
class SelectionDecision:
    threshold: int
    max_cluster_size: int
    selected: bool


@dataclass
class RankedEntry:
    candidate: CandidateTest
    cluster_key: FailureKey
    rank: int
    br_output_match: bool
    br_test_match: bool
    token_count: int


@dataclass
class RankedSuggestions:
    decision: SelectionDecision
    ordered: list[RankedEntry] = field(default_factory=list)


def cluster_fibs(
    fibs: list[tuple[CandidateTest, ExecutionOutcome]],
    abstract_messages: bool = False,
) -> list[Cluster]:
    """Group failing candidates by failure output."""
    groups: dict[FailureKey, list[CandidateTest]] = {}
    for candidate, outcome in fibs:
        key = FailureKey.from_outcome(outcome, abstract=abstract_messages)
        groups.setdefault(key, []).append(candidate)
    clusters = []
    for key, members in groups.items():
        members = sorted(members, key=lambda c: c.sample_index)
        clusters.append(Cluster(key=key, members=members, size=len(members)))
    clusters.sort(key=lambda c: c.members[0].sample_index)
    return clusters


def select(clusters: list[Cluster], thr: int) -> SelectionDecision:
    """Show anything only when the largest cluster strictly exceeds thr."""
    if thr < 0:
        raise ValueError("threshold must be >= 0")
    max_size = max((c.size for c in clusters), default=0)
    return SelectionDecision(threshold=thr, max_cluster_size=max_size, selected=max_size > thr)


def _name_normalized_tokens(method_text: str) -> tuple[str, ...]:
    tokens = lexer.lex(method_text)
    for i in range(len(tokens) - 2):
        if (
            tokens[i] == "void"
            and lexer.is_identifier(tokens[i + 1])
            and tokens[i + 2] == "("
        ):
            tokens = list(tokens)
            tokens[i + 1] = "<method-name>"
            break
    return tuple(tokens)


def dedup_syntactic(fibs: list[CandidateTest]) -> list[CandidateTest]:
    """Drop candidates whose name-normalized token sequences repeat.

    The lowest sample_index of each equivalence class survives.
    """
    survivors: list[CandidateTest] = []
    seen: set[tuple[str, ...]] = set()
    for candidate in sorted(fibs, key=lambda c: c.sample_index):
        signature = _name_normalized_tokens(candidate.method_text)
        if signature not in seen:
            seen.add(signature)
            survivors.append(candidate)
    return survivors


def match_output_with_report(key: FailureKey, report: BugReport) -> bool:
    """Does the failure output surface in the report text?"""
    text = normalize_message(report.text).lower()
    simple = key.failure_type.rsplit(".", 1)[-1]
    if simple and simple.lower() in text:
        return True
    return bool(key.normalized_message) and key.normalized_message.lower() in text


def match_test_with_report(candidate: CandidateTest, report: BugReport) -> bool:
    """Does the test mention a literal or exception the report mentions?"""
    refs = lexer.extract_dependencies(candidate.method_text)
    text = report.text
    for literal in refs.string_literals:
        if len(literal) >= 3 and literal in text:
            return True
    return any(name in text for name in refs.exception_names)


def rank(
    clusters: list[Cluster],
    report: BugReport,
    decision: SelectionDecision,
) -> RankedSuggestions:
    """Round-robin over clusters sorted by report match, agreement, and
    test length; within a cluster, deduped members sort the same way."""
    if not decision.selected:
        raise NotSelected(
            f"max cluster size {decision.max_cluster_size} <= threshold {decision.threshold}"
        )

    survivor_ids = {
        c.sample_index
        for c in dedup_syntactic([m for cluster in clusters for m in cluster.members])
    }
    test_match: dict[int, bool] = {}
    deduped: dict[int, list[CandidateTest]] = {}
    for cluster in clusters:
        cluster.report_match = match_output_with_report(cluster.key, report)
        kept = [m for m in cluster.members if m.sample_index in survivor_ids]
        for member in kept:
            test_match[member.sample_index] = match_test_with_report(member, report)
        deduped[id(cluster)] = sorted(
            kept,
            key=lambda m: (not test_match[m.sample_index], m.token_count, m.sample_index),
        )

    ordered_clusters = sorted(
        clusters,
        key=lambda c: (
            not c.report_match,
            -c.size,
            min(m.token_count for m in c.members),
            c.members[0].sample_index,
        ),
    )

    entries: list[RankedEntry] = []
    depth = 0
    while True:
        emitted = False
        for cluster in ordered_clusters:
            members = deduped[id(cluster)]
            if depth < len(members):
                member = members[depth]
                entries.append(RankedEntry(
                    candidate=member,
                    cluster_key=cluster.key,
                    rank=len(entries) + 1,
                    br_output_match=cluster.report_match,
                    br_test_match=test_match[member.sample_index],
                    token_count=member.token_count,
                ))
                emitted = True
        if not emitted:
            break
        depth += 1
    return RankedSuggestions(decision=decision, ordered=entries)
