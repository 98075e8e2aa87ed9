"""Renders bug reports into generation prompts.

The completion layout is golden-tested; treat every literal below as
load-bearing, including newlines.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from .errors import EmptyTitle, MalformedRecord
from .reports import BugReport, ExampleEntry

STEM = "public void test"

_REPRODUCTION_FOOTER = (
    "\n## Reproduction\n"
    ">Provide a self-contained example that reproduces this issue.\n"
    "```\n" + STEM
)

CHAT_INSTRUCTION = (
    "You are an expert Java developer writing tests that reproduce reported "
    "bugs. Given a bug report, generate a single self-contained test METHOD, "
    "not a test file. Reply with only that method inside a fenced code block."
)


@dataclass
class PromptConfig:
    """What goes into a prompt besides the target report."""

    examples: list[ExampleEntry] = field(default_factory=list)
    include_stack_trace: bool = False
    constructor_info: str | None = None
    chat_mode: bool = False
    token_budget: int = 7000

    @property
    def num_examples(self) -> int:
        return len(self.examples)


@dataclass
class Prompt:
    """A rendered prompt: either plain text or a chat message list."""

    id: str
    text: str | None = None
    messages: list[dict] | None = None
    stem: str = STEM

    @property
    def chat_mode(self) -> bool:
        return self.messages is not None


def _approx_tokens(text: str) -> int:
    return len(text.split())


def _report_block(
    report: BugReport,
    include_stack_trace: bool,
    constructor_info: str | None,
) -> str:
    if not report.title:
        raise EmptyTitle(report.id)
    parts = [f"# {report.title}\n## Description\n{report.description}\n"]
    if include_stack_trace and report.stack_trace:
        parts.append(f"## Stack Trace\n```\n{report.stack_trace}\n```\n")
    if constructor_info:
        parts.append(f"## Relevant Constructors\n```\n{constructor_info}\n```\n")
    parts.append(_REPRODUCTION_FOOTER)
    return "".join(parts)


def _example_block(example: ExampleEntry, include_stack_trace: bool) -> str:
    test = example.reproducing_test
    if not test.startswith(STEM):
        raise MalformedRecord(
            f"example test for {example.report.id} must start with {STEM!r}"
        )
    block = _report_block(example.report, include_stack_trace, None)
    return block + test[len(STEM):] + "\n```\n\n"


def _content_hash(payload: str) -> str:
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def build_completion_prompt(report: BugReport, cfg: PromptConfig) -> Prompt:
    """One text prompt: example blocks, then the target report, ending in
    an open code fence and the method stem."""
    assert not cfg.chat_mode
    examples = list(cfg.examples)
    while True:
        rendered = "".join(
            _example_block(e, cfg.include_stack_trace) for e in examples
        ) + _report_block(report, cfg.include_stack_trace, cfg.constructor_info)
        if _approx_tokens(rendered) <= cfg.token_budget or not examples:
            break
        examples.pop()
    return Prompt(id=_content_hash(rendered), text=rendered)


def build_chat_prompt(report: BugReport, cfg: PromptConfig) -> Prompt:
    """Chat messages: instruction plus examples as the system message, the
    target report (without the trailing stem) as the user message."""
    assert cfg.chat_mode
    examples = list(cfg.examples)
    while True:
        system = CHAT_INSTRUCTION
        if examples:
            system += "\n\n" + "".join(
                _example_block(e, cfg.include_stack_trace) for e in examples
            ).rstrip("\n")
        target = _report_block(report, cfg.include_stack_trace, cfg.constructor_info)
        user = target[: -len(STEM)]
        messages = [
            {"role": "system", "content": system},
            {"role": "user", "content": user},
        ]
        total = sum(_approx_tokens(m["content"]) for m in messages)
        if total <= cfg.token_budget or not examples:
            break
        examples.pop()
    return Prompt(id=_content_hash(json.dumps(messages, sort_keys=True)), messages=messages)


def build_prompt(report: BugReport, cfg: PromptConfig) -> Prompt:
    if cfg.chat_mode:
        return build_chat_prompt(report, cfg)
    return build_completion_prompt(report, cfg)


def default_examples() -> list[ExampleEntry]:
    """Two bundled handpicked report/test pairs used as few-shot defaults."""
    return [
        ExampleEntry(
            report=BugReport(
                id="time-24",
                title="Parsing a week-based date returns the wrong year",
                description=(
                    "Parsing a date string with a week-of-weekyear pattern places "
                    "dates from the first ISO week of January into the previous "
                    "year. For example, parsing \"2010-W01-1\" with the pattern "
                    "\"xxxx-'W'ww-e\" produces a date in 2008 instead of the "
                    "first Monday of 2010."
                ),
                project_id="time",
            ),
            reproducing_test=(
                "public void testParseWeekDate() {\n"
                "    DateTimeFormatter formatter = DateTimeFormat.forPattern(\"xxxx-'W'ww-e\");\n"
                "    LocalDate date = formatter.parseLocalDate(\"2010-W01-1\");\n"
                "    assertEquals(new LocalDate(2010, 1, 4), date);\n"
                "}"
            ),
        ),
        ExampleEntry(
            report=BugReport(
                id="lang-1",
                title="createNumber throws NumberFormatException for large hex strings",
                description=(
                    "NumberUtils.createNumber(\"0x80000000\") raises "
                    "NumberFormatException even though the value fits in a long. "
                    "Hex strings above Integer.MAX_VALUE should be promoted to "
                    "Long instead of failing."
                ),
                project_id="lang",
            ),
            reproducing_test=(
                "public void testCreateNumber() {\n"
                "    assertEquals(Long.valueOf(0x80000000L), NumberUtils.createNumber(\"0x80000000\"));\n"
                "}"
            ),
        ),
    ]
