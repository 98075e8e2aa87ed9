"""Samples completions from a pluggable provider and normalizes them into
candidate test methods.

Two providers ship by default: an HTTP JSON provider speaking the common
completion/chat API shape, and a replay provider that reads previously
recorded completions from the workspace so whole runs reproduce without
any live model.
"""

from __future__ import annotations

import logging
import os
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import requests

from . import lexer
from .errors import (
    AuthMissing,
    BudgetExceeded,
    EmptyCompletion,
    InsufficientRecordings,
    NoTestMethodFound,
    ProviderUnavailable,
)
from .prompts import STEM, Prompt
from .workspace import Workspace

logger = logging.getLogger(__name__)

API_KEY_ENV = "BRT_LLM_API_KEY"
SOFT_SAMPLE_CAP = 50
DEFAULT_STOP_MARKER = "```"


@dataclass
class GenerationConfig:
    provider_id: str = "replay"
    model: str = ""
    temperature: float = 0.7
    num_samples: int = 10
    max_tokens: int = 256
    stop_marker: str = DEFAULT_STOP_MARKER
    base_url: str | None = None
    parallelism: int = 4
    min_request_interval: float = 0.0
    max_requests_per_bug: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature out of range: {self.temperature}")
        if self.num_samples < 1:
            raise ValueError("num_samples must be >= 1")
        if self.num_samples > SOFT_SAMPLE_CAP:
            logger.warning(
                "num_samples=%d exceeds the soft cap of %d",
                self.num_samples, SOFT_SAMPLE_CAP,
            )


def trim_completion(raw: str, stem: str = STEM, stop_marker: str = DEFAULT_STOP_MARKER) -> str:
    """Cut a raw completion at the first stop marker and prefix the stem.

    A completion that already carries the stem is not double-prefixed, so
    trimming is idempotent. Raises EmptyCompletion when nothing but the
    stem remains.
    """
    cut = raw.find(stop_marker) if stop_marker else -1
    body = raw[:cut] if cut >= 0 else raw
    if body.startswith(stem):
        method = body.rstrip()
    else:
        method = (stem + body).rstrip()
    if not lexer.lex(method[len(stem):]):
        raise EmptyCompletion("no tokens beyond the stem")
    return method


_FENCE = re.compile(r"```[\w+-]*[ \t]*\n(.*?)(?:\n?```|\Z)", re.DOTALL)


def extract_method_from_chat(reply: str) -> str:
    """Pull the first `public void test*` method out of a chat reply.

    Looks inside the first fenced code block (or the whole reply when
    unfenced); if the block is a full class, the method is cut out by
    brace matching.
    """
    match = _FENCE.search(reply)
    block = match.group(1) if match else reply
    for span in lexer.method_spans(block):
        if span.name.startswith("test") and "public" in span.modifiers:
            return block[span.start:span.end]
    raise NoTestMethodFound("no public void test* method in reply")


@dataclass
class CandidateTest:
    """One sampled test method with its provenance."""

    bug_id: str
    sample_index: int
    raw_completion: str
    method_text: str
    token_count: int
    prompt_id: str
    empty: bool = False

    @classmethod
    def from_raw(
        cls,
        bug_id: str,
        sample_index: int,
        raw_completion: str,
        prompt_id: str,
        stem: str = STEM,
        stop_marker: str = DEFAULT_STOP_MARKER,
    ) -> "CandidateTest":
        try:
            method = trim_completion(raw_completion, stem, stop_marker)
            empty = False
        except EmptyCompletion:
            method = stem
            empty = True
        return cls(
            bug_id=bug_id,
            sample_index=sample_index,
            raw_completion=raw_completion,
            method_text=method,
            token_count=len(lexer.lex(method)),
            prompt_id=prompt_id,
            empty=empty,
        )


class ReplayProvider:
    """Serves completions previously recorded in the workspace."""

    def __init__(self, records: list[str]):
        self.records = records

    @classmethod
    def from_workspace(cls, workspace: Workspace, bug_id: str) -> "ReplayProvider":
        rows = workspace.read_records(bug_id, "generations")
        rows.sort(key=lambda r: r["sample_index"])
        return cls([r["raw_completion"] for r in rows])

    def complete(self, prompt: Prompt, cfg: GenerationConfig, sample_index: int) -> str:
        if sample_index >= len(self.records):
            raise InsufficientRecordings(len(self.records), sample_index + 1)
        return self.records[sample_index]


class HttpCompletionProvider:
    """Completion/chat provider over a JSON HTTP API with bearer auth."""

    MAX_ATTEMPTS = 3

    def __init__(self, base_url: str, api_key_env: str = API_KEY_ENV):
        if not base_url:
            raise ProviderUnavailable("http provider needs a base_url")
        self.base_url = base_url
        self.api_key_env = api_key_env
        self._lock = threading.Lock()
        self._last_request = 0.0

    def _headers(self) -> dict:
        key = os.environ.get(self.api_key_env)
        if not key:
            raise AuthMissing(f"set {self.api_key_env}")
        return {"Authorization": f"Bearer {key}", "Content-Type": "application/json"}

    def _throttle(self, min_interval: float) -> None:
        if min_interval <= 0:
            return
        with self._lock:
            wait = self._last_request + min_interval - time.monotonic()
            if wait > 0:
                time.sleep(wait)
            self._last_request = time.monotonic()

    def complete(self, prompt: Prompt, cfg: GenerationConfig, sample_index: int) -> str:
        payload: dict = {
            "model": cfg.model,
            "temperature": cfg.temperature,
            "n": 1,
            "max_tokens": cfg.max_tokens,
            "stop": [cfg.stop_marker],
        }
        if prompt.chat_mode:
            payload["messages"] = prompt.messages
        else:
            payload["prompt"] = prompt.text
        headers = self._headers()

        last_error: Exception | None = None
        for attempt in range(1, self.MAX_ATTEMPTS + 1):
            self._throttle(cfg.min_request_interval)
            try:
                response = requests.post(
                    self.base_url, json=payload, headers=headers, timeout=120
                )
            except requests.RequestException as exc:
                last_error = exc
                time.sleep(0.2 * attempt)
                continue
            if response.status_code in (429,) or response.status_code >= 500:
                last_error = ProviderUnavailable(f"HTTP {response.status_code}")
                time.sleep(0.2 * attempt)
                continue
            if response.status_code in (401, 403):
                raise AuthMissing(f"provider rejected credentials ({response.status_code})")
            if response.status_code != 200:
                raise ProviderUnavailable(f"HTTP {response.status_code}")
            choice = response.json()["choices"][0]
            if "message" in choice:
                return choice["message"].get("content", "")
            return choice.get("text", "")
        raise ProviderUnavailable(f"request kept failing: {last_error}")


ProviderFactory = Callable[[GenerationConfig, Workspace, str], object]

_PROVIDERS: dict[str, ProviderFactory] = {
    "http": lambda cfg, ws, bug_id: HttpCompletionProvider(cfg.base_url or ""),
    "replay": lambda cfg, ws, bug_id: ReplayProvider.from_workspace(ws, bug_id),
}


def register_provider(provider_id: str, factory: ProviderFactory) -> None:
    _PROVIDERS[provider_id] = factory


def resolve_provider(cfg: GenerationConfig, workspace: Workspace, bug_id: str):
    factory = _PROVIDERS.get(cfg.provider_id)
    if factory is None:
        raise ProviderUnavailable(f"no provider registered as {cfg.provider_id!r}")
    return factory(cfg, workspace, bug_id)


def sample(
    prompt: Prompt,
    cfg: GenerationConfig,
    workspace: Workspace,
    bug_id: str,
    provider: object | None = None,
) -> list[CandidateTest]:
    """Draw cfg.num_samples completions and persist them before returning.

    Requests fan out up to cfg.parallelism at a time; the result list is
    re-ordered by sample index, so consumers always see a deterministic
    sequence. Degenerate completions are kept but flagged as empty.
    """
    if provider is None:
        provider = resolve_provider(cfg, workspace, bug_id)
    n = cfg.num_samples
    if cfg.max_requests_per_bug is not None and n > cfg.max_requests_per_bug:
        raise BudgetExceeded(
            f"{n} samples exceed the per-bug budget of {cfg.max_requests_per_bug}"
        )
    if isinstance(provider, ReplayProvider) and len(provider.records) < n:
        raise InsufficientRecordings(len(provider.records), n)

    raws: list[str | None] = [None] * n
    with ThreadPoolExecutor(max_workers=max(1, min(cfg.parallelism, n))) as pool:
        futures = {
            pool.submit(provider.complete, prompt, cfg, index): index
            for index in range(n)
        }
        for future, index in futures.items():
            raws[index] = future.result()

    existing = {
        record["sample_index"] for record in workspace.read_records(bug_id, "generations")
    }
    candidates = []
    for index, raw in enumerate(raws):
        assert raw is not None
        if index not in existing:
            workspace.persist_record(
                bug_id,
                "generations",
                {"bug_id": bug_id, "sample_index": index, "raw_completion": raw},
            )
        candidates.append(
            CandidateTest.from_raw(
                bug_id, index, raw, prompt.id, prompt.stem, cfg.stop_marker
            )
        )
    return candidates
