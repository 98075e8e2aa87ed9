"""Exception types shared across the pipeline."""

from __future__ import annotations


class BrtError(Exception):
    """Base class for all errors raised by brtgen."""


class MalformedRecord(BrtError):
    """A record file exists but cannot be parsed into the expected shape."""


class MissingField(BrtError):
    def __init__(self, field: str):
        super().__init__(f"missing required field: {field}")
        self.field = field


class MalformedId(BrtError):
    """Bug id is unusable as a workspace directory name."""


class EmptyTitle(BrtError):
    """A prompt cannot be built from a report without a title."""


class UnresolvedProject(BrtError):
    """A manifest references a project_id with no project config."""


class HttpError(BrtError):
    def __init__(self, status: int, detail: str = ""):
        super().__init__(f"HTTP {status}" + (f": {detail}" if detail else ""))
        self.status = status


class UnsupportedTracker(BrtError):
    """Issue URL does not match any supported tracker scheme."""


class RateLimited(BrtError):
    def __init__(self, retry_after: float | None = None):
        super().__init__(
            "rate limited" + (f", retry after {retry_after}s" if retry_after else "")
        )
        self.retry_after = retry_after


class ProviderUnavailable(BrtError):
    """No provider registered under the requested id, or it keeps failing."""


class AuthMissing(BrtError):
    """Provider requires an API key and none is configured."""


class BudgetExceeded(BrtError):
    """Per-bug request budget would be exceeded."""


class InsufficientRecordings(BrtError):
    def __init__(self, found: int, needed: int):
        super().__init__(f"replay store holds {found} completions, {needed} requested")
        self.found = found
        self.needed = needed


class EmptyCompletion(BrtError):
    """Trimmed completion has no tokens beyond the method stem."""


class NoTestMethodFound(BrtError):
    """Chat reply contains no extractable test method."""


class UnbalancedBraces(BrtError):
    """Source text does not brace-balance under the lexer."""


class NoTestSources(BrtError):
    """No files matched the configured test-source globs."""


class NoCandidateClasses(BrtError):
    """Class matching requires at least one indexed test class."""


class PatchConflict(BrtError):
    """Target file no longer matches the content a patch was made against."""


class RunnerError(BrtError):
    """Compile or run command could not be executed at all."""


class NotSelected(BrtError):
    """Ranking was requested although the selection gate did not pass."""


class MissingUpstreamStage(BrtError):
    def __init__(self, stage: str):
        super().__init__(f"upstream stage not present: {stage}")
        self.stage = stage


class ConfigError(BrtError):
    """Pipeline configuration is missing or invalid."""
