"""Per-bug, append-only stage records under a workspace root.

Layout: `<root>/<bug_id>/{generations,injections,outcomes,ranking,metrics}.jsonl`
plus `<root>/<bug_id>/patches/<sample_index>.patch` for injection diffs.
The stage files double as checkpoints: a completed stage is never
recomputed unless forced, so a workspace directory fully determines every
downstream result.
"""

from __future__ import annotations

import json
from pathlib import Path

from .errors import MalformedId, MalformedRecord

STAGES = ("generations", "injections", "outcomes", "ranking", "metrics")


def _check_bug_id(bug_id: str) -> str:
    if not bug_id or bug_id in {".", ".."}:
        raise MalformedId(f"unusable bug id: {bug_id!r}")
    if any(sep in bug_id for sep in ("/", "\\", "\0")):
        raise MalformedId(f"bug id contains a path separator: {bug_id!r}")
    return bug_id


class Workspace:
    """All on-disk pipeline state for one run."""

    def __init__(self, root: Path | str):
        self.root = Path(root)

    def bug_dir(self, bug_id: str) -> Path:
        return self.root / _check_bug_id(bug_id)

    def stage_path(self, bug_id: str, stage: str) -> Path:
        if stage not in STAGES:
            raise ValueError(f"unknown stage: {stage}")
        return self.bug_dir(bug_id) / f"{stage}.jsonl"

    def has_stage(self, bug_id: str, stage: str) -> bool:
        path = self.stage_path(bug_id, stage)
        return path.exists() and path.stat().st_size > 0

    def persist_record(self, bug_id: str, stage: str, record: dict) -> Path:
        """Append one record line; records replay in insertion order."""
        path = self.stage_path(bug_id, stage)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("a", encoding="utf-8") as handle:
            handle.write(json.dumps(record, sort_keys=True) + "\n")
        return path

    def read_records(self, bug_id: str, stage: str) -> list[dict]:
        """All records of a stage, in insertion order; [] when absent."""
        path = self.stage_path(bug_id, stage)
        if not path.exists():
            return []
        records = []
        for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise MalformedRecord(f"{path}:{line_no}: {exc}") from exc
        return records

    def clear_stage(self, bug_id: str, stage: str) -> None:
        path = self.stage_path(bug_id, stage)
        if path.exists():
            path.unlink()

    def patch_path(self, bug_id: str, sample_index: int) -> Path:
        return self.bug_dir(bug_id) / "patches" / f"{sample_index}.patch"

    def write_patch(self, bug_id: str, sample_index: int, patch_text: str) -> Path:
        path = self.patch_path(bug_id, sample_index)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(patch_text, encoding="utf-8")
        return path

    def metrics_report_path(self) -> Path:
        return self.root / "metrics.json"

    def sweep_path(self) -> Path:
        return self.root / "sweep.csv"
