"""Create, apply, and revert unified diffs.

Application is exact: every context and removed line must match the target
at the positions the hunk headers claim, otherwise PatchConflict is
raised. Reverting is forward application with the two sides swapped, so
apply-then-revert is byte-exact by construction.
"""

from __future__ import annotations

import difflib
import re
from dataclasses import dataclass, field

from .errors import MalformedRecord, PatchConflict

_NO_NEWLINE = "\\ No newline at end of file"
_HUNK_HEADER = re.compile(r"^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@")


def make_patch(original: str, modified: str, label: str) -> str:
    """Unified diff from original to modified, labeled a/<label> b/<label>."""
    diff = difflib.unified_diff(
        original.splitlines(keepends=True),
        modified.splitlines(keepends=True),
        fromfile=f"a/{label}",
        tofile=f"b/{label}",
    )
    out: list[str] = []
    for line in diff:
        if line.endswith("\n"):
            out.append(line)
        else:
            out.append(line + "\n")
            out.append(_NO_NEWLINE + "\n")
    return "".join(out)


@dataclass
class _Hunk:
    old_start: int
    new_start: int
    old_lines: list[str] = field(default_factory=list)
    new_lines: list[str] = field(default_factory=list)


def _parse_hunks(patch_text: str) -> list[_Hunk]:
    hunks: list[_Hunk] = []
    lines = patch_text.splitlines(keepends=True)
    i = 0
    while i < len(lines):
        header = _HUNK_HEADER.match(lines[i])
        if not header:
            i += 1
            continue
        old_start = int(header.group(1))
        old_len = int(header.group(2) if header.group(2) is not None else "1")
        new_start = int(header.group(3))
        new_len = int(header.group(4) if header.group(4) is not None else "1")
        hunk = _Hunk(old_start=old_start, new_start=new_start)
        i += 1
        old_got = new_got = 0
        last_sides: list[list[str]] = []
        while i < len(lines) and (old_got < old_len or new_got < new_len or
                                  lines[i].startswith(_NO_NEWLINE)):
            line = lines[i]
            if line.startswith(_NO_NEWLINE):
                for side in last_sides:
                    side[-1] = side[-1].rstrip("\n")
                i += 1
                continue
            tag, body = line[:1], line[1:]
            if tag == " ":
                hunk.old_lines.append(body)
                hunk.new_lines.append(body)
                last_sides = [hunk.old_lines, hunk.new_lines]
                old_got += 1
                new_got += 1
            elif tag == "-":
                hunk.old_lines.append(body)
                last_sides = [hunk.old_lines]
                old_got += 1
            elif tag == "+":
                hunk.new_lines.append(body)
                last_sides = [hunk.new_lines]
                new_got += 1
            else:
                raise MalformedRecord(f"unexpected patch line: {line!r}")
            i += 1
        if old_got != old_len or new_got != new_len:
            raise MalformedRecord("hunk body does not match its header counts")
        hunks.append(hunk)
    return hunks


def _apply(content: str, hunks: list[_Hunk], reverse: bool) -> str:
    src = content.splitlines(keepends=True)
    out: list[str] = []
    pos = 0
    for hunk in hunks:
        if reverse:
            start, old_lines, new_lines = hunk.new_start, hunk.new_lines, hunk.old_lines
        else:
            start, old_lines, new_lines = hunk.old_start, hunk.old_lines, hunk.new_lines
        # A zero-length source range addresses the line *after* which to
        # insert; a non-empty one addresses its first line (1-based).
        anchor = start if not old_lines else start - 1
        if anchor < pos or anchor > len(src):
            raise PatchConflict(f"hunk at line {start} overlaps or overruns the file")
        if src[anchor:anchor + len(old_lines)] != old_lines:
            raise PatchConflict(f"context mismatch at line {start}")
        out.extend(src[pos:anchor])
        out.extend(new_lines)
        pos = anchor + len(old_lines)
    out.extend(src[pos:])
    return "".join(out)


def apply_patch(content: str, patch_text: str) -> str:
    """Apply a unified diff to content; exact-match, no fuzz."""
    return _apply(content, _parse_hunks(patch_text), reverse=False)


def revert_patch(content: str, patch_text: str) -> str:
    """Undo a previously applied unified diff."""
    return _apply(content, _parse_hunks(patch_text), reverse=True)
