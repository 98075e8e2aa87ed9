"""Canned-transcript adapter standing in for a real build tool.

Invoked through a project's compile/run command templates:

    python -m brtgen.mock_adapter <transcripts.json> compile
    python -m brtgen.mock_adapter <transcripts.json> run <class> <method>

The transcripts file lives in the project root (the commands run with cwd
set there). `compile` greps the test tree for the configured marker
tokens and fails like a compiler would when one is present; `run` echoes
the transcript recorded for `<class>::<method>` and exits with its code.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path


def run_compile(transcripts: dict) -> int:
    markers = transcripts.get("compile_error_markers", [])
    globs = transcripts.get("compile_scan_globs", ["src/test/**/*.java"])
    if markers:
        files = sorted({p for g in globs for p in Path(".").glob(g) if p.is_file()})
        for path in files:
            text = path.read_text(encoding="utf-8", errors="replace")
            for marker in markers:
                if marker in text:
                    print(f"{path}: error: cannot find symbol: {marker}")
                    return 1
    print("compilation finished")
    return 0


def run_test(transcripts: dict, class_name: str, method: str) -> int:
    entry = transcripts.get("runs", {}).get(f"{class_name}::{method}")
    if entry is None:
        entry = transcripts.get("default", {"exit_code": 0, "stdout": "PASS"})
    sys.stdout.write(entry.get("stdout", ""))
    if not entry.get("stdout", "").endswith("\n"):
        sys.stdout.write("\n")
    return int(entry.get("exit_code", 0))


def main(argv: list[str] | None = None) -> int:
    args = sys.argv[1:] if argv is None else argv
    if len(args) < 2:
        print("usage: mock_adapter <transcripts.json> compile|run [class method]", file=sys.stderr)
        return 64
    transcripts = json.loads(Path(args[0]).read_text(encoding="utf-8"))
    mode = args[1]
    if mode == "compile":
        return run_compile(transcripts)
    if mode == "run" and len(args) == 4:
        return run_test(transcripts, args[2], args[3])
    print(f"unknown mode: {mode}", file=sys.stderr)
    return 64


if __name__ == "__main__":
    sys.exit(main())
