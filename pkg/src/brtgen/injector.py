"""Places a candidate test into the best-matching test class.

The match score for a class is |tokens(test) ∩ tokens(class)| / |tokens(test)|.
Missing imports are resolved by locating a unique public class definition,
falling back to the most common matching import statement across the
project; anything still unresolved is flagged but never blocks injection,
since the compiler verdict downstream is the real gate.
"""

from __future__ import annotations

import textwrap
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from . import lexer
from .errors import NoCandidateClasses
from .lexer import DependencyRefs, TestClassInfo

DEFAULT_SOURCE_GLOBS = ("src/main/**/*.java",)

# Types usable with no import at all (java.lang and primitives' boxes).
DEFAULT_TYPE_ALLOWLIST = frozenset({
    "Object", "String", "StringBuilder", "StringBuffer", "CharSequence",
    "Integer", "Long", "Short", "Byte", "Double", "Float", "Boolean",
    "Character", "Number", "Math", "System", "Thread", "Runnable", "Class",
    "Iterable", "Comparable", "Cloneable", "Override", "Deprecated",
    "SuppressWarnings", "FunctionalInterface", "SafeVarargs",
    "Throwable", "Exception", "RuntimeException", "Error",
    "ArithmeticException", "ArrayIndexOutOfBoundsException",
    "ClassCastException", "IllegalArgumentException", "IllegalStateException",
    "IndexOutOfBoundsException", "NegativeArraySizeException",
    "NullPointerException", "NumberFormatException",
    "StringIndexOutOfBoundsException", "UnsupportedOperationException",
    "AssertionError", "StackOverflowError", "OutOfMemoryError",
})

DEFAULT_ASSERTION_IMPORT = "import static org.junit.Assert.*;"
DEFAULT_TEST_ANNOTATION_IMPORT = "import org.junit.Test;"


@dataclass
class ClassMatch:
    class_info: TestClassInfo
    score: float


@dataclass
class ImportResolution:
    imports: list[str] = field(default_factory=list)
    unresolved: list[str] = field(default_factory=list)


@dataclass
class InjectionPlan:
    """Everything needed to write, run, and undo one candidate injection."""

    bug_id: str
    sample_index: int
    class_qualified_name: str
    file_rel_path: str
    final_method_name: str
    added_imports: list[str]
    unresolved: list[str]
    original_file_content: str
    modified_file_content: str
    status: str = "planned"
    failure_reason: str | None = None
    target_class: ClassMatch | None = None


@dataclass
class _ImportStmt:
    is_static: bool
    parts: tuple[str, ...]  # dotted path; last element may be "*"

    @property
    def text(self) -> str:
        head = "import static " if self.is_static else "import "
        return head + ".".join(self.parts) + ";"


def _parse_import_tokens(texts: list[str], start: int) -> tuple[_ImportStmt | None, int]:
    j = start + 1
    is_static = False
    if j < len(texts) and texts[j] == "static":
        is_static = True
        j += 1
    parts: list[str] = []
    expect_name = True
    while j < len(texts) and texts[j] != ";":
        t = texts[j]
        if expect_name and (lexer.is_identifier(t) or t == "*"):
            parts.append(t)
            expect_name = False
        elif not expect_name and t == ".":
            expect_name = True
        else:
            return None, j
        j += 1
    if not parts or expect_name:
        return None, j
    return _ImportStmt(is_static, tuple(parts)), j


def parse_import(declaration: str) -> _ImportStmt | None:
    texts = lexer.lex(declaration)
    if not texts or texts[0] != "import":
        return None
    stmt, _ = _parse_import_tokens(texts, 0)
    return stmt


class ProjectIndex:
    """Class definitions and import-statement votes across a project."""

    def __init__(self) -> None:
        self.source_classes: dict[str, list[TestClassInfo]] = {}
        self.package_members: dict[str, set[str]] = {}
        self.import_votes: Counter[str] = Counter()
        self.static_import_votes: Counter[str] = Counter()

    @classmethod
    def scan(
        cls,
        project_root: Path | str,
        source_globs: Iterable[str] = DEFAULT_SOURCE_GLOBS,
        test_globs: Iterable[str] = lexer.DEFAULT_TEST_GLOBS,
    ) -> "ProjectIndex":
        root = Path(project_root)
        index = cls()
        source_files = sorted({p for g in source_globs for p in root.glob(g) if p.is_file()})
        test_files = sorted({p for g in test_globs for p in root.glob(g) if p.is_file()})
        for path in source_files:
            index._add_file(path, is_source_tree=True)
        for path in test_files:
            index._add_file(path, is_source_tree=False)
        return index

    def _add_file(self, path: Path, is_source_tree: bool) -> None:
        text = path.read_bytes().decode("utf-8", errors="replace")
        texts = lexer.lex(text)
        for i, t in enumerate(texts):
            if t == "import":
                stmt, _ = _parse_import_tokens(texts, i)
                if stmt is None:
                    continue
                if stmt.is_static:
                    self.static_import_votes[stmt.text] += 1
                else:
                    self.import_votes[stmt.text] += 1
        try:
            classes = lexer.parse_test_classes(path, text)
        except Exception:
            return
        for info in classes:
            self.package_members.setdefault(info.package_name, set()).add(info.class_name)
            if is_source_tree:
                self.source_classes.setdefault(info.class_name, []).append(info)

    def most_common_import(self, name: str) -> str | None:
        """Most frequent `import <anything>.name;` across the project.

        Frequency ties break lexicographically; static imports are
        consulted only when no plain candidate exists.
        """
        for votes in (self.import_votes, self.static_import_votes):
            candidates = [
                (count, text)
                for text, count in votes.items()
                if (stmt := parse_import(text)) and stmt.parts[-1] == name
            ]
            if candidates:
                candidates.sort(key=lambda pair: (-pair[0], pair[1]))
                return candidates[0][1]
        return None


def find_best_matching_class(test, classes: list[TestClassInfo]) -> ClassMatch:
    """Best class by token-overlap score; ties prefer the larger raw
    intersection, then the lexicographically smaller file path."""
    if not classes:
        raise NoCandidateClasses("no test classes to match against")
    method_text = getattr(test, "method_text", test)
    test_tokens = lexer.token_set(method_text)

    def rank_key(info: TestClassInfo):
        overlap = len(test_tokens & info.token_set)
        score = overlap / len(test_tokens) if test_tokens else 0.0
        return (-score, -overlap, str(info.file_path))

    best = min(classes, key=rank_key)
    overlap = len(test_tokens & best.token_set)
    score = overlap / len(test_tokens) if test_tokens else 0.0
    return ClassMatch(class_info=best, score=score)


def _is_covered(
    name: str,
    target: TestClassInfo,
    index: ProjectIndex,
    allowlist: frozenset[str] | set[str],
) -> bool:
    for declaration in target.imports:
        stmt = parse_import(declaration)
        if stmt is None or stmt.is_static:
            continue
        if stmt.parts[-1] == name:
            return True
        if stmt.parts[-1] == "*":
            package = ".".join(stmt.parts[:-1])
            if name in index.package_members.get(package, ()):
                return True
    if name in index.package_members.get(target.package_name, ()):
        return True
    return name in allowlist


def _has_static_assertion_import(imports: Iterable[str]) -> bool:
    return any(
        (stmt := parse_import(decl)) and stmt.is_static and
        any("assert" in part.lower() for part in stmt.parts)
        for decl in imports
    )


def resolve_dependencies(
    refs: DependencyRefs,
    target: TestClassInfo,
    index: ProjectIndex,
    allowlist: frozenset[str] | set[str] = DEFAULT_TYPE_ALLOWLIST,
    assertion_import: str = DEFAULT_ASSERTION_IMPORT,
    test_annotation_import: str = DEFAULT_TEST_ANNOTATION_IMPORT,
) -> ImportResolution:
    """Ordered import declarations that make refs visible in target.

    Names are processed in sorted order so output is deterministic.
    """
    resolution = ImportResolution()

    def add(declaration: str) -> None:
        if declaration not in resolution.imports:
            resolution.imports.append(declaration)

    for name in sorted(refs.type_names):
        if name == "Test" and refs.uses_test_annotation:
            continue  # handled by the annotation rule below
        if _is_covered(name, target, index, allowlist):
            continue
        defs = [
            c for c in index.source_classes.get(name, [])
            if c.is_public and c.package_name
        ]
        if len(defs) == 1:
            add(f"import {defs[0].package_name}.{name};")
            continue
        voted = index.most_common_import(name)
        if voted is not None:
            add(voted)
        else:
            resolution.unresolved.append(name)

    if (
        refs.uses_assertions
        and not target.extends_testcase
        and not _has_static_assertion_import(target.imports)
        and not _has_static_assertion_import(resolution.imports)
    ):
        add(assertion_import)
    if refs.uses_test_annotation and not _is_covered("Test", target, index, frozenset()):
        if not any(
            (stmt := parse_import(decl)) and not stmt.is_static and stmt.parts[-1] == "Test"
            for decl in resolution.imports
        ):
            add(test_annotation_import)
    return resolution


def _existing_method_names(source: str) -> set[str]:
    return {span.name for span in lexer.method_spans(source)}


def _method_name_token(method_text: str):
    tokens = lexer.scan(method_text)
    for i in range(len(tokens) - 2):
        if (
            tokens[i].text == "void"
            and lexer.is_identifier(tokens[i + 1].text)
            and tokens[i + 2].text == "("
        ):
            return tokens[i + 1]
    return None


def _import_insertion_offset(source: str) -> int:
    tokens = lexer.scan(source)
    texts = [t.text for t in tokens]
    offset = 0
    i = 0
    depth = 0
    while i < len(texts):
        if texts[i] == "{":
            depth += 1
        elif texts[i] == "}":
            depth -= 1
        elif depth == 0 and texts[i] in ("package", "import"):
            j = i
            while j < len(texts) and texts[j] != ";":
                j += 1
            if j < len(texts):
                offset = tokens[j].end
                i = j
        i += 1
    return offset


def _has_test_annotation(method_text: str) -> bool:
    texts = lexer.lex(method_text)
    return any(
        t == "@" and i + 1 < len(texts) and texts[i + 1] == "Test"
        for i, t in enumerate(texts)
    )


def inject(
    test,
    match: ClassMatch,
    imports: list[str],
    *,
    unresolved: list[str] | None = None,
    project_root: Path | str | None = None,
    require_test_annotation: bool = False,
) -> InjectionPlan:
    """Build the modified suite containing the candidate.

    The method goes immediately before the class's closing brace, renamed
    with an `_brt<k>` suffix if its name is already taken; imports go
    after the last existing import declaration.
    """
    info = match.class_info
    content = info.source
    rel_path = info.file_path
    if project_root is not None:
        try:
            rel_path = info.file_path.relative_to(project_root)
        except ValueError:
            pass

    def failed(reason: str) -> InjectionPlan:
        return InjectionPlan(
            bug_id=getattr(test, "bug_id", ""),
            sample_index=getattr(test, "sample_index", -1),
            class_qualified_name=info.qualified_name,
            file_rel_path=str(rel_path),
            final_method_name="",
            added_imports=[],
            unresolved=list(unresolved or []),
            original_file_content=content,
            modified_file_content=content,
            status="failed",
            failure_reason=reason,
            target_class=match,
        )

    method_text = getattr(test, "method_text", test)
    if not lexer.braces_balanced(method_text):
        return failed("candidate does not brace-balance")
    name_token = _method_name_token(method_text)
    if name_token is None:
        return failed("no method signature in candidate")

    existing = _existing_method_names(content)
    base_name = name_token.text
    final_name = base_name
    suffix = 0
    while final_name in existing:
        suffix += 1
        final_name = f"{base_name}_brt{suffix}"
    if final_name != base_name:
        method_text = (
            method_text[:name_token.start] + final_name + method_text[name_token.end:]
        )
    if require_test_annotation and not _has_test_annotation(method_text):
        method_text = "@Test\n" + method_text

    existing_imports = {
        stmt.text for decl in info.imports if (stmt := parse_import(decl))
    }
    added = []
    for declaration in imports:
        stmt = parse_import(declaration)
        canonical = stmt.text if stmt else declaration
        if canonical not in existing_imports and declaration not in added:
            added.append(declaration)

    insertion = "\n" + textwrap.indent(method_text, "    ") + "\n"
    modified = (
        content[:info.insertion_offset] + insertion + content[info.insertion_offset:]
    )
    if added:
        at = _import_insertion_offset(content)
        block = "\n".join(added)
        if at == 0:
            modified = block + "\n\n" + modified
        else:
            modified = modified[:at] + "\n" + block + modified[at:]

    if not lexer.braces_balanced(modified):
        return failed("injection result does not brace-balance")

    return InjectionPlan(
        bug_id=getattr(test, "bug_id", ""),
        sample_index=getattr(test, "sample_index", -1),
        class_qualified_name=info.qualified_name,
        file_rel_path=str(rel_path),
        final_method_name=final_name,
        added_imports=added,
        unresolved=list(unresolved or []),
        original_file_content=content,
        modified_file_content=modified,
        status="planned",
        target_class=match,
    )
