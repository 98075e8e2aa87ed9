"""Error-tolerant lexer for Java-like test sources.

Everything downstream (class matching, dependency extraction, syntactic
dedup, token counts) works on lexical tokens only, never on a parse tree,
so partially invalid generated code still flows through the pipeline.

Guarantees:
  * lexing never fails; bytes that fit no rule become single-char tokens,
  * comments and whitespace are dropped,
  * string/char literals are single tokens including their quotes,
  * joining the tokens of any input with single spaces re-lexes to the
    same token list (unterminated literals degrade to a bare quote token
    to keep this stable).
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple

from .errors import NoTestSources, UnbalancedBraces

logger = logging.getLogger(__name__)


class Token(NamedTuple):
    text: str
    start: int
    end: int


_IDENT_START = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_$")
_IDENT_PART = _IDENT_START | set("0123456789")
_DIGITS = set("0123456789")
_HEX_DIGITS = set("0123456789abcdefABCDEF_")

# Longest first so e.g. ">>>=" wins over ">>".
_MULTI_OPS = (
    ">>>=", "<<=", ">>=", ">>>", "...",
    "==", "!=", "<=", ">=", "&&", "||", "++", "--",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=",
    "->", "::", "<<", ">>",
)

_CAP_NAME = re.compile(r"^[A-Z][A-Za-z0-9_]*$")


def is_identifier(text: str) -> bool:
    return bool(text) and text[0] in _IDENT_START and all(c in _IDENT_PART for c in text)


def _scan_number(source: str, i: int) -> int:
    """Return the end index of a numeric literal starting at i."""
    n = len(source)
    j = i
    if source[j] == ".":
        j += 1
        while j < n and source[j] in _DIGITS:
            j += 1
    elif source[j] == "0" and j + 1 < n and source[j + 1] in "xXbB":
        j += 2
        while j < n and source[j] in _HEX_DIGITS:
            j += 1
        if j < n and source[j] in "lL":
            j += 1
        return j
    else:
        while j < n and (source[j] in _DIGITS or source[j] == "_"):
            j += 1
        if j < n and source[j] == "." and j + 1 < n and source[j + 1] in _DIGITS:
            j += 1
            while j < n and (source[j] in _DIGITS or source[j] == "_"):
                j += 1
    if j < n and source[j] in "eE":
        k = j + 1
        if k < n and source[k] in "+-":
            k += 1
        if k < n and source[k] in _DIGITS:
            j = k
            while j < n and source[j] in _DIGITS:
                j += 1
    if j < n and source[j] in "fFdDlL":
        j += 1
    return j


def _scan_quoted(source: str, i: int) -> int | None:
    """End index of the literal opened at i, or None if unterminated.

    Literals may span newlines: pairing quotes independently of whitespace
    is what keeps re-lexing of space-joined tokens stable.
    """
    quote = source[i]
    n = len(source)
    j = i + 1
    while j < n:
        c = source[j]
        if c == "\\" and j + 1 < n:
            j += 2
            continue
        if c == quote:
            return j + 1
        j += 1
    return None


def scan(source: str) -> list[Token]:
    """Tokenize source, returning tokens with their character offsets."""
    tokens: list[Token] = []
    i = 0
    n = len(source)
    while i < n:
        c = source[i]
        if c.isspace():
            i += 1
            continue
        if c == "/" and i + 1 < n and source[i + 1] == "/":
            j = source.find("\n", i)
            i = n if j < 0 else j + 1
            continue
        if c == "/" and i + 1 < n and source[i + 1] == "*":
            j = source.find("*/", i + 2)
            i = n if j < 0 else j + 2
            continue
        if c in "\"'":
            end = _scan_quoted(source, i)
            if end is None:
                tokens.append(Token(c, i, i + 1))
                i += 1
            else:
                tokens.append(Token(source[i:end], i, end))
                i = end
            continue
        if c in _IDENT_START:
            j = i + 1
            while j < n and source[j] in _IDENT_PART:
                j += 1
            tokens.append(Token(source[i:j], i, j))
            i = j
            continue
        if c in _DIGITS or (c == "." and i + 1 < n and source[i + 1] in _DIGITS):
            j = _scan_number(source, i)
            tokens.append(Token(source[i:j], i, j))
            i = j
            continue
        for op in _MULTI_OPS:
            if source.startswith(op, i):
                tokens.append(Token(op, i, i + len(op)))
                i += len(op)
                break
        else:
            tokens.append(Token(c, i, i + 1))
            i += 1
    return tokens


def lex(source: str) -> list[str]:
    """Ordered lexical tokens of source (comments and whitespace dropped)."""
    return [t.text for t in scan(source)]


def token_set(source: str) -> set[str]:
    """The set of lexical tokens in source, duplicates collapsed."""
    return set(lex(source))


def braces_balanced(source: str) -> bool:
    depth = 0
    for t in scan(source):
        if t.text == "{":
            depth += 1
        elif t.text == "}":
            depth -= 1
            if depth < 0:
                return False
    return depth == 0


@dataclass
class DependencyRefs:
    """Class names and other references a generated method relies on."""

    type_names: set[str] = field(default_factory=set)
    uses_assertions: bool = False
    uses_test_annotation: bool = False
    string_literals: set[str] = field(default_factory=set)
    exception_names: set[str] = field(default_factory=set)


_MODIFIERS = {
    "public", "protected", "private", "static", "final",
    "synchronized", "abstract", "native", "strictfp", "default",
}


def _generic_args(tokens: list[Token], i: int, limit: int = 40) -> tuple[set[str], int]:
    """Capitalized names inside a <...> group starting at tokens[i].

    Returns (names, index just past the closing '>'), or (set(), i) when
    the group does not look like type arguments.
    """
    if i >= len(tokens) or tokens[i].text != "<":
        return set(), i
    names: set[str] = set()
    depth = 0
    j = i
    while j < len(tokens) and j - i < limit:
        t = tokens[j].text
        if t == "<":
            depth += 1
        elif t == ">" or t == ">>" or t == ">>>":
            depth -= len(t)
            if depth <= 0:
                return names, j + 1
        elif _CAP_NAME.match(t):
            names.add(t)
        elif t not in {",", "?", "extends", "super", ".", "[", "]"} and not is_identifier(t):
            return set(), i
        j += 1
    return set(), i


def extract_dependencies(method_text: str) -> DependencyRefs:
    """Collect referenced type names, assertions and literals from a method.

    Capitalized identifiers are recorded when they appear in a type-ish
    position: after `new`, as a declared variable type, in a catch or
    throws clause, after `@`, before `.` (static receiver or class
    literal). Generic arguments are split into their component names.
    """
    tokens = scan(method_text)
    if not braces_balanced(method_text):
        raise UnbalancedBraces("method text does not brace-balance")

    refs = DependencyRefs()
    texts = [t.text for t in tokens]
    n = len(texts)

    def cap(t: str) -> bool:
        return bool(_CAP_NAME.match(t))

    for i, t in enumerate(texts):
        if t.startswith('"') and t.endswith('"') and len(t) >= 2:
            refs.string_literals.add(t[1:-1])
        if is_identifier(t):
            if t.startswith("assert"):
                refs.uses_assertions = True
            if cap(t) and (t.endswith("Exception") or t.endswith("Error")):
                refs.exception_names.add(t)

        if t == "new":
            j = i + 1
            while j < n and is_identifier(texts[j]):
                if cap(texts[j]):
                    refs.type_names.add(texts[j])
                if j + 1 < n and texts[j + 1] == ".":
                    j += 2
                else:
                    break
        elif t == "catch" and i + 1 < n and texts[i + 1] == "(":
            j = i + 2
            while j < n and texts[j] != ")":
                if cap(texts[j]):
                    refs.type_names.add(texts[j])
                    refs.exception_names.add(texts[j])
                j += 1
        elif t == "throws":
            j = i + 1
            while j < n and texts[j] not in "{;":
                if cap(texts[j]):
                    refs.type_names.add(texts[j])
                    refs.exception_names.add(texts[j])
                j += 1
        elif t == "@" and i + 1 < n and is_identifier(texts[i + 1]):
            if cap(texts[i + 1]):
                refs.type_names.add(texts[i + 1])
            if texts[i + 1] == "Test":
                refs.uses_test_annotation = True
        elif cap(t):
            if i + 1 < n and texts[i + 1] == ".":
                refs.type_names.add(t)
                continue
            generic_names, j = _generic_args(tokens, i + 1)
            while j + 1 < n and texts[j] == "[" and texts[j + 1] == "]":
                j += 2
            if j < n and is_identifier(texts[j]) and texts[j] not in _MODIFIERS:
                if j + 1 < n and texts[j + 1] in {"=", ";", ",", ")", ":"}:
                    refs.type_names.add(t)
                    refs.type_names.update(generic_names)
    return refs


@dataclass
class MethodSpan:
    name: str
    start: int        # offset of the first modifier (or `void`)
    body_start: int   # offset of the opening brace
    end: int          # offset just past the closing brace
    modifiers: set[str]


def method_spans(source: str) -> list[MethodSpan]:
    """Spans of all void methods in source, found lexically.

    Only `void` methods are reported; that covers test methods, which is
    all the pipeline ever needs to cut out or rename.
    """
    tokens = scan(source)
    texts = [t.text for t in tokens]
    spans: list[MethodSpan] = []
    n = len(texts)
    for i, t in enumerate(texts):
        if t != "void" or i + 2 >= n:
            continue
        if not is_identifier(texts[i + 1]) or texts[i + 2] != "(":
            continue
        j = i
        while j - 1 >= 0 and texts[j - 1] in _MODIFIERS:
            j -= 1
        depth = 0
        k = i + 2
        while k < n:
            if texts[k] == "(":
                depth += 1
            elif texts[k] == ")":
                depth -= 1
                if depth == 0:
                    break
            k += 1
        else:
            continue
        k += 1
        while k < n and texts[k] != "{":
            if texts[k] in {";", "}"}:
                k = -1
                break
            k += 1
        if k < 0 or k >= n:
            continue
        body_start = tokens[k].start
        depth = 0
        close = -1
        for m in range(k, n):
            if texts[m] == "{":
                depth += 1
            elif texts[m] == "}":
                depth -= 1
                if depth == 0:
                    close = m
                    break
        if close < 0:
            continue
        spans.append(MethodSpan(
            name=texts[i + 1],
            start=tokens[j].start,
            body_start=body_start,
            end=tokens[close].end,
            modifiers={texts[m] for m in range(j, i)},
        ))
    return spans


@dataclass
class TestClassInfo:
    """One top-level class of a test-source file, with injection metadata."""

    file_path: Path
    package_name: str
    class_name: str
    imports: list[str]
    token_set: set[str]
    extends_testcase: bool
    insertion_offset: int  # index of the brace closing the class body
    source: str
    is_public: bool = True

    @property
    def qualified_name(self) -> str:
        if self.package_name:
            return f"{self.package_name}.{self.class_name}"
        return self.class_name


def parse_test_classes(file_path: Path, source: str) -> list[TestClassInfo]:
    """Parse the top-level classes of one test-source file.

    Raises UnbalancedBraces when the file cannot be brace-balanced.
    """
    tokens = scan(source)
    texts = [t.text for t in tokens]
    if not braces_balanced(source):
        raise UnbalancedBraces(str(file_path))

    package_name = ""
    imports: list[str] = []
    n = len(texts)
    depth = 0
    classes: list[TestClassInfo] = []
    i = 0
    while i < n:
        t = texts[i]
        if t == "{":
            depth += 1
        elif t == "}":
            depth -= 1
        elif depth == 0 and t == "package":
            j = i + 1
            parts = []
            while j < n and texts[j] != ";":
                parts.append(texts[j])
                j += 1
            package_name = "".join(parts)
            i = j
        elif depth == 0 and t == "import":
            j = i + 1
            while j < n and texts[j] != ";":
                j += 1
            if j < n:
                imports.append(source[tokens[i].start:tokens[j].end])
                i = j
        elif depth == 0 and t == "class" and (i == 0 or texts[i - 1] != "."):
            if i + 1 < n and is_identifier(texts[i + 1]):
                class_name = texts[i + 1]
                j = i + 2
                extends_testcase = False
                while j < n and texts[j] != "{":
                    if texts[j] == "extends":
                        k = j + 1
                        last = ""
                        while k < n and (is_identifier(texts[k]) or texts[k] == "."):
                            if is_identifier(texts[k]):
                                last = texts[k]
                            k += 1
                        extends_testcase = last == "TestCase"
                    j += 1
                body_depth = 0
                close = -1
                for m in range(j, n):
                    if texts[m] == "{":
                        body_depth += 1
                    elif texts[m] == "}":
                        body_depth -= 1
                        if body_depth == 0:
                            close = m
                            break
                if close >= 0:
                    m = i
                    modifiers = set()
                    while m - 1 >= 0 and texts[m - 1] in _MODIFIERS:
                        modifiers.add(texts[m - 1])
                        m -= 1
                    classes.append(TestClassInfo(
                        file_path=file_path,
                        package_name=package_name,
                        class_name=class_name,
                        imports=list(imports),
                        token_set={texts[m] for m in range(i, close + 1)},
                        extends_testcase=extends_testcase,
                        insertion_offset=tokens[close].start,
                        source=source,
                        is_public="public" in modifiers,
                    ))
                    i = close
                    depth = 0
        i += 1
    return classes


DEFAULT_TEST_GLOBS = ("src/test/**/*.java",)


def index_test_classes(
    project_root: Path | str,
    globs: Iterable[str] = DEFAULT_TEST_GLOBS,
) -> list[TestClassInfo]:
    """Index every top-level class found under the test-source globs.

    Files that fail brace balancing are skipped with a warning; an empty
    match set raises NoTestSources.
    """
    root = Path(project_root)
    files = sorted({p for g in globs for p in root.glob(g) if p.is_file()})
    if not files:
        raise NoTestSources(f"no files matched {tuple(globs)} under {root}")
    classes: list[TestClassInfo] = []
    for path in files:
        source = path.read_bytes().decode("utf-8", errors="replace")
        try:
            classes.extend(parse_test_classes(path, source))
        except UnbalancedBraces:
            logger.warning("skipping unbalanced test source: %s", path)
    return classes
