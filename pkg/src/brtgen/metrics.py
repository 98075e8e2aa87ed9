"""Evaluation over per-bug records: selection precision/recall, top-n hit
and wasted-effort counts, ROC-AUC of the agreement score, threshold
sweeps, and the copy-and-paste baseline."""

from __future__ import annotations

import html
import re
import textwrap
from dataclasses import dataclass, field

from . import lexer
from .reports import BugReport


@dataclass
class BugEvalRecord:
    """Everything evaluation needs to know about one bug's run."""

    bug_id: str
    num_candidates: int
    num_fib: int
    has_brt: bool          # bug counts as reproduced
    selected: bool         # at the evaluated threshold
    ranked_brt_flags: list[bool]
    max_cluster_size: int

    def to_dict(self) -> dict:
        return {
            "bug_id": self.bug_id,
            "num_candidates": self.num_candidates,
            "num_fib": self.num_fib,
            "has_brt": self.has_brt,
            "selected": self.selected,
            "ranked_brt_flags": self.ranked_brt_flags,
            "max_cluster_size": self.max_cluster_size,
        }

    @classmethod
    def from_dict(cls, record: dict) -> "BugEvalRecord":
        return cls(**{k: record[k] for k in cls.__dataclass_fields__ if k in record})


def acc_wef(records: list[BugEvalRecord], n: int) -> tuple[int, int, float]:
    """Hit count and wasted effort within the top n, over selected bugs.

    Per bug, with r the 1-based rank of the first reproducing entry:
    it counts as a hit when r <= n; wasted effort is r-1 for hits, and
    min(n, list length) otherwise (all inspected entries were wasted).
    """
    acc = 0
    wef_sum = 0
    for record in records:
        flags = record.ranked_brt_flags
        rank = next((i + 1 for i, hit in enumerate(flags) if hit), None)
        if rank is not None and rank <= n:
            acc += 1
            wef_sum += rank - 1
        else:
            wef_sum += min(n, len(flags))
    mean = wef_sum / len(records) if records else 0.0
    return acc, wef_sum, mean


def _selected_at(record: BugEvalRecord, thr: int) -> bool:
    return record.max_cluster_size > thr


def precision_recall(
    records: list[BugEvalRecord], thr: int
) -> tuple[float | None, float]:
    """Selection quality at a threshold.

    precision = reproduced-and-selected / selected (None when nothing is
    selected); recall = reproduced-and-selected / reproduced.
    """
    selected = [r for r in records if _selected_at(r, thr)]
    reproduced_selected = sum(1 for r in selected if r.has_brt)
    reproduced_total = sum(1 for r in records if r.has_brt)
    precision = reproduced_selected / len(selected) if selected else None
    recall = reproduced_selected / reproduced_total if reproduced_total else 0.0
    return precision, recall


def roc_auc(records: list[BugEvalRecord]) -> float | None:
    """How well the max cluster size separates reproduced bugs.

    Computed as the rank statistic with midranks, so score ties earn half
    credit. None when either class is empty.
    """
    scored = [(r.max_cluster_size, r.has_brt) for r in records]
    positives = sum(1 for _, label in scored if label)
    negatives = len(scored) - positives
    if positives == 0 or negatives == 0:
        return None
    scored.sort(key=lambda pair: pair[0])
    rank_sum = 0.0
    i = 0
    while i < len(scored):
        j = i
        while j < len(scored) and scored[j][0] == scored[i][0]:
            j += 1
        midrank = (i + 1 + j) / 2.0  # average of 1-based ranks i+1 .. j
        rank_sum += midrank * sum(1 for k in range(i, j) if scored[k][1])
        i = j
    return (rank_sum - positives * (positives + 1) / 2.0) / (positives * negatives)


def threshold_sweep(records: list[BugEvalRecord], thr_range) -> list[dict]:
    """One row per threshold: how selection count and quality trade off."""
    rows = []
    for thr in thr_range:
        selected = [r for r in records if _selected_at(r, thr)]
        precision, recall = precision_recall(records, thr)
        rows.append({
            "thr": thr,
            "selected": len(selected),
            "reproduced_selected": sum(1 for r in selected if r.has_brt),
            "precision": precision,
            "recall": recall,
        })
    return rows


_FENCED_BLOCK = re.compile(r"```[^\n]*\n(.*?)\n?```", re.DOTALL)
_PRE_BLOCK = re.compile(r"<pre[^>]*>(.*?)</pre>", re.DOTALL | re.IGNORECASE)
_CODE_BLOCK = re.compile(r"<code[^>]*>(.*?)</code>", re.DOTALL | re.IGNORECASE)
_CODE_TAGS = re.compile(r"</?code[^>]*>", re.IGNORECASE)


def copy_paste_baseline(report: BugReport) -> list[str]:
    """Candidate tests lifted verbatim from code blocks in the report.

    A block containing a full method is used as that method; a bare
    statement list is wrapped into a method body; blocks with neither a
    method signature nor a statement terminator are discarded.
    """
    description = report.description
    blocks = list(_FENCED_BLOCK.findall(description))
    remainder = _FENCED_BLOCK.sub("", description)
    for pre in _PRE_BLOCK.findall(remainder):
        blocks.append(html.unescape(_CODE_TAGS.sub("", pre)))
    remainder = _PRE_BLOCK.sub("", remainder)
    for code in _CODE_BLOCK.findall(remainder):
        blocks.append(html.unescape(code))

    candidates = []
    for block in blocks:
        tokens = lexer.lex(block)
        if not tokens:
            continue
        spans = lexer.method_spans(block)
        if spans:
            span = spans[0]
            candidates.append(block[span.start:span.end])
        elif ";" in tokens:
            body = textwrap.dedent(block).strip("\n")
            candidates.append(
                "public void testFromReport() {\n"
                + textwrap.indent(body, "    ")
                + "\n}"
            )
    return candidates


@dataclass
class MetricsReport:
    """Aggregate metrics at one threshold, JSON-serializable."""

    thr: int
    n_values: list[int]
    acc_at_n: dict[int, int] = field(default_factory=dict)
    wef_at_n_sum: dict[int, int] = field(default_factory=dict)
    wef_at_n_mean: dict[int, float] = field(default_factory=dict)
    precision: float | None = None
    recall: float = 0.0
    roc_auc: float | None = None
    counts: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        record = {
            "thr": self.thr,
            "n_values": self.n_values,
            "acc_at_n": {str(n): v for n, v in self.acc_at_n.items()},
            "wef_at_n_sum": {str(n): v for n, v in self.wef_at_n_sum.items()},
            "wef_at_n_mean": {str(n): round(v, 6) for n, v in self.wef_at_n_mean.items()},
            "recall": round(self.recall, 6),
            "counts": self.counts,
        }
        if self.precision is not None:
            record["precision"] = round(self.precision, 6)
        if self.roc_auc is not None:
            record["roc_auc"] = round(self.roc_auc, 6)
        return record


def compute_metrics(
    records: list[BugEvalRecord],
    thr: int,
    n_values: list[int],
) -> MetricsReport:
    selected = [r for r in records if _selected_at(r, thr)]
    precision, recall = precision_recall(records, thr)
    report = MetricsReport(
        thr=thr,
        n_values=list(n_values),
        precision=precision,
        recall=recall,
        roc_auc=roc_auc(records),
        counts={
            "total_bugs": len(records),
            "fib_bugs": sum(1 for r in records if r.num_fib > 0),
            "selected_bugs": len(selected),
            "reproduced_selected": sum(1 for r in selected if r.has_brt),
        },
    )
    for n in n_values:
        acc, wef_sum, wef_mean = acc_wef(selected, n)
        report.acc_at_n[n] = acc
        report.wef_at_n_sum[n] = wef_sum
        report.wef_at_n_mean[n] = wef_mean
    return report
