"""End-to-end orchestration: prompt, generate, inject, execute, rank,
evaluate — with each stage checkpointed per bug in the workspace.

A completed stage file is replayed instead of recomputed, so the expensive
stages (generation, execution) run at most once and a finished workspace
is fully deterministic to re-process.
"""

from __future__ import annotations

import csv
import json
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import injector, llm, metrics as metrics_mod, patching, ranking, runner
from .errors import BrtError, ConfigError, MissingUpstreamStage
from .lexer import TestClassInfo, index_test_classes
from .llm import CandidateTest, GenerationConfig
from .prompts import Prompt, PromptConfig, build_prompt, default_examples
from .reports import BugReport, DatasetManifest, ExampleEntry, load_manifest
from .runner import ExecutionOutcome, ProjectConfig, load_project_config
from .workspace import Workspace

logger = logging.getLogger(__name__)

STAGE_NAMES = ("prompt", "generate", "inject", "execute", "rank", "evaluate")

DEFAULT_SWEEP_RANGE = range(0, 11)


@dataclass
class PipelineConfig:
    workspace_root: Path
    dataset: Path
    prompt: PromptConfig
    generation: GenerationConfig
    selection_thr: int = 1
    eval_n_values: list[int] = field(default_factory=lambda: [1, 3, 5])
    message_abstraction: bool = False


def _prompt_config_from_dict(record: dict) -> PromptConfig:
    examples_spec = record.get("examples", "default")
    if examples_spec == "default":
        examples = default_examples()
    else:
        examples = [
            ExampleEntry(
                report=BugReport.from_dict(e["report"]),
                reproducing_test=e["reproducing_test"],
            )
            for e in examples_spec
        ]
    return PromptConfig(
        examples=examples,
        include_stack_trace=record.get("include_stack_trace", False),
        constructor_info=record.get("constructor_info"),
        chat_mode=record.get("chat_mode", False),
        token_budget=record.get("token_budget", 7000),
    )


def load_pipeline_config(path: Path | str) -> PipelineConfig:
    """Read the single JSON config document; paths resolve against it."""
    path = Path(path)
    try:
        record = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    base = path.parent
    try:
        config = PipelineConfig(
            workspace_root=base / record["workspace_root"],
            dataset=base / record["dataset"],
            prompt=_prompt_config_from_dict(record.get("prompt", {})),
            generation=GenerationConfig(**record.get("generation", {})),
            selection_thr=record.get("selection_thr", 1),
            eval_n_values=record.get("eval_n_values", [1, 3, 5]),
            message_abstraction=record.get("message_abstraction", False),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if not config.dataset.exists():
        raise ConfigError(f"dataset manifest not found: {config.dataset}")
    return config


class Pipeline:
    """Holds loaded config plus per-project caches and execution locks."""

    def __init__(self, config: PipelineConfig):
        self.config = config
        self.workspace = Workspace(config.workspace_root)
        self.manifest: DatasetManifest = load_manifest(config.dataset)
        self.projects: dict[str, ProjectConfig] = {
            project_id: load_project_config(p)
            for project_id, p in self.manifest.project_configs.items()
        }
        for project in self.projects.values():
            if not project.buggy_root.exists():
                raise ConfigError(f"buggy_root not found: {project.buggy_root}")
        self._class_index: dict[str, list[TestClassInfo]] = {}
        self._project_index: dict[str, injector.ProjectIndex] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._cache_lock = threading.Lock()

    def reports(self, bug_id: str | None = None) -> list[BugReport]:
        if bug_id is None:
            return list(self.manifest.reports)
        matches = [r for r in self.manifest.reports if r.id == bug_id]
        if not matches:
            raise ConfigError(f"bug {bug_id!r} is not in the dataset")
        return matches

    def project_for(self, report: BugReport) -> ProjectConfig:
        return self.projects[report.project_id]

    def _execution_lock(self, project_id: str) -> threading.Lock:
        with self._cache_lock:
            return self._locks.setdefault(project_id, threading.Lock())

    def class_index(self, project: ProjectConfig) -> list[TestClassInfo]:
        with self._cache_lock:
            if project.project_id not in self._class_index:
                self._class_index[project.project_id] = index_test_classes(
                    project.buggy_root, project.test_source_globs
                )
            return self._class_index[project.project_id]

    def project_index(self, project: ProjectConfig) -> injector.ProjectIndex:
        with self._cache_lock:
            if project.project_id not in self._project_index:
                self._project_index[project.project_id] = injector.ProjectIndex.scan(
                    project.buggy_root, project.source_globs, project.test_source_globs
                )
            return self._project_index[project.project_id]

    # ------------------------------------------------------------------
    # Stages
    # ------------------------------------------------------------------

    def stage_prompt(self, report: BugReport) -> Prompt:
        return build_prompt(report, self.config.prompt)

    def candidates_from_store(self, report: BugReport, prompt: Prompt) -> list[CandidateTest]:
        rows = sorted(
            self.workspace.read_records(report.id, "generations"),
            key=lambda r: r["sample_index"],
        )
        return [
            CandidateTest.from_raw(
                report.id,
                row["sample_index"],
                row["raw_completion"],
                prompt.id,
                prompt.stem,
                self.config.generation.stop_marker,
            )
            for row in rows
        ]

    def stage_generate(self, report: BugReport, force: bool = False) -> list[CandidateTest]:
        prompt = self.stage_prompt(report)
        if force:
            self.workspace.clear_stage(report.id, "generations")
        if self.workspace.has_stage(report.id, "generations"):
            return self.candidates_from_store(report, prompt)
        return llm.sample(prompt, self.config.generation, self.workspace, report.id)

    def stage_inject(
        self, report: BugReport, candidates: list[CandidateTest], force: bool = False
    ) -> list[injector.InjectionPlan]:
        if force:
            self.workspace.clear_stage(report.id, "injections")
        if self.workspace.has_stage(report.id, "injections"):
            return self._plans_from_store(report)

        project = self.project_for(report)
        classes = self.class_index(project)
        index = self.project_index(project)
        plans = []
        for candidate in candidates:
            plan = self._plan_candidate(candidate, project, classes, index)
            plans.append(plan)
            record = {
                "bug_id": report.id,
                "sample_index": candidate.sample_index,
                "class": plan.class_qualified_name,
                "file": plan.file_rel_path,
                "method": plan.final_method_name,
                "score": round(plan.target_class.score, 6) if plan.target_class else 0.0,
                "added_imports": plan.added_imports,
                "unresolved": plan.unresolved,
                "status": plan.status,
                "reason": plan.failure_reason,
            }
            if plan.status == "planned":
                patch = patching.make_patch(
                    plan.original_file_content,
                    plan.modified_file_content,
                    plan.file_rel_path,
                )
                self.workspace.write_patch(report.id, candidate.sample_index, patch)
            self.workspace.persist_record(report.id, "injections", record)
        return plans

    def _plan_candidate(
        self,
        candidate: CandidateTest,
        project: ProjectConfig,
        classes: list[TestClassInfo],
        index: injector.ProjectIndex,
    ) -> injector.InjectionPlan:
        def skipped(reason: str) -> injector.InjectionPlan:
            return injector.InjectionPlan(
                bug_id=candidate.bug_id,
                sample_index=candidate.sample_index,
                class_qualified_name="",
                file_rel_path="",
                final_method_name="",
                added_imports=[],
                unresolved=[],
                original_file_content="",
                modified_file_content="",
                status="failed",
                failure_reason=reason,
            )

        if candidate.empty:
            return skipped("empty completion")
        try:
            refs = injector.lexer.extract_dependencies(candidate.method_text)
        except BrtError as exc:
            return skipped(str(exc))
        if project.framework == "annotation-style":
            refs.uses_test_annotation = True  # inject() will prepend @Test
        match = injector.find_best_matching_class(candidate, classes)
        resolution = injector.resolve_dependencies(
            refs,
            match.class_info,
            index,
            assertion_import=project.assertion_import,
            test_annotation_import=project.test_annotation_import,
        )
        return injector.inject(
            candidate,
            match,
            resolution.imports,
            unresolved=resolution.unresolved,
            project_root=project.buggy_root,
            require_test_annotation=project.framework == "annotation-style",
        )

    def _plans_from_store(self, report: BugReport) -> list[injector.InjectionPlan]:
        project = self.project_for(report)
        plans = []
        for record in self.workspace.read_records(report.id, "injections"):
            plan = injector.InjectionPlan(
                bug_id=record["bug_id"],
                sample_index=record["sample_index"],
                class_qualified_name=record["class"],
                file_rel_path=record["file"],
                final_method_name=record["method"],
                added_imports=record["added_imports"],
                unresolved=record["unresolved"],
                original_file_content="",
                modified_file_content="",
                status=record["status"],
                failure_reason=record.get("reason"),
            )
            if plan.status == "planned":
                original = (project.buggy_root / plan.file_rel_path).read_bytes().decode("utf-8")
                patch = self.workspace.patch_path(report.id, plan.sample_index).read_text(
                    encoding="utf-8"
                )
                plan.original_file_content = original
                plan.modified_file_content = patching.apply_patch(original, patch)
            plans.append(plan)
        return plans

    def stage_execute(
        self, report: BugReport, plans: list[injector.InjectionPlan], force: bool = False
    ) -> dict[tuple[int, str], ExecutionOutcome]:
        if force:
            self.workspace.clear_stage(report.id, "outcomes")
        if self.workspace.has_stage(report.id, "outcomes"):
            rows = self.workspace.read_records(report.id, "outcomes")
            outcomes = [ExecutionOutcome.from_dict(r) for r in rows]
            return {(o.sample_index, o.version): o for o in outcomes}

        project = self.project_for(report)
        results: dict[tuple[int, str], ExecutionOutcome] = {}

        def run_one(plan: injector.InjectionPlan, version: str) -> ExecutionOutcome:
            try:
                return runner.execute(plan, project, version)
            except BrtError as exc:
                logger.warning("%s sample %d (%s): %s", report.id, plan.sample_index, version, exc)
                return ExecutionOutcome(
                    bug_id=report.id,
                    sample_index=plan.sample_index,
                    version=version,
                    status="runner_error",
                    failure_message=str(exc),
                )

        with self._execution_lock(project.project_id):
            planned = [p for p in plans if p.status == "planned"]
            for plan in planned:
                outcome = run_one(plan, "buggy")
                results[(plan.sample_index, "buggy")] = outcome
                self.workspace.persist_record(report.id, "outcomes", outcome.to_dict())
            if project.fixed_root is not None:
                for plan in planned:
                    buggy = results[(plan.sample_index, "buggy")]
                    if runner.classify_fib(buggy):
                        outcome = run_one(plan, "fixed")
                        results[(plan.sample_index, "fixed")] = outcome
                        self.workspace.persist_record(report.id, "outcomes", outcome.to_dict())
        return results

    def stage_rank(
        self,
        report: BugReport,
        candidates: list[CandidateTest],
        outcomes: dict[tuple[int, str], ExecutionOutcome],
        force: bool = False,
    ) -> dict:
        if force:
            self.workspace.clear_stage(report.id, "ranking")
        if self.workspace.has_stage(report.id, "ranking"):
            return self.workspace.read_records(report.id, "ranking")[0]

        by_index = {c.sample_index: c for c in candidates}
        fibs = []
        for (sample_index, version), outcome in sorted(outcomes.items()):
            if version != "buggy" or sample_index not in by_index:
                continue
            if runner.classify_fib(outcome):
                fibs.append((by_index[sample_index], outcome))
        clusters = ranking.cluster_fibs(fibs, self.config.message_abstraction)
        decision = ranking.select(clusters, self.config.selection_thr)
        entries = []
        if decision.selected:
            suggestions = ranking.rank(clusters, report, decision)
            entries = [
                {
                    "rank": entry.rank,
                    "sample_index": entry.candidate.sample_index,
                    "method_text": entry.candidate.method_text,
                    "cluster_type": entry.cluster_key.failure_type,
                    "cluster_message": entry.cluster_key.normalized_message,
                    "br_output_match": entry.br_output_match,
                    "br_test_match": entry.br_test_match,
                    "token_count": entry.token_count,
                }
                for entry in suggestions.ordered
            ]
        record = {
            "bug_id": report.id,
            "threshold": decision.threshold,
            "max_cluster_size": decision.max_cluster_size,
            "selected": decision.selected,
            "entries": entries,
        }
        self.workspace.persist_record(report.id, "ranking", record)
        return record

    def process_bug(self, report: BugReport, force: bool = False) -> dict:
        candidates = self.stage_generate(report, force)
        plans = self.stage_inject(report, candidates, force)
        outcomes = self.stage_execute(report, plans, force)
        return self.stage_rank(report, candidates, outcomes, force)

    # ------------------------------------------------------------------
    # Evaluation
    # ------------------------------------------------------------------

    def eval_record(self, report: BugReport) -> metrics_mod.BugEvalRecord:
        ws = self.workspace
        if not ws.has_stage(report.id, "ranking"):
            raise MissingUpstreamStage("ranking")
        ranking_record = ws.read_records(report.id, "ranking")[0]
        outcome_rows = [ExecutionOutcome.from_dict(r) for r in ws.read_records(report.id, "outcomes")]
        outcomes = {(o.sample_index, o.version): o for o in outcome_rows}
        num_candidates = len(ws.read_records(report.id, "generations"))

        fib_indices = {
            idx for (idx, version), o in outcomes.items()
            if version == "buggy" and o.status == "fail"
        }

        def is_brt(sample_index: int) -> bool:
            buggy = outcomes.get((sample_index, "buggy"))
            fixed = outcomes.get((sample_index, "fixed"))
            return bool(buggy and fixed and runner.classify_brt(buggy, fixed))

        return metrics_mod.BugEvalRecord(
            bug_id=report.id,
            num_candidates=num_candidates,
            num_fib=len(fib_indices),
            has_brt=any(is_brt(idx) for idx in fib_indices),
            selected=ranking_record["selected"],
            ranked_brt_flags=[is_brt(e["sample_index"]) for e in ranking_record["entries"]],
            max_cluster_size=ranking_record["max_cluster_size"],
        )

    def stage_evaluate(
        self,
        reports: list[BugReport] | None = None,
        force: bool = False,
        thr_range=None,
        n_values: list[int] | None = None,
    ) -> metrics_mod.MetricsReport:
        if reports is None:
            reports = [r for r in self.manifest.reports if self.workspace.has_stage(r.id, "ranking")]
        records = []
        for report in sorted(reports, key=lambda r: r.id):
            record = self.eval_record(report)
            records.append(record)
            if force:
                self.workspace.clear_stage(report.id, "metrics")
            if not self.workspace.has_stage(report.id, "metrics"):
                self.workspace.persist_record(report.id, "metrics", record.to_dict())

        report_out = metrics_mod.compute_metrics(
            records, self.config.selection_thr, n_values or self.config.eval_n_values
        )
        path = self.workspace.metrics_report_path()
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(
            json.dumps(report_out.to_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )

        rows = metrics_mod.threshold_sweep(records, thr_range or DEFAULT_SWEEP_RANGE)
        with self.workspace.sweep_path().open("w", encoding="utf-8", newline="") as handle:
            writer = csv.DictWriter(
                handle,
                fieldnames=["thr", "selected", "reproduced_selected", "precision", "recall"],
            )
            writer.writeheader()
            for row in rows:
                row = dict(row)
                row["precision"] = "" if row["precision"] is None else f"{row['precision']:.6f}"
                row["recall"] = f"{row['recall']:.6f}"
                writer.writerow(row)
        return report_out


def run_pipeline(
    config: PipelineConfig,
    bug_id: str | None = None,
    jobs: int = 1,
    force: bool = False,
) -> tuple[int, dict[str, str]]:
    """Process every bug, then evaluate. Returns (exit_code, errors)."""
    pipeline = Pipeline(config)
    reports = pipeline.reports(bug_id)
    errors: dict[str, str] = {}

    def guarded(report: BugReport) -> None:
        try:
            pipeline.process_bug(report, force)
        except Exception as exc:  # a single bug never aborts the run
            logger.exception("bug %s failed", report.id)
            errors[report.id] = str(exc)

    if jobs > 1 and len(reports) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(guarded, reports))
    else:
        for report in reports:
            guarded(report)

    pipeline.stage_evaluate(force=force)
    return (3 if errors else 0), errors


def run_single_stage(
    config: PipelineConfig,
    stage: str,
    bug_id: str | None = None,
    force: bool = False,
    thr_range=None,
    n_values: list[int] | None = None,
) -> tuple[int, dict[str, str]]:
    """Run exactly one stage, reading its upstream from the workspace."""
    if stage not in STAGE_NAMES:
        raise ConfigError(f"unknown stage: {stage} (choose from {STAGE_NAMES})")
    pipeline = Pipeline(config)
    ws = pipeline.workspace
    errors: dict[str, str] = {}

    if stage == "evaluate":
        reports = None if bug_id is None else pipeline.reports(bug_id)
        pipeline.stage_evaluate(reports, force=force, thr_range=thr_range, n_values=n_values)
        return 0, errors

    for report in pipeline.reports(bug_id):
        try:
            if stage == "prompt":
                prompt = pipeline.stage_prompt(report)
                print(f"# bug {report.id} prompt {prompt.id}")
                print(prompt.text if prompt.text is not None
                      else json.dumps(prompt.messages, indent=2))
                continue
            if stage == "generate":
                pipeline.stage_generate(report, force)
                continue
            if not ws.has_stage(report.id, "generations"):
                raise MissingUpstreamStage("generations")
            prompt = pipeline.stage_prompt(report)
            candidates = pipeline.candidates_from_store(report, prompt)
            if stage == "inject":
                pipeline.stage_inject(report, candidates, force)
                continue
            if not ws.has_stage(report.id, "injections"):
                raise MissingUpstreamStage("injections")
            plans = pipeline._plans_from_store(report)
            if stage == "execute":
                pipeline.stage_execute(report, plans, force)
                continue
            if not ws.has_stage(report.id, "outcomes"):
                raise MissingUpstreamStage("outcomes")
            rows = ws.read_records(report.id, "outcomes")
            outcomes = {
                (o.sample_index, o.version): o
                for o in (ExecutionOutcome.from_dict(r) for r in rows)
            }
            pipeline.stage_rank(report, candidates, outcomes, force)
        except Exception as exc:
            logger.exception("stage %s failed for %s", stage, report.id)
            errors[report.id] = str(exc)
    return (3 if errors else 0), errors
