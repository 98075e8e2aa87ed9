"""brtgen: generate, execute, and rank candidate bug-reproducing tests
from natural-language bug reports."""

from .errors import BrtError
from .injector import (
    ClassMatch,
    InjectionPlan,
    ProjectIndex,
    find_best_matching_class,
    inject,
    resolve_dependencies,
)
from .lexer import (
    DependencyRefs,
    TestClassInfo,
    extract_dependencies,
    index_test_classes,
    lex,
    token_set,
)
from .llm import (
    CandidateTest,
    GenerationConfig,
    extract_method_from_chat,
    sample,
    trim_completion,
)
from .metrics import (
    BugEvalRecord,
    MetricsReport,
    acc_wef,
    compute_metrics,
    copy_paste_baseline,
    precision_recall,
    roc_auc,
    threshold_sweep,
)
from .pipeline import Pipeline, PipelineConfig, load_pipeline_config, run_pipeline
from .prompts import Prompt, PromptConfig, build_chat_prompt, build_completion_prompt
from .ranking import (
    Cluster,
    FailureKey,
    RankedSuggestions,
    SelectionDecision,
    cluster_fibs,
    dedup_syntactic,
    match_output_with_report,
    match_test_with_report,
    rank,
    select,
)
from .reports import BugReport, DatasetManifest, ExampleEntry, fetch_remote_report, load_report
from .runner import ExecutionOutcome, ProjectConfig, classify_brt, classify_fib, execute
from .workspace import Workspace

__version__ = "0.1.0"
