"""Topic-chain continuity analysis for pro-drop discourse.

Given an annotated discourse and word-embedding sources, this package builds
per-character verb histories, scores history/current-verb relevance and
correct-character salience at every verb, and tests whether dropped-pronoun
verbs carry higher salience than overt ones.
"""

__version__ = "0.1.0"

from .chains import HistoryEntry, UsageTable, build_usage_table
from .corpus import (
    AnnotationError,
    CharacterLabel,
    CorpusSummary,
    Discourse,
    Token,
    ValidationReport,
    VerbEvent,
    format_annotations,
    parse_annotations,
    summarize,
    validate,
)
from .embeddings import (
    EmbeddingSource,
    VectorFormatError,
    ZeroVectorError,
    baseline_source,
    cosine,
    load_lexicon,
    load_token_table,
    vector_for,
)
from .pipeline import ReportBundle, RunConfig, SourceSpec, run_pipeline
from .relevance import (
    RelevanceComputer,
    RelevanceProfile,
    clause_weight,
    relevance_profile,
    unweighted_relevance,
    weighted_relevance,
)
from .salience import SalienceDataset, SalienceRecord, salience_dataset, salience_score
from .stats import (
    AccuracyResult,
    LogRegModel,
    RankSumResult,
    ResampledTest,
    rank_sum_test,
    repeated_split_accuracy,
    resampled_group_test,
    train_logreg,
)

__all__ = [
    "AnnotationError",
    "AccuracyResult",
    "CharacterLabel",
    "CorpusSummary",
    "Discourse",
    "EmbeddingSource",
    "HistoryEntry",
    "LogRegModel",
    "RankSumResult",
    "RelevanceComputer",
    "RelevanceProfile",
    "ReportBundle",
    "ResampledTest",
    "RunConfig",
    "SalienceDataset",
    "SalienceRecord",
    "SourceSpec",
    "Token",
    "UsageTable",
    "ValidationReport",
    "VectorFormatError",
    "VerbEvent",
    "ZeroVectorError",
    "baseline_source",
    "build_usage_table",
    "clause_weight",
    "cosine",
    "format_annotations",
    "load_lexicon",
    "load_token_table",
    "parse_annotations",
    "rank_sum_test",
    "relevance_profile",
    "repeated_split_accuracy",
    "resampled_group_test",
    "run_pipeline",
    "salience_dataset",
    "salience_score",
    "summarize",
    "train_logreg",
    "unweighted_relevance",
    "validate",
    "vector_for",
    "weighted_relevance",
]
