"""natscore: score journal articles for research quality and national value
with a pluggable LLM provider, normalize citation counts by field and year,
and statistically compare the resulting indicators."""

from .analysis import (
    IndicatorDiff,
    MentionAudit,
    correlation_matrix,
    indicator_difference,
    mention_rate,
    mentions_country,
    top_bottom,
)
from .citations import NlcsRecord, compute_nlcs, log_citation
from .corpus import (
    Article,
    FilterConfig,
    Panel,
    PanelAssignment,
    assign_panel,
    filter_corpus,
    parse_corpus_csv,
    resolve_panels,
)
from .gateway import (
    RawResponse,
    ResponseCache,
    RetryPolicy,
    ScoreRequest,
    ScoringProvider,
    build_requests,
    execute_batch,
)
from .mock import FixedDistribution, TraitLink, default_score_model, mock_provider
from .prompts import (
    CountryProfile,
    PromptSpec,
    Regime,
    Variant,
    build_user_prompt,
    render_system_instructions,
)
from .scoring import (
    ArticleScoreSummary,
    ScoreSample,
    aggregate,
    extract_score,
    weighted_score,
)
from .stats import bh_select, bootstrap_ci, chi_squared_2x2, spearman
from .wata import TermStats, enriched_terms, sample_contexts, split_by_median, tokenize

__version__ = "0.1.0"

__all__ = [
    "Article",
    "ArticleScoreSummary",
    "CountryProfile",
    "FilterConfig",
    "FixedDistribution",
    "IndicatorDiff",
    "MentionAudit",
    "NlcsRecord",
    "Panel",
    "PanelAssignment",
    "PromptSpec",
    "RawResponse",
    "Regime",
    "ResponseCache",
    "RetryPolicy",
    "ScoreRequest",
    "ScoreSample",
    "ScoringProvider",
    "TermStats",
    "TraitLink",
    "Variant",
    "aggregate",
    "assign_panel",
    "bh_select",
    "bootstrap_ci",
    "build_requests",
    "build_user_prompt",
    "chi_squared_2x2",
    "compute_nlcs",
    "correlation_matrix",
    "default_score_model",
    "enriched_terms",
    "execute_batch",
    "extract_score",
    "filter_corpus",
    "indicator_difference",
    "log_citation",
    "mention_rate",
    "mentions_country",
    "mock_provider",
    "parse_corpus_csv",
    "render_system_instructions",
    "resolve_panels",
    "sample_contexts",
    "spearman",
    "split_by_median",
    "tokenize",
    "top_bottom",
    "weighted_score",
]
