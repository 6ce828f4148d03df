"""Detect time-variant causal structure in event sequences.

The pipeline: parse event logs, sessionize, expand sessions into prefix
feature rows, run constraint-based structure discovery per group, iterate
group membership against per-group generative models, then mine sequential
patterns and compute view geometry. A FastAPI service and a click CLI wrap
the whole thing.
"""

from .analysis import AnalysisConfig, AnalysisResult, run_pipeline
from .discovery import (
    CITestResult,
    CorrelationMatrix,
    Diagnostics,
    SkeletonResult,
    ci_test,
    correlation_matrix,
    discover,
    orient_edges,
    partial_correlation,
    pc_skeleton,
)
from .errors import (
    CatalogError,
    CausalSeqError,
    ConfigError,
    EmptyDatasetError,
    GraphError,
    InsufficientDataError,
    NumericError,
    RowParseError,
)
from .events import (
    Dataset,
    Event,
    EventCatalog,
    EventSequence,
    Session,
    dataset_from_json,
    dataset_to_json,
    derive_level_events,
    filter_noise,
    merge_consecutive,
    parse_events,
    preprocess,
    read_csv,
    read_jsonl,
    sessionize,
    sessionize_dataset,
    write_csv,
)
from .features import FeatureTable, bag_of_words, build_table, prefix_expand
from .graph import CausalEdge, CausalGraph
from .grouping import (
    CausalStateSet,
    GraphModel,
    GroupAssignment,
    SequenceEmbedding,
    StateConfig,
    assign,
    detect_states,
    embed_sequence,
    fit_generative,
    initial_clusters,
    session_loglik,
)
from .layout import (
    FlowConfig,
    FlowLayout,
    GlyphStats,
    causal_order_columns,
    flow_layout,
    force_step,
    glyph_stats,
    topo_order,
    topo_order_edges,
)
from .patterns import (
    SequentialPattern,
    Subgraph,
    ancestors_subgraph,
    explained_by,
    match_sequences,
    mine_patterns,
)
from .store import Store
from .synthetic import (
    GroundTruth,
    RecoveryScore,
    majority_labels,
    random_dag,
    sample_sequences,
    score_recovery,
)

__version__ = "0.1.0"
