"""Taxonomy-mined outlier detection datasets and embedding evaluation.

The pipeline: build a taxonomy graph from an entity dump, prune it, draw
clusters of sibling instances with graded outliers, resolve entity ids to
link-anchor surfaces, filter degenerate groups, and score embeddings by
how reliably compactness ranks the outlier last.
"""

from .evaluate import (
    EvalReport,
    LookupPolicy,
    evaluate_dataset,
    intersect_vocabulary,
    phrase_vector,
    rank_outlier,
)
from .formats import (
    DatasetRecord,
    Embedding,
    EntityRecord,
    ParseError,
    load_embedding,
    read_dataset,
    read_entity_records,
    write_dataset,
)
from .generator import GeneratorConfig, RawGroup, generate_dataset, generate_results
from .graph import KnowledgeGraph, PruneStats, build_graph, prune_graph
from .refine import (
    AnchorIndex,
    LanguageProfile,
    build_anchor_index,
    profile_for_language,
    refine_group,
    resolve_surface,
)

__version__ = "0.1.0"

__all__ = [
    "AnchorIndex",
    "DatasetRecord",
    "Embedding",
    "EntityRecord",
    "EvalReport",
    "GeneratorConfig",
    "KnowledgeGraph",
    "LanguageProfile",
    "LookupPolicy",
    "ParseError",
    "PruneStats",
    "RawGroup",
    "build_anchor_index",
    "build_graph",
    "evaluate_dataset",
    "generate_dataset",
    "generate_results",
    "intersect_vocabulary",
    "load_embedding",
    "phrase_vector",
    "profile_for_language",
    "prune_graph",
    "rank_outlier",
    "read_dataset",
    "read_entity_records",
    "refine_group",
    "resolve_surface",
    "write_dataset",
    "__version__",
]
