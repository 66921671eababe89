"""Co-set expansion engine for relation extraction.

Grows per-relation exemplar pair sets from small seeds using mask-probed
embeddings, ranks contrastive (confusable) relation classes, and fuses
expansion scores with an external classifier's scores to re-rank predictions.
"""

from .core import (
    ANALOGOUS_PATTERN,
    CONTRASTIVE_PATTERN,
    MENTION_CONTEXT,
    PROVENANCES,
    SEED_ORIGIN,
    EXPANDED_ORIGIN,
    ContrastiveSet,
    Embedding,
    EmbeddingStore,
    ExemplarMember,
    ExemplarSet,
    ExpansionConfig,
    PairMention,
)
from .errors import (
    CosetxError,
    DimensionMismatchError,
    DuplicateEntryError,
    MissingEmbeddingError,
    ProviderError,
    StoreIOError,
    ValidationError,
)
from .scoring import ScoreValue, cosine, fuse_score, pair_class_score
from .probing import (
    ANALOGOUS_KIND,
    CONTRASTIVE_KIND,
    DEFAULT_PATTERNS,
    MASK_LITERAL,
    EmbeddingProvider,
    HearstPattern,
    ProbeQuery,
    class_representations,
    mention_representation,
    pair_representation,
    render_query,
)
from .providers import HashEmbeddingProvider, HttpEmbeddingProvider, provider_from_spec
from .classrank import (
    AGGREGATE_ID,
    RankedClassList,
    aggregate_rankings,
    build_contrastive_map,
    seed_class_ranking,
    select_contrastive,
)
from .coexpand import (
    ARITHMETIC,
    GEOMETRIC,
    EnsembleResult,
    RoundOutcome,
    SampleDraw,
    ensemble_score,
    expand,
    expand_iteration,
    pair_rank,
    sample_exemplars,
    sampled_contrastive_score,
    sampled_positive_score,
    unit_vector,
)
from .fuse_eval import (
    ClassifierScores,
    Prediction,
    confusion_csv,
    confusion_matrix,
    fuse_predict,
    fuse_predict_all,
    lambda_sweep,
    metrics,
)
from .ingest import (
    DEFAULT_PRONOUNS,
    SCHEMAS,
    DatasetSchema,
    SeedFile,
    convert_semeval,
    filter_seeds,
    get_schema,
    load_classifier_scores,
    load_patterns,
    load_relation_instances,
    load_seed_sets,
    load_store,
    save_seed_sets,
    save_store,
)
from .report import render_confusion_heatmap, render_lambda_sweep

__version__ = "0.1.0"
