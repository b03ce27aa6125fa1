"""Hybrid recommender for ontology-annotated items: implicit-feedback matrix
factorization (ALS, BPR) fused multiplicatively with ontology semantic
similarity, evaluated under user-by-item block cross-validation."""

from .cf import (
    AlsConfig,
    BprConfig,
    LatentFactorModel,
    cf_score,
    load_model,
    save_model,
    train_als,
    train_bpr,
)
from .dataset import (
    FoldSplit,
    IngestConfig,
    InteractionRecord,
    InteractionSet,
    StatsSummary,
    dataset_stats,
    load_interactions,
    make_folds,
)
from .errors import (
    ConfigError,
    ContractViolation,
    DataError,
    IngestError,
    MappingError,
    NumericalError,
    OntologyError,
    OntorecError,
    ProvenanceError,
    ValidationError,
)
from .evaluation import (
    Algorithm,
    FoldReport,
    MetricReport,
    aggregate,
    evaluate_fold,
    f_measure_at_k,
    lauc_at_k,
    mrr_at_k,
    ndcg_at_k,
    precision_at_k,
    recall_at_k,
)
from .ontology import (
    IcMode,
    Metric,
    OntologyGraph,
    SharedIcMode,
    common_ancestors,
    compute_ic,
    load_ontology,
    parse_obo,
    path_counts,
    shared_ic,
    similarity,
)
from .ranker import CandidateScore, FusionMode, RankedList, fuse, rank_user
from .semantic import (
    SimilarityCache,
    UserProfile,
    build_profiles,
    build_similarity_cache,
    load_cache,
    onto_score,
    onto_score_all,
    save_cache,
)

__version__ = "0.1.0"
