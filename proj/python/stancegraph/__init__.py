"""Social-context stance classification and vaccine-hesitancy analytics."""

from ._core import (
    Corpus,
    EmbeddingProvider,
    Error,
    GbdtModel,
    HashedNgramEncoder,
    InputError,
    PrecomputedStore,
    SocialGraph,
    TrainConfig,
    aggregate_history_mean,
    aggregate_history_pe,
    average_observed_agreement,
    classification_metrics,
    classify_change,
    clean_text,
    fleiss_kappa,
    fnv1a64,
    gat_attend,
    gbdt_fit,
    hesitancy_score,
    heterophily_benchmark,
    is_vaccine_related,
    krippendorff_alpha,
    largest_component,
    train,
)

__all__ = [name for name in dir() if not name.startswith("_")]
