"""trollmap: authenticity-category mapping for influence-network accounts.

The pipeline has two legs: temporal hashtag label propagation (span-wise
cosine similarity over binary hashtag vectors, mode-aggregated) and a
balanced-subsample random forest over eight aggregated behavioral
features, with chi-square feature ranking, full evaluation metrics and two
cross-dataset validation procedures.
"""

from .errors import (
    ConfigError,
    DependencyError,
    EmptyInputError,
    EvaluationError,
    FeatureError,
    LabelError,
    SchemaError,
    SpanConfigError,
    TrainingError,
    TrollmapError,
)
from .taxonomy import (
    CATEGORIES,
    Category,
    Label,
    LabelSet,
    LabelSource,
    merge_labels,
    parse_label_file,
)
from .ingest import (
    FEATURE_NAMES,
    AccountProfile,
    FeatureVector,
    TweetRecord,
    aggregate_accounts,
    parse_tweet_records,
    read_profiles,
    write_profiles,
)
from .hashtags import canonicalize_hashtag
from .propagation import (
    PropagationReport,
    PropagationResult,
    SpanVectorSet,
    TimeSpan,
    aggregate_modes,
    build_span_vectors,
    cosine_similarity,
    partition_spans,
    propagate_labels,
    propagate_span,
)
from .features import (
    FeatureMatrix,
    FeatureScoreReport,
    chi2_scores,
    l1_normalize,
    matrix_from_profiles,
    pearson_correlation_matrix,
    select_top_k,
)
from .forest import (
    Forest,
    ForestParams,
    balanced_subsample_weights,
    depth_sweep,
    gini_impurity,
    load_forest,
    predict,
    predict_batch,
    save_forest,
    train_forest,
    train_tree,
)
from .baselines import (
    BASELINE_KINDS,
    compare_classifiers,
    predict_baseline,
    predict_baseline_batch,
    train_baseline,
)
from .evaluation import (
    AgreementReport,
    ClassificationReport,
    ConfusionMatrix,
    OverlapReport,
    agreement_validation,
    classification_report,
    overlap_validation,
    stratified_kfold,
    stratified_split,
)
from .synth import SyntheticDataset, SyntheticSpec, classifier_spec, generate_synthetic

__version__ = "0.1.0"
