"""Operator credit-score regression with histogram boosting and model fusion."""

from .binning import BinMapper, BinnedDataset, apply_bins, fit_bins
from .data import (
    ColumnSpec,
    Dataset,
    PreprocessConfig,
    Preprocessor,
    Schema,
    SUBSET_ORDER,
    canonical_schema,
    fit_preprocessor,
    load_csv,
    preprocess,
    save_csv,
    split_subsets,
    train_test_split,
)
from .fusion import (
    FusionConfig,
    FusionModel,
    MetaFeatures,
    fit_base_models,
    fit_blending,
    fit_fusion,
    fit_stacking,
    fit_voting_weights,
    fuse_averaging,
    predict_fusion,
)
from .gbdt import (
    BoostedModel,
    BoosterParams,
    GrowthCounters,
    Histogram,
    SplitCandidate,
    Tree,
    best_split_from_histogram,
    best_split_presorted,
    build_histogram,
    compute_gradients,
    grow_tree_leafwise,
    subtract_histogram,
)
from .learners import (
    CartParams,
    FittedLearner,
    ForestParams,
    LearnerSpec,
    LinearParams,
    fit_cart,
    fit_learner,
    fit_linear,
    fit_random_forest,
)
from .metrics import MetricsReport, build_report_table, evaluate, write_report_csv
from .synth import generate_synthetic, planted_signal

__version__ = "0.1.0"
