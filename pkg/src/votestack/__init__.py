"""Homogeneous ensembles of small neural networks over tabular data,
fused by averaging, voting, stacking, or vote-filtered stacking."""

from .__about__ import __version__
from . import boosting, mlp
from .boosting import BoostConfig, BoostedModel
from .diversify import (
    LearnerTrainingSet,
    ResamplePlan,
    build_plan,
    materialize,
    out_of_bag,
    segment_sizes,
)
from .errors import (
    ConfigError,
    ContractError,
    DataError,
    DegenerateWeightsError,
    InsufficientDataError,
    TrainingDivergenceError,
    VoteStackError,
)
from .fusion import (
    REJECTED,
    FilteredFusion,
    FusionOutcome,
    PredictionMatrix,
    VarianceReport,
    VoteTally,
    WeightVector,
    apply_filtered,
    build_level1_features,
    filtered_fuse,
    fit_filtered,
    fit_meta,
    majority_vote,
    meta_fuse,
    model_average,
    outcome_accuracy,
    plurality_vote,
    variance_report,
    weights_from_accuracy,
    weights_from_inverse_variance,
)
from .harness import (
    ExperimentConfig,
    RunReport,
    SweepReport,
    emit_report,
    emit_sweep,
    run_experiment,
    sweep,
)
from .mlp import MlpConfig, MlpModel
from .seeding import child_rng, derive_seed
from .synthetic import gaussian_blobs
from .tabular import (
    Dataset,
    DatasetSchema,
    NormalizerState,
    SplitSpec,
    apply_normalizer,
    fit_normalizer,
    load_csv,
    save_csv,
    split,
)

__all__ = [
    "__version__",
    "BoostConfig", "BoostedModel", "boosting", "mlp",
    "LearnerTrainingSet", "ResamplePlan", "build_plan", "materialize",
    "out_of_bag", "segment_sizes",
    "ConfigError", "ContractError", "DataError", "DegenerateWeightsError",
    "InsufficientDataError", "TrainingDivergenceError", "VoteStackError",
    "REJECTED", "FilteredFusion", "FusionOutcome", "PredictionMatrix",
    "VarianceReport", "VoteTally", "WeightVector", "apply_filtered",
    "build_level1_features", "filtered_fuse", "fit_filtered", "fit_meta",
    "majority_vote", "meta_fuse", "model_average", "outcome_accuracy",
    "plurality_vote", "variance_report", "weights_from_accuracy",
    "weights_from_inverse_variance",
    "ExperimentConfig", "RunReport", "SweepReport", "emit_report",
    "emit_sweep", "run_experiment", "sweep",
    "MlpConfig", "MlpModel",
    "child_rng", "derive_seed",
    "gaussian_blobs",
    "Dataset", "DatasetSchema", "NormalizerState", "SplitSpec",
    "apply_normalizer", "fit_normalizer", "load_csv", "save_csv", "split",
]
