"""Incremental cluster-driven ensemble learning for presentation attack detection."""

from .classifier import BinarySvm, PrototypeClassifier, SvmParams, smo, train_binary_svm
from .clustering import Clustering, KMeansParams, kmeans, nearest_centroid
from .dataset import (
    Dataset,
    Label,
    PhasePlan,
    SyntheticSpec,
    generate_synthetic,
    holdout_validation,
    partition_phases,
)
from .ensemble import (
    EnsembleConfig,
    ScoredClassifier,
    ScoredEnsemble,
    ailearn,
    build_phase_ensemble,
    load_ensemble,
    merge,
    predict,
    predict_many,
    prune,
    save_ensemble,
    weigh_classifier,
)
from .errors import (
    AILearnError,
    ConfigError,
    DataError,
    DegeneratePhaseError,
    ParseError,
    StateError,
)
from .experiment import ExperimentConfig, ExperimentReport, run_experiment, run_sweep
from .io import load_dataset, save_dataset
from .metrics import EvalCell, StabilityPlasticityReport, phase_deltas

__version__ = "0.1.0"
