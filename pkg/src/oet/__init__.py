"""Orthogonal embedding tracker.

A discriminative, dimension-adaptive subspace appearance model (HSIC-supervised
nuclear-norm learning with a sparse error term) driving a particle-filter
tracker, plus synthetic-sequence fixtures and benchmark-style evaluation.
"""

from .classifier import (
    InvalidTrainingSetError,
    LinearClassifier,
    discrimination_error,
    predict,
    train_classifier,
)
from .embedding import (
    DegenerateSubspaceError,
    SolverConfig,
    SubspaceModel,
    TrainingSet,
    learn_embedding,
    supervised_pca,
)
from .features import BoundingBox, Frame, OutOfFrameError, crop_resize, hog, raw_feature
from .hsic import (
    center_samples,
    empirical_hsic,
    gaussian_kernel,
    label_kernel,
    linear_kernel,
    make_labels,
)
from .metrics import EvaluationReport, center_error, drr, evaluate, fdr, iou
from .representation import CandidateEmbedding, project_candidate, representation_error
from .sequence_io import (
    ConfigError,
    SequenceManifest,
    load_config,
    load_sequence,
    parse_groundtruth,
    save_sequence,
    write_results,
)
from .synth import InvalidSpecError, SynthSpec, generate_sequence
from .tracker import (
    LocalizationFailureError,
    MotionState,
    TargetBuffer,
    TrackerConfig,
    TrackResult,
    localize,
    sample_candidates,
    score_candidates,
    track_sequence,
    update_buffer,
)

__version__ = "0.1.0"

__all__ = [
    "BoundingBox",
    "CandidateEmbedding",
    "ConfigError",
    "DegenerateSubspaceError",
    "EvaluationReport",
    "Frame",
    "InvalidSpecError",
    "InvalidTrainingSetError",
    "LinearClassifier",
    "LocalizationFailureError",
    "MotionState",
    "OutOfFrameError",
    "SequenceManifest",
    "SolverConfig",
    "SubspaceModel",
    "SynthSpec",
    "TargetBuffer",
    "TrackResult",
    "TrackerConfig",
    "TrainingSet",
    "center_error",
    "center_samples",
    "crop_resize",
    "discrimination_error",
    "drr",
    "empirical_hsic",
    "evaluate",
    "fdr",
    "gaussian_kernel",
    "generate_sequence",
    "hog",
    "iou",
    "label_kernel",
    "learn_embedding",
    "linear_kernel",
    "load_config",
    "load_sequence",
    "localize",
    "make_labels",
    "parse_groundtruth",
    "predict",
    "project_candidate",
    "raw_feature",
    "representation_error",
    "sample_candidates",
    "save_sequence",
    "score_candidates",
    "supervised_pca",
    "track_sequence",
    "train_classifier",
    "update_buffer",
    "write_results",
]
