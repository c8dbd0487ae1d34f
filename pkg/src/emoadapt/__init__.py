"""Emotion-adaptive training for three-class cyberbullying detection."""

from .backend import Backend, ReferenceBackend, TrainConfig, resolve_backend
from .corpus import (
    CyberLabel,
    DatasetSplit,
    Post,
    build_hdcyberbullying,
    load_emotion_corpus,
    make_learning_curve_subsets,
    stratified_split,
)
from .mapping import ConceptMap, apply_concept_map, default_concept_map, emotion_likelihood_matrix
from .metrics import ConfusionMatrix, EvalReport, aggregate_runs, confusion, evaluate
from .regimes import (
    ExperimentSpec,
    run_baseline,
    run_few_shot,
    run_learning_curve,
    run_zero_shot,
)

__version__ = "0.1.0"

__all__ = [
    "Backend",
    "ConceptMap",
    "ConfusionMatrix",
    "CyberLabel",
    "DatasetSplit",
    "EvalReport",
    "ExperimentSpec",
    "Post",
    "ReferenceBackend",
    "TrainConfig",
    "aggregate_runs",
    "apply_concept_map",
    "build_hdcyberbullying",
    "confusion",
    "default_concept_map",
    "emotion_likelihood_matrix",
    "evaluate",
    "load_emotion_corpus",
    "make_learning_curve_subsets",
    "resolve_backend",
    "run_baseline",
    "run_few_shot",
    "run_learning_curve",
    "run_zero_shot",
    "stratified_split",
    "__version__",
]
