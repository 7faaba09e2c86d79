"""Learning algorithms, scaling and under-sampling."""

from .models import (
    TrainedModel,
    decision_scores,
    feature_importance,
    fit,
    load_model,
    predict,
    predict_proba,
    save_model,
)
from .sampling import near_miss_undersample, random_undersample
from .scaling import NotScaledWarning, ScalerParams, fit_scaler
from .space import ALGORITHMS, default_hyperparameters, sample_point, search_space

__all__ = [
    "ALGORITHMS",
    "NotScaledWarning",
    "ScalerParams",
    "TrainedModel",
    "decision_scores",
    "default_hyperparameters",
    "feature_importance",
    "fit",
    "fit_scaler",
    "load_model",
    "near_miss_undersample",
    "predict",
    "predict_proba",
    "random_undersample",
    "sample_point",
    "save_model",
    "search_space",
]
