"""Min-max scaling to [0, 1]."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

SCALE_EPS = 1e-9


class NotScaledWarning(UserWarning):
    """Training data outside [0, 1] was handed to a learner."""


@dataclass(frozen=True)
class ScalerParams:
    minimum: tuple[float, ...]
    maximum: tuple[float, ...]

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        lo = np.asarray(self.minimum)
        span = np.asarray(self.maximum) - lo
        out = np.zeros_like(X)
        live = span > 0
        # constant features carry no information and map to 0
        out[:, live] = (X[:, live] - lo[live]) / span[live]
        return out

    def to_dict(self) -> dict:
        return {"min": list(self.minimum), "max": list(self.maximum)}

    @classmethod
    def from_dict(cls, data: dict) -> "ScalerParams":
        return cls(tuple(float(v) for v in data["min"]), tuple(float(v) for v in data["max"]))


def fit_scaler(X) -> ScalerParams:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or len(X) == 0:
        raise ValueError("scaler needs a non-empty 2-D matrix")
    return ScalerParams(tuple(X.min(axis=0).tolist()), tuple(X.max(axis=0).tolist()))


def check_scaled(X) -> bool:
    """Warn (and return False) when any value lies outside [-eps, 1 + eps]."""
    X = np.asarray(X, dtype=float)
    if X.size and (X.min() < -SCALE_EPS or X.max() > 1 + SCALE_EPS):
        warnings.warn("features are not scaled to [0, 1]", NotScaledWarning, stacklevel=3)
        return False
    return True
