"""Gaussian naive Bayes classification in log space.

The decision rule is argmax over classes of

    log p(C_k) + sum_i log N(x_i; mean_ki, var_ki)

computed entirely in log space; with hundreds of features the raw
likelihood product underflows.  Per-class variances are floored at
1e-9 * (global feature variance + 1e-12) per feature, since constant
features (blank Canny regions and the like) do occur.  Ties break to
the earlier class in fit order.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from .errors import DataError
from .validation import as_feature_matrix, check_consistent_length

_LOG_2PI = float(np.log(2.0 * np.pi))

VAR_FLOOR_SCALE = 1e-9
VAR_FLOOR_BIAS = 1e-12


@dataclass
class ConfusionMatrix:
    """Per-class prediction counts, indexed [true class][predicted class]."""

    classes: tuple[str, ...]
    counts: np.ndarray

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.float64)
        k = len(self.classes)
        if self.counts.shape != (k, k):
            raise ValueError(
                f"counts must be {k}x{k} for {k} classes, got {self.counts.shape}"
            )
        if self.counts.min() < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def success_ratio(self) -> float:
        total = self.counts.sum()
        return float(np.trace(self.counts) / total) if total else 0.0


class GaussianNaiveBayes(BaseEstimator, ClassifierMixin):
    """Gaussian naive Bayes with empirical priors and floored variances.

    Follows the scikit-learn estimator protocol (fit / predict /
    get_params), so it drops into pipelines and model-selection tools.

    Attributes set by fit:
        classes_    ordered class names (fit order = sorted unique)
        priors_     class frequencies, summing to 1
        means_      (n_classes, n_features) per-class feature means
        variances_  (n_classes, n_features) floored population variances
    """

    def __init__(self, var_floor_scale: float = VAR_FLOOR_SCALE):
        self.var_floor_scale = var_floor_scale

    def fit(self, X, y) -> "GaussianNaiveBayes":
        X = as_feature_matrix(X)
        y = check_consistent_length(X, y)
        classes, counts = np.unique(y, return_counts=True)
        if len(classes) < 2:
            raise DataError("training data must contain at least 2 classes")
        too_small = classes[counts < 2]
        if too_small.size:
            raise DataError(
                f"classes {list(too_small)} have fewer than 2 training samples"
            )

        floor = self.var_floor_scale * (X.var(axis=0) + VAR_FLOOR_BIAS)
        means = np.empty((len(classes), X.shape[1]))
        variances = np.empty_like(means)
        for i, c in enumerate(classes):
            rows = X[y == c]
            means[i] = rows.mean(axis=0)
            variances[i] = np.maximum(rows.var(axis=0), floor)

        self.classes_ = tuple(str(c) for c in classes)
        self.priors_ = counts / counts.sum()
        self.means_ = means
        self.variances_ = variances
        return self

    def _check_fitted(self):
        if not hasattr(self, "means_"):
            raise NotFittedError("this GaussianNaiveBayes instance is not fitted yet")

    def log_joint(self, X) -> np.ndarray:
        """Unnormalized per-class log posteriors, shape (n_samples, n_classes)."""
        self._check_fitted()
        X = as_feature_matrix(X)
        if X.shape[1] != self.means_.shape[1]:
            raise ValueError(
                f"model expects {self.means_.shape[1]} features, got {X.shape[1]}"
            )
        out = np.empty((X.shape[0], len(self.classes_)))
        for i in range(len(self.classes_)):
            var = self.variances_[i]
            diff = X - self.means_[i]
            log_lik = -0.5 * (
                np.sum(np.log(var) + _LOG_2PI) + np.sum(diff * diff / var, axis=1)
            )
            out[:, i] = log_lik + np.log(self.priors_[i])
        return out

    def predict(self, X) -> np.ndarray:
        """Most probable class per row; ties break to the earlier class."""
        scores = self.log_joint(X)
        picks = np.argmax(scores, axis=1)
        return np.array([self.classes_[i] for i in picks])

    def evaluate(self, X, y) -> tuple[float, ConfusionMatrix]:
        """Success ratio and confusion matrix on a labeled test set."""
        y = np.asarray(y)
        if len(y) == 0:
            raise DataError("test set is empty")
        predictions = self.predict(X)
        index = {c: i for i, c in enumerate(self.classes_)}
        unknown = sorted(set(map(str, y)) - set(self.classes_))
        if unknown:
            raise DataError(f"test labels {unknown} were not seen during fit")
        counts = np.zeros((len(self.classes_), len(self.classes_)))
        for truth, pred in zip(y, predictions):
            counts[index[str(truth)], index[pred]] += 1.0
        success = float(np.mean(predictions == y.astype(str)))
        return success, ConfusionMatrix(classes=self.classes_, counts=counts)
