"""
Linear SVM trained by deterministic full-batch subgradient descent.

Objective: 1/2 ||w||^2 + C * mean_i hinge(y_i, w . x_i + b) over standardized
features, labels mapped {0, 1} -> {-1, +1}. Every reduction over samples goes
through math.fsum, which is exactly rounded, so a dataset and its duplicate
produce bit-identical models.
"""

import logging
import math

import numpy as np

from core.exceptions import DegenerateDataError, InvalidInputError
from core.models import FeatureVector, Label

from .models import DEFAULT_GAMMA, MarginDistance, TrainedClassifier

logger = logging.getLogger(__name__)


def _column_sums(matrix):
    return np.array([math.fsum(column) for column in matrix.T], dtype=float)


def _row_dot(matrix, weights, bias):
    return (matrix * weights).sum(axis=1) + bias


def _values(x):
    return x.values if isinstance(x, FeatureVector) else tuple(x)


def dataset_arrays(dataset):
    """(X, y01, names) from a list of (FeatureVector, Label) pairs"""
    if not dataset:
        raise DegenerateDataError("training dataset is empty")
    first = dataset[0][0]
    dim = len(first)
    rows, labels = [], []
    for index, (features, label) in enumerate(dataset):
        if len(features) != dim:
            raise InvalidInputError(
                f"row {index} has {len(features)} features, expected {dim}"
            )
        rows.append(_values(features))
        labels.append(int(Label.of(label)))
    X = np.array(rows, dtype=float).reshape(len(rows), dim)
    return X, np.array(labels, dtype=int), tuple(getattr(first, 'names', ()))


def _standardization(X):
    n = X.shape[0]
    means = _column_sums(X) / n
    centered = X - means
    variances = _column_sums(centered * centered) / n
    scales = np.where(variances > 0, np.sqrt(variances), 1.0)
    return means, scales


def hinge_objective(Xs, y_pm, weights, bias, c):
    """1/2 ||w||^2 + C * mean hinge"""
    hinge = np.maximum(0.0, 1.0 - y_pm * _row_dot(Xs, weights, bias))
    return 0.5 * math.fsum(weights * weights) + c * math.fsum(hinge) / len(y_pm)


def train(dataset, config):
    """Fit a TrainedClassifier; the returned iterate is the best averaged checkpoint"""
    X, y, names = dataset_arrays(dataset)
    if len(set(y.tolist())) < 2:
        raise DegenerateDataError("training data must contain both labels")
    if config.gamma != DEFAULT_GAMMA:
        logger.warning("gamma=%s is recorded but unused: the classifier is strictly linear", config.gamma)

    n, dim = X.shape
    means, scales = _standardization(X)
    Xs = (X - means) / scales
    y_pm = 2.0 * y - 1.0
    yX = Xs * y_pm[:, None]

    w = np.zeros(dim)
    b = 0.0
    w_avg = np.zeros(dim)
    b_avg = 0.0
    best_loss = hinge_objective(Xs, y_pm, w_avg, b_avg, config.c)
    best_w, best_b = w_avg.copy(), b_avg
    history = []
    converged = False
    iterations = 0

    for t in range(1, config.max_iterations + 1):
        iterations = t
        violators = y_pm * _row_dot(Xs, w, b) < 1.0
        grad_w = w - config.c * _column_sums(yX[violators]) / n
        grad_b = -config.c * math.fsum(y_pm[violators]) / n
        step = config.learning_rate / math.sqrt(t)
        w = w - step * grad_w
        b = b - step * grad_b
        w_avg = w_avg + (w - w_avg) / t
        b_avg = b_avg + (b - b_avg) / t

        if t % config.checkpoint_every and t != config.max_iterations:
            continue
        loss = hinge_objective(Xs, y_pm, w_avg, b_avg, config.c)
        previous = best_loss
        if loss < best_loss:
            best_loss, best_w, best_b = loss, w_avg.copy(), b_avg
        history.append(best_loss)
        if previous - best_loss < config.tolerance:
            converged = True
            break

    raw = _row_dot(Xs, best_w, best_b)
    q95 = float(np.percentile(np.abs(raw), 95))
    if not q95 > 0:
        q95 = 1.0

    model = TrainedClassifier(
        weights=tuple(float(v) for v in best_w),
        bias=float(best_b),
        feature_means=tuple(float(v) for v in means),
        feature_scales=tuple(float(v) for v in scales),
        q95=q95,
        training_loss=float(best_loss),
        feature_names=names,
        config=config,
        loss_history=tuple(history),
        iterations=iterations,
        converged=converged,
    )
    logger.info(
        "trained linear classifier n=%d dim=%d loss=%.6f iterations=%d converged=%s",
        n, dim, model.training_loss, iterations, converged,
    )
    return model


def _check_dimension(model, values):
    if len(values) != model.dimension:
        raise InvalidInputError(
            f"feature vector has {len(values)} values, classifier expects {model.dimension}"
        )


def raw_margins(model, X):
    """Vectorized raw margins for a matrix of unscaled feature rows"""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.dimension:
        raise InvalidInputError(f"expected rows of {model.dimension} features, got shape {X.shape}")
    return _row_dot(model.standardize(X), np.asarray(model.weights), model.bias)


def margin(model, x):
    """Signed raw margin and its normalized form epsilon in [-1, 1]"""
    values = _values(x)
    _check_dimension(model, values)
    raw = float(raw_margins(model, [values])[0])
    normalized = max(-1.0, min(1.0, raw / model.q95))
    return MarginDistance(raw=raw, normalized=normalized)


def predict(model, x):
    """1 iff the raw margin is strictly positive; ties deny"""
    return Label.APPROVE if margin(model, x).raw > 0 else Label.DENY
