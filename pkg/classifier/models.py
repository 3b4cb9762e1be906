import math
from dataclasses import dataclass, field

import numpy as np

from core.exceptions import InvalidInputError

DEFAULT_GAMMA = 0.5


@dataclass(frozen=True)
class ClassifierConfig:
    # C, trade-off between margin width and hinge loss
    c: float = 1.0
    # kernel parameter recorded with the run but never read by the linear trainer
    gamma: float = DEFAULT_GAMMA
    learning_rate: float = 0.1
    max_iterations: int = 2000
    tolerance: float = 1e-6
    seed: int = 0
    # iterations between objective checkpoints of the averaged iterate
    checkpoint_every: int = 50

    def __post_init__(self):
        self.clean()

    def clean(self):
        if not self.c > 0:
            raise InvalidInputError(f"ClassifierConfig.c must be positive, got {self.c}")
        if not self.learning_rate > 0:
            raise InvalidInputError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.max_iterations < 1:
            raise InvalidInputError(f"max_iterations must be at least 1, got {self.max_iterations}")
        if not self.tolerance > 0:
            raise InvalidInputError(f"tolerance must be positive, got {self.tolerance}")
        if self.checkpoint_every < 1:
            raise InvalidInputError("checkpoint_every must be at least 1")


@dataclass(frozen=True)
class TrainedClassifier:
    """Linear decision boundary over standardized features"""
    weights: tuple
    bias: float
    # per-feature (mean, scale) recorded at training time
    feature_means: tuple
    feature_scales: tuple
    # 95th percentile of |raw margin| over the training set, normalizes epsilon
    q95: float
    training_loss: float
    feature_names: tuple = ()
    config: ClassifierConfig = field(default_factory=ClassifierConfig)
    # best objective at each checkpoint, non-increasing
    loss_history: tuple = ()
    iterations: int = 0
    converged: bool = False

    def __post_init__(self):
        self.clean()

    def clean(self):
        dim = len(self.weights)
        if len(self.feature_means) != dim or len(self.feature_scales) != dim:
            raise InvalidInputError("weights and feature scaling must share the feature dimension")
        numbers = list(self.weights) + list(self.feature_means) + list(self.feature_scales)
        numbers += [self.bias, self.q95, self.training_loss]
        if not all(math.isfinite(v) for v in numbers):
            raise InvalidInputError("TrainedClassifier parameters must all be finite")
        if any(s <= 0 for s in self.feature_scales):
            raise InvalidInputError("feature scales must be strictly positive")
        if not self.q95 > 0:
            raise InvalidInputError("q95 must be positive")

    @property
    def dimension(self):
        return len(self.weights)

    @property
    def feature_scaling(self):
        return list(zip(self.feature_means, self.feature_scales))

    def standardize(self, values):
        x = np.asarray(values, dtype=float)
        return (x - np.asarray(self.feature_means)) / np.asarray(self.feature_scales)


@dataclass(frozen=True)
class MarginDistance:
    # w . x + b on standardized features
    raw: float
    # epsilon, clamped into [-1, 1]
    normalized: float

    def __post_init__(self):
        self.clean()

    def clean(self):
        if abs(self.normalized) > 1:
            raise InvalidInputError(f"normalized margin must lie in [-1, 1], got {self.normalized}")
        if self.normalized != 0 and np.sign(self.normalized) != np.sign(self.raw):
            raise InvalidInputError("normalized margin must carry the sign of the raw margin")
