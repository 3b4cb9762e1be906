import math
from dataclasses import dataclass, field

from core.exceptions import InvalidInputError
from core.models import Label


@dataclass(frozen=True)
class GroupScores:
    """Calibrated scores and true labels of one group"""
    group: str
    scores: tuple
    labels: tuple

    def __post_init__(self):
        object.__setattr__(self, 'scores', tuple(float(s) for s in self.scores))
        object.__setattr__(self, 'labels', tuple(Label.of(v) for v in self.labels))
        self.clean()

    def clean(self):
        if len(self.scores) != len(self.labels):
            raise InvalidInputError(f"group {self.group}: one score per label required")
        if not all(0.0 <= s <= 1.0 for s in self.scores):
            raise InvalidInputError(f"group {self.group}: scores must lie in [0, 1]")

    @property
    def base_rate(self):
        return math.fsum(self.labels) / len(self.labels)


@dataclass(frozen=True)
class MixingPolicy:
    # group -> probability of replacing a score by the group base rate
    alpha_per_group: dict
    # (fp_weight, fn_weight)
    cost_weights: tuple
    base_rate_per_group: dict
    # group whose scores are mixed, None when the costs already match
    mixed_group: str | None = None
    # cost gap left when alpha had to be clamped to 1
    residual_gap: float = 0.0
    clamped: bool = False

    def __post_init__(self):
        object.__setattr__(self, 'cost_weights', tuple(float(w) for w in self.cost_weights))
        self.clean()

    def clean(self):
        if not all(0.0 <= a <= 1.0 for a in self.alpha_per_group.values()):
            raise InvalidInputError("mixing rates must lie in [0, 1]")
        if not all(0.0 <= r <= 1.0 for r in self.base_rate_per_group.values()):
            raise InvalidInputError("base rates must lie in [0, 1]")
        check_cost_weights(self.cost_weights)


@dataclass(frozen=True)
class LogisticSquash:
    """score = expit(slope * raw_margin + intercept)"""
    slope: float
    intercept: float

    def __post_init__(self):
        if not (math.isfinite(self.slope) and math.isfinite(self.intercept)):
            raise InvalidInputError("logistic squash parameters must be finite")


@dataclass(frozen=True)
class CalibratedEqualizedOdds:
    """The fitted comparator: a squash for raw margins plus the group mixing policy"""
    squash: LogisticSquash
    policy: MixingPolicy
    threshold: float = 0.5
    groups: tuple = field(default_factory=tuple)


def check_cost_weights(cost_weights):
    if len(cost_weights) != 2:
        raise InvalidInputError("cost_weights holds (fp_weight, fn_weight)")
    fp_weight, fn_weight = cost_weights
    if fp_weight < 0 or fn_weight < 0 or (fp_weight == 0 and fn_weight == 0):
        raise InvalidInputError("cost weights must be non-negative and not both zero")
