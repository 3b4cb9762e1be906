import math
from dataclasses import dataclass

from core.exceptions import InvalidInputError
from core.models import Label


@dataclass(frozen=True)
class ModulationConfig:
    # utility influence strength; JSON key "lambda"
    lambda_: float = 0.5
    # s, squashes u_decision through tanh(u / s)
    utility_scale: float = 1.0
    # decision cut on the modulated score
    threshold: float = 0.0

    def __post_init__(self):
        self.clean()

    def clean(self):
        if not (math.isfinite(self.lambda_) and self.lambda_ >= 0):
            raise InvalidInputError(f"lambda must be non-negative, got {self.lambda_}")
        if not (math.isfinite(self.utility_scale) and self.utility_scale > 0):
            raise InvalidInputError(f"utility_scale must be positive, got {self.utility_scale}")
        if not math.isfinite(self.threshold):
            raise InvalidInputError("threshold must be finite")


@dataclass(frozen=True)
class ModulatedScore:
    raw: float
    adjustment: float
    # raw + adjustment
    modulated: float
    decision: Label
