"""
The modulating function: inflect a raw classifier score by decision utility.

    adjustment = lambda * tanh(u_decision / s) * (1 - |epsilon|)

The confidence gate (1 - |epsilon|) closes for points far from the boundary,
so only near-boundary decisions can flip; |adjustment| never exceeds lambda.
"""

import math

from core.exceptions import InvalidInputError
from core.models import Label

from .models import ModulatedScore


def modulate(margin, utility, config):
    raw = margin.raw
    epsilon = margin.normalized
    u = utility.u_decision
    if not all(math.isfinite(v) for v in (raw, epsilon, u)):
        raise InvalidInputError("modulate() needs finite margin and decision utility")

    gate = 1.0 - min(abs(epsilon), 1.0)
    adjustment = config.lambda_ * math.tanh(u / config.utility_scale) * gate
    modulated = raw + adjustment
    decision = Label.APPROVE if modulated > config.threshold else Label.DENY
    return ModulatedScore(raw=raw, adjustment=adjustment, modulated=modulated, decision=decision)
