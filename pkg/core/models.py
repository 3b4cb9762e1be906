import enum
import math
from dataclasses import dataclass, field

from .exceptions import InvalidInputError


class Label(enum.IntEnum):
    """Binary decision / outcome: 1 approve (repay), 0 deny (default)"""
    DENY = 0
    APPROVE = 1

    @classmethod
    def of(cls, value):
        if value in (0, 1):
            return cls(int(value))
        raise InvalidInputError(f"Label value must be 0 or 1, got {value!r}")


class Scenario(str, enum.Enum):
    """(decision, outcome) pair: 11 loan given and repaid, 10 given and defaulted,
    01 denied but would have repaid, 00 denied and would have defaulted"""
    GIVEN_REPAID = '11'
    GIVEN_DEFAULTED = '10'
    DENIED_WOULD_REPAY = '01'
    DENIED_WOULD_DEFAULT = '00'

    @classmethod
    def realized(cls, decision, outcome):
        return cls(f"{int(decision)}{int(outcome)}")


class Party(str, enum.Enum):
    INSTITUTION = 'institution'
    INDIVIDUAL = 'individual'


@dataclass(frozen=True)
class FeatureVector:
    """Numeric-encoded attributes of one individual"""
    # ordered attribute values
    values: tuple
    # attribute names, parallel to values
    names: tuple

    def __post_init__(self):
        object.__setattr__(self, 'values', tuple(float(v) for v in self.values))
        object.__setattr__(self, 'names', tuple(self.names))
        self.clean()

    def clean(self):
        if len(self.values) != len(self.names):
            raise InvalidInputError(
                f"FeatureVector has {len(self.values)} values but {len(self.names)} names"
            )
        if not all(math.isfinite(v) for v in self.values):
            raise InvalidInputError("FeatureVector values must all be finite")

    def __len__(self):
        return len(self.values)

    def with_value(self, name, value):
        """Copy with one named attribute replaced"""
        if name not in self.names:
            return self
        values = list(self.values)
        values[self.names.index(name)] = value
        return FeatureVector(values=values, names=self.names)


@dataclass(frozen=True)
class LedgerEntry:
    epoch: int
    decision: Label
    outcome: Label
    payoff: float


@dataclass
class IndividualState:
    """One agent of the simulated population"""
    # opaque identifier, stable across epochs
    id: str
    features: FeatureVector
    # currency units, simulation-normalized
    income: float
    # w_i
    weight: float
    # protected attribute (e.g. race)
    group: str
    outcome_ledger: list = field(default_factory=list)

    def __post_init__(self):
        self.clean()

    def clean(self):
        if not math.isfinite(self.weight) or self.weight < 0:
            raise InvalidInputError(f"Individual {self.id}: weight must be non-negative, got {self.weight}")
        if not math.isfinite(self.income):
            raise InvalidInputError(f"Individual {self.id}: income must be finite")
        epochs = [entry.epoch for entry in self.outcome_ledger]
        if any(b <= a for a, b in zip(epochs, epochs[1:])):
            raise InvalidInputError(f"Individual {self.id}: ledger epochs must be strictly increasing")

    def check_income_bounds(self, lo, hi):
        if not lo <= self.income <= hi:
            raise InvalidInputError(
                f"Individual {self.id}: income {self.income} outside [{lo}, {hi}]"
            )

    @property
    def last_payoff(self):
        return self.outcome_ledger[-1].payoff if self.outcome_ledger else 0.0


@dataclass
class InstitutionState:
    """The user of the predictor (the bank, or society in the recidivism case)"""
    # w_inst
    weight: float
    # B, the loanable budget
    budget: float
    # currency committed to loans in the current epoch
    outstanding: float = 0.0
    # signed running profit
    profit: float = 0.0

    def __post_init__(self):
        self.clean()

    def clean(self):
        if not math.isfinite(self.weight) or self.weight < 0:
            raise InvalidInputError(f"Institution weight must be non-negative, got {self.weight}")
        if not 0 <= self.outstanding <= self.budget:
            raise InvalidInputError(
                f"Institution outstanding {self.outstanding} must lie in [0, budget={self.budget}]"
            )

    def can_lend(self, principal):
        return self.outstanding + principal <= self.budget


@dataclass(frozen=True)
class UtilityTable:
    """Payoff fractions behind the four decision scenarios"""
    # institution gain on repayment, fraction of principal
    interest_rate: float = 0.1
    # institution loss on default
    principal_loss_fraction: float = 1.0
    # individual gain on successful repayment
    individual_gain_repay: float = 0.2
    # individual loss on default
    individual_loss_default: float = 0.5
    # loss of a would-have-repaid individual who is denied
    rejection_opportunity_cost: float = 0.05
    # added to every payoff before flooring
    payoff_shift: float = 1000.0
    utility_floor: float = 1e-6

    FRACTIONS = (
        'interest_rate', 'principal_loss_fraction', 'individual_gain_repay',
        'individual_loss_default', 'rejection_opportunity_cost',
    )

    def __post_init__(self):
        self.clean()

    def clean(self):
        if not self.utility_floor > 0:
            raise InvalidInputError(f"utility_floor must be positive, got {self.utility_floor}")
        for name in self.FRACTIONS:
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise InvalidInputError(f"{name} must be a non-negative fraction, got {value}")
        if not math.isfinite(self.payoff_shift):
            raise InvalidInputError("payoff_shift must be finite")


@dataclass(frozen=True)
class ScenarioNwpMatrix:
    """Log-domain NWP of the society under each of the four scenarios"""
    nwp_11: float
    nwp_10: float
    nwp_01: float
    nwp_00: float

    def __post_init__(self):
        self.clean()

    def clean(self):
        if not all(math.isfinite(v) for v in (self.nwp_11, self.nwp_10, self.nwp_01, self.nwp_00)):
            raise InvalidInputError("ScenarioNwpMatrix entries must all be finite")


@dataclass(frozen=True)
class DecisionUtility:
    delta_nwp_1: float
    delta_nwp_0: float
    u_decision: float
