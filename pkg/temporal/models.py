import math
from dataclasses import dataclass, field

from classifier.models import ClassifierConfig
from core.exceptions import InvalidInputError
from core.models import UtilityTable
from modulation.models import ModulationConfig

POLICY_MODES = ('welfare', 'fairness', 'mixed')
INSTITUTION_WEIGHT_MODES = ('constant', 'distribution')
METHODS = ('none', 'nwp', 'ceo')

WEIGHT_FLOOR = 1e-6
WEIGHT_CEILING = 1.0


@dataclass(frozen=True)
class PolicyGoal:
    """How weights move between epochs"""
    mode: str = 'welfare'
    # fairness share of the update in mixed mode
    theta: float = 0.5
    # uplift towards the population mean weight; at most 1 so the uplift never overshoots the mean
    eta_welfare: float = 1.0
    # multiplicative correction by group combined-error excess
    eta_fairness: float = 0.0
    # constant: w_inst fixed; distribution: w_inst scaled by (1 - gini(weights));
    # None follows the goal: distribution for welfare, constant otherwise
    institution_weight_mode: str | None = None

    def __post_init__(self):
        if self.institution_weight_mode is None:
            resolved = 'distribution' if self.mode == 'welfare' else 'constant'
            object.__setattr__(self, 'institution_weight_mode', resolved)
        self.clean()

    def clean(self):
        if self.mode not in POLICY_MODES:
            raise InvalidInputError(f"policy mode must be one of {', '.join(POLICY_MODES)}, got {self.mode!r}")
        if not 0 <= self.theta <= 1:
            raise InvalidInputError(f"theta must lie in [0, 1], got {self.theta}")
        if not 0 <= self.eta_welfare <= 1:
            raise InvalidInputError(f"eta_welfare must lie in [0, 1], got {self.eta_welfare}")
        if not (math.isfinite(self.eta_fairness) and self.eta_fairness >= 0):
            raise InvalidInputError(f"eta_fairness must be non-negative, got {self.eta_fairness}")
        if self.institution_weight_mode not in INSTITUTION_WEIGHT_MODES:
            raise InvalidInputError(f"unknown institution_weight_mode {self.institution_weight_mode!r}")

    @property
    def welfare_step(self):
        if self.mode == 'fairness':
            return 0.0
        return self.eta_welfare * (1 - self.theta) if self.mode == 'mixed' else self.eta_welfare

    @property
    def fairness_step(self):
        if self.mode == 'welfare':
            return 0.0
        return self.eta_fairness * self.theta if self.mode == 'mixed' else self.eta_fairness


@dataclass(frozen=True)
class SimulationConfig:
    population_size: int = 100
    # M
    epochs: int = 6
    income_lo: float = 100.0
    income_hi: float = 1000.0
    # sd of the gaussian noise on prepared Adult incomes
    income_noise_sd: float = 20.0
    # w_inst; 1 models a pure profit-maximizing bank
    institution_weight: float = 0.5
    institution_budget: float = 1_000_000.0
    # request sd as a fraction of income
    request_spread: float = 0.2
    # sd of the outcome draw around the raw margin
    outcome_spread: float = 0.5
    retrain_each_epoch: bool = False
    combined_error_mode: str = 'pooled'
    seed: int = 0
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)
    modulation: ModulationConfig = field(default_factory=ModulationConfig)
    policy: PolicyGoal = field(default_factory=PolicyGoal)
    utility_table: UtilityTable = field(default_factory=UtilityTable)

    def __post_init__(self):
        self.clean()

    def clean(self):
        if self.population_size < 1:
            raise InvalidInputError("population_size must be positive")
        if self.epochs < 1:
            raise InvalidInputError(f"epochs must be at least 1, got {self.epochs}")
        if not self.income_lo < self.income_hi:
            raise InvalidInputError("income_lo must be below income_hi")
        if self.income_lo <= 0:
            raise InvalidInputError("income_lo must be positive so every weight stays above zero")
        if not (self.request_spread > 0 and self.outcome_spread > 0):
            raise InvalidInputError("request_spread and outcome_spread must be positive")
        if self.income_noise_sd < 0:
            raise InvalidInputError("income_noise_sd must be non-negative")
        if not (math.isfinite(self.institution_weight) and self.institution_weight > 0):
            raise InvalidInputError("institution_weight must be positive")
        if not self.institution_budget >= 0:
            raise InvalidInputError("institution_budget must be non-negative")
        if self.combined_error_mode not in ('pooled', 'mean_rates'):
            raise InvalidInputError(f"unknown combined_error_mode {self.combined_error_mode!r}")


@dataclass(frozen=True)
class DecisionRow:
    """One loan decision of one epoch"""
    epoch: int
    individual_id: str
    group: str
    principal: float
    u_decision: float
    raw_margin: float
    normalized_margin: float
    # change applied by the decision rule (modulation or mixing)
    adjustment: float
    score: float
    # classifier decision before any intervention
    raw_decision: int
    decision: int
    outcome: int
    # approval converted to denial by the budget cap
    budget_capped: bool
    payoff: float
    income_after: float


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    decisions: tuple
    log_nwp: float
    error: object
    # weights in force during the epoch, keyed by individual id
    weights_snapshot: dict
    institution_weight: float
    institution_profit: float
    mean_weight: float
    weight_gini: float

    def __post_init__(self):
        self.clean()

    def clean(self):
        if len(self.decisions) != len(self.weights_snapshot):
            raise InvalidInputError("EpochRecord needs one decision per individual")
        if not math.isfinite(self.log_nwp):
            raise InvalidInputError("EpochRecord log_nwp must be finite")

    @property
    def budget_capped(self):
        return sum(row.budget_capped for row in self.decisions)


@dataclass(frozen=True)
class SimulationTrace:
    config: SimulationConfig
    method: str
    initial_weights: dict
    records: tuple
    classifier: object = None

    def __post_init__(self):
        self.clean()

    def clean(self):
        if len(self.records) != self.config.epochs:
            raise InvalidInputError(
                f"trace holds {len(self.records)} records for {self.config.epochs} epochs"
            )

    def series(self, name):
        return [getattr(record, name) for record in self.records]
