from dataclasses import dataclass, field


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    @property
    def total(self):
        return self.tp + self.fp + self.tn + self.fn

    @property
    def negatives(self):
        return self.fp + self.tn

    @property
    def positives(self):
        return self.tp + self.fn


@dataclass(frozen=True)
class GroupRates:
    """Rates over one group; None marks an undefined rate (empty denominator)"""
    fpr: float | None
    fnr: float | None
    combined: float
    counts: ConfusionCounts


@dataclass(frozen=True)
class ErrorRates:
    fpr: float | None
    fnr: float | None
    # (fp + fn) / total, or the mean of fpr and fnr under mode "mean_rates"
    combined: float
    counts: ConfusionCounts
    per_group: dict = field(default_factory=dict)
    mode: str = 'pooled'


@dataclass(frozen=True)
class WelfarePoint:
    log_nwp: float
    mean_weight: float
    weight_gini: float


@dataclass(frozen=True)
class ReportRow:
    method: str
    # epoch number or split number, starting at 1
    index: int
    rates: ErrorRates
    delta_fpr: float | None
    delta_fnr: float | None
    delta_combined: float
    welfare: WelfarePoint | None = None


@dataclass(frozen=True)
class ComparisonReport:
    methods: tuple
    baseline: str
    # "epoch" or "split"
    axis: str
    rows: tuple

    def rows_for(self, method):
        return [row for row in self.rows if row.method == method]
