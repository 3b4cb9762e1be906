from dataclasses import dataclass, field

from core.exceptions import InvalidInputError


@dataclass(frozen=True)
class DatasetSchema:
    """Column contract for one CSV family"""
    # adult | compas | synthetic
    name: str
    # ordered model inputs (the group column is added separately when race-aware)
    feature_columns: tuple
    label_column: str
    group_column: str
    income_column: str | None = None
    # column -> {categorical value -> real}; must cover every value met
    numeric_encodings: dict = field(default_factory=dict)
    # the two groups kept; rows from other groups are dropped and counted
    groups: tuple = ()
    # race-aware (True) or race-blind (False) feature vectors
    include_group_feature: bool = True
    # extra columns read for preprocessing only (e.g. the Adult income proxy inputs)
    auxiliary_columns: tuple = ()
    id_column: str | None = None

    def __post_init__(self):
        for name in ('feature_columns', 'groups', 'auxiliary_columns'):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        self.clean()

    def clean(self):
        if not self.label_column or not self.group_column:
            raise InvalidInputError(f"schema {self.name}: label and group columns are required")
        if self.label_column in self.feature_columns:
            raise InvalidInputError(f"schema {self.name}: label column cannot be a feature")
        if self.group_column in self.feature_columns:
            raise InvalidInputError(
                f"schema {self.name}: list the group column in group_column only; "
                "include_group_feature controls its use as a feature"
            )
        for column, mapping in self.numeric_encodings.items():
            if column not in self.columns:
                raise InvalidInputError(f"schema {self.name}: encoding for unknown column {column}")
            if not isinstance(mapping, dict) or not mapping:
                raise InvalidInputError(f"schema {self.name}: encoding for {column} must be a non-empty map")
        if self.groups and len(self.groups) != 2:
            raise InvalidInputError(f"schema {self.name}: exactly two groups are supported")
        if self.include_group_feature and self.group_column not in self.numeric_encodings:
            raise InvalidInputError(
                f"schema {self.name}: a race-aware schema needs an encoding for {self.group_column}"
            )

    @property
    def columns(self):
        """Every column the schema reads, in a stable order"""
        ordered = []
        candidates = [self.id_column, *self.feature_columns, self.group_column,
                      self.label_column, self.income_column, *self.auxiliary_columns]
        for column in candidates:
            if column and column not in ordered:
                ordered.append(column)
        return ordered

    @property
    def model_features(self):
        """Names of the FeatureVector entries built from this schema"""
        names = list(self.feature_columns)
        if self.include_group_feature:
            names.append(self.group_column)
        return names


@dataclass(frozen=True)
class RawTable:
    """A parsed CSV: encoded columns plus the raw group label per row"""
    schema: DatasetSchema
    # pandas DataFrame, one row per kept CSV row; __group__ holds the raw group value, __row__ the line number
    frame: object
    source: str
    sha256: str
    dropped_missing: int = 0
    dropped_group: int = 0

    def __len__(self):
        return len(self.frame)


@dataclass(frozen=True)
class Provenance:
    source: str
    sha256: str
    seed: int | None
    filter: str


@dataclass
class PopulationSample:
    individuals: list
    # training labels, parallel to individuals
    labels: list
    schema: DatasetSchema
    provenance: Provenance

    def __post_init__(self):
        self.clean()

    def clean(self):
        if len(self.individuals) != len(self.labels):
            raise InvalidInputError("PopulationSample needs one label per individual")
        ids = [ind.id for ind in self.individuals]
        if len(set(ids)) != len(ids):
            raise InvalidInputError("PopulationSample ids must be unique")

    def __len__(self):
        return len(self.individuals)

    def group_counts(self):
        counts = {}
        for individual in self.individuals:
            counts[individual.group] = counts.get(individual.group, 0) + 1
        return dict(sorted(counts.items()))

    def labeled(self):
        """(FeatureVector, Label) pairs for classifier training"""
        return [(ind.features, label) for ind, label in zip(self.individuals, self.labels)]


@dataclass(frozen=True)
class SynthesisSpec:
    """Generator parameters for an offline two-group population"""
    size: int = 100
    groups: tuple = ('White', 'African-American')
    income_means: tuple = (620.0, 420.0)
    income_sds: tuple = (180.0, 160.0)
    income_lo: float = 100.0
    income_hi: float = 1000.0
    # mean shift of the non-income features per group
    feature_shifts: tuple = (0.3, -0.3)
    # sd of the gaussian noise added to the planted score before labelling
    label_noise: float = 0.5
    # planted rule: income_z, x1, x2, bias
    planted_weights: tuple = (1.2, 0.8, -0.5, 0.3)
    include_group_feature: bool = True

    def __post_init__(self):
        self.clean()

    def clean(self):
        if self.size < 2:
            raise InvalidInputError("synthetic population needs at least two individuals")
        if len(self.groups) != 2 or len(self.income_means) != 2 or len(self.income_sds) != 2:
            raise InvalidInputError("synthetic population is defined for exactly two groups")
        if not self.income_lo < self.income_hi:
            raise InvalidInputError("income_lo must be below income_hi")
        if any(sd < 0 for sd in self.income_sds) or self.label_noise < 0:
            raise InvalidInputError("standard deviations must be non-negative")
        if len(self.planted_weights) != 4:
            raise InvalidInputError("planted_weights holds (income, x1, x2, bias)")
