"""
CSV ingestion and population preparation.

load_csv() parses a UCI-Adult- or COMPAS-shaped file against its schema;
prepare_adult() / prepare_compas() turn a parsed table into a population of
IndividualState; split() and synthesize_population() provide the train/test
protocol and offline fixtures.
"""

import hashlib
import json
import logging
from dataclasses import replace
from pathlib import Path

import numpy as np
import pandas as pd
from django.conf import settings

from core.exceptions import (
    DegenerateDataError, IngestionError, InvalidConfigError, InvalidInputError, SamplingError,
)
from core.models import FeatureVector, IndividualState, Label
from core.seeding import as_generator

from .models import DatasetSchema, PopulationSample, Provenance, RawTable

logger = logging.getLogger(__name__)

GROUP = '__group__'
ROW = '__row__'

INCOME_FEATURE = 'income'

# Adult income proxy inputs and their fixed ranges
ADULT_EDUCATION = 'education-num'
ADULT_HOURS = 'hours-per-week'
EDUCATION_RANGE = (1.0, 16.0)
HOURS_RANGE = (1.0, 99.0)

COMPAS_AGE = 'age'
COMPAS_PRIORS = 'priors_count'

KNOWN_SCHEMAS = ('adult', 'compas')


def load_schema(name, schema_dir=None):
    """Read one of the shipped schema JSON files"""
    from .serializers import load_dataset_schema

    if name not in KNOWN_SCHEMAS:
        raise InvalidConfigError(f"unknown dataset {name!r}; expected one of {', '.join(KNOWN_SCHEMAS)}")
    path = Path(schema_dir or settings.NWP_SCHEMA_DIR) / f"{name}.json"
    with open(path, encoding='utf-8') as handle:
        return load_dataset_schema(json.load(handle))


def file_sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _first(frame, mask, column):
    return frame.loc[mask, ROW].iloc[0], frame.loc[mask, column].iloc[0]


def load_csv(path, schema):
    """Parse a CSV against its schema: encode categoricals, drop incomplete rows"""
    path = Path(path)
    if not path.is_file():
        raise IngestionError(f"{path}: file not found")
    try:
        frame = pd.read_csv(
            path, dtype=str, skipinitialspace=True, na_values=['?', ''], encoding='utf-8',
        )
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise IngestionError(f"{path}: {exc}") from exc

    frame.columns = [str(c).strip() for c in frame.columns]
    missing = [c for c in schema.columns if c not in frame.columns]
    if missing:
        raise IngestionError(f"{path}: header is missing columns {', '.join(missing)}")

    frame = frame[schema.columns].copy()
    for column in schema.columns:
        frame[column] = frame[column].str.strip()
    # line numbers as a text editor shows them, header on line 1
    frame[ROW] = np.arange(len(frame)) + 2

    complete = frame.dropna(subset=schema.columns)
    dropped_missing = len(frame) - len(complete)
    dropped_group = 0
    if schema.groups:
        in_groups = complete[schema.group_column].isin(schema.groups)
        dropped_group = int((~in_groups).sum())
        complete = complete[in_groups]

    encoded = pd.DataFrame({
        ROW: complete[ROW].to_numpy(),
        GROUP: complete[schema.group_column].to_numpy(),
    })
    for column in schema.columns:
        values = complete[column]
        if column in schema.numeric_encodings:
            mapping = schema.numeric_encodings[column]
            unknown = ~values.isin(list(mapping))
            if unknown.any():
                row, value = _first(complete, unknown, column)
                raise IngestionError(f"{path}: row {row}, column {column}: unknown categorical value {value!r}")
            encoded[column] = values.map(mapping).astype(float).to_numpy()
        elif column in (schema.id_column, schema.group_column):
            encoded[column] = values.to_numpy()
        else:
            numeric = pd.to_numeric(values, errors='coerce')
            bad = numeric.isna()
            if bad.any():
                row, value = _first(complete, bad, column)
                raise IngestionError(f"{path}: row {row}, column {column}: cannot parse {value!r} as a number")
            encoded[column] = numeric.astype(float).to_numpy()

    labels = encoded[schema.label_column]
    bad_label = ~labels.isin([0.0, 1.0])
    if bad_label.any():
        row = encoded.loc[bad_label, ROW].iloc[0]
        raise IngestionError(f"{path}: row {row}, column {schema.label_column}: label must encode to 0 or 1")

    if dropped_missing or dropped_group:
        logger.info(
            "%s: kept %d rows, dropped %d with missing values and %d outside groups %s",
            path.name, len(encoded), dropped_missing, dropped_group, list(schema.groups),
        )
    return RawTable(
        schema=schema,
        frame=encoded.reset_index(drop=True),
        source=str(path),
        sha256=file_sha256(path),
        dropped_missing=dropped_missing,
        dropped_group=dropped_group,
    )


def _feature_vector(row, schema, income=None):
    names = list(schema.model_features)
    values = [float(row[c]) for c in names]
    if income is not None:
        names.append(INCOME_FEATURE)
        values.append(float(income))
    return FeatureVector(values=values, names=names)


def _individual(row, schema, income, with_income_feature):
    key = row[schema.id_column] if schema.id_column else int(row[ROW])
    return IndividualState(
        id=f"{schema.name}-{key}",
        features=_feature_vector(row, schema, income if with_income_feature else None),
        income=float(income),
        weight=1.0,
        group=str(row[GROUP]),
    )


def _groups(table):
    groups = list(table.schema.groups) or sorted(set(table.frame[GROUP]))
    if len(groups) != 2:
        raise DegenerateDataError(f"expected exactly two groups, found {groups}")
    return groups


def _scaled(values, bounds):
    lo, hi = bounds
    return np.clip((np.asarray(values, dtype=float) - lo) / (hi - lo), 0.0, 1.0)


def income_proxy(label, education_num, hours, lo, hi):
    """Fixed linear score of (>50K flag, education-num, hours-per-week) mapped onto [lo, hi]"""
    score = 0.5 * np.asarray(label, dtype=float) \
        + 0.25 * _scaled(education_num, EDUCATION_RANGE) \
        + 0.25 * _scaled(hours, HOURS_RANGE)
    return lo + score * (hi - lo)


def prepare_adult(table, n, lo, hi, noise_sd, rng, seed=None):
    """Balanced n-person sample with incomes normalized onto [lo, hi]"""
    if n < 2 or n % 2:
        raise InvalidInputError(f"n must be a positive even number, got {n}")
    if not lo < hi:
        raise InvalidInputError("income bounds must satisfy lo < hi")
    if noise_sd < 0:
        raise InvalidInputError("noise_sd must be non-negative")
    schema = table.schema
    for column in (ADULT_EDUCATION, ADULT_HOURS):
        if column not in table.frame.columns:
            raise IngestionError(f"{table.source}: adult preparation needs column {column}")
    rng = as_generator(rng)
    frame = table.frame
    per_group = n // 2

    chosen = []
    group_values = frame[GROUP].to_numpy()
    for group in _groups(table):
        candidates = np.flatnonzero(group_values == group)
        if len(candidates) < per_group:
            raise SamplingError(f"group {group}: {len(candidates)} rows available, {per_group} needed")
        chosen.extend(rng.choice(candidates, size=per_group, replace=False).tolist())

    sample = frame.iloc[chosen]
    incomes = income_proxy(sample[schema.label_column], sample[ADULT_EDUCATION], sample[ADULT_HOURS], lo, hi)
    if noise_sd > 0:
        incomes = np.clip(incomes + rng.normal(0.0, noise_sd, size=len(incomes)), lo, hi)

    individuals, labels = [], []
    for (_, row), income in zip(sample.iterrows(), incomes):
        individuals.append(_individual(row, schema, income, with_income_feature=True))
        labels.append(Label.of(row[schema.label_column]))

    provenance = Provenance(
        source=table.source,
        sha256=table.sha256,
        seed=seed,
        filter=f"balanced sample n={n} ({per_group} per group), income proxy onto [{lo:g}, {hi:g}], noise_sd={noise_sd:g}",
    )
    return PopulationSample(individuals=individuals, labels=labels, schema=schema, provenance=provenance)


def prepare_compas(table, max_age=35, max_priors=3, lo=100.0, hi=1000.0):
    """Keep defendants with age <= max_age and priors < max_priors"""
    schema = table.schema
    frame = table.frame
    for column in (COMPAS_AGE, COMPAS_PRIORS):
        if column not in frame.columns:
            raise IngestionError(f"{table.source}: compas preparation needs column {column}")
    kept = frame[(frame[COMPAS_AGE] <= max_age) & (frame[COMPAS_PRIORS] < max_priors)]
    if kept.empty:
        raise DegenerateDataError(f"no rows with age <= {max_age} and priors < {max_priors}")
    logger.info("compas filter kept %d of %d rows", len(kept), len(frame))

    # no income in the data: everyone stakes the midpoint
    income = (lo + hi) / 2.0
    individuals, labels = [], []
    for _, row in kept.iterrows():
        row_income = float(row[schema.income_column]) if schema.income_column else income
        individuals.append(_individual(row, schema, row_income, with_income_feature=False))
        labels.append(Label.of(row[schema.label_column]))

    provenance = Provenance(
        source=table.source,
        sha256=table.sha256,
        seed=None,
        filter=f"age <= {max_age} and priors_count < {max_priors}",
    )
    return PopulationSample(individuals=individuals, labels=labels, schema=schema, provenance=provenance)


def split(sample, train_fraction, seed):
    """Stratified seeded split into (train, test)"""
    if not 0 < train_fraction < 1:
        raise InvalidInputError(f"train_fraction must lie strictly between 0 and 1, got {train_fraction}")
    rng = np.random.default_rng(int(seed))
    by_group = {}
    for index, individual in enumerate(sample.individuals):
        by_group.setdefault(individual.group, []).append(index)

    train_idx, test_idx = [], []
    for group in sorted(by_group):
        indices = np.asarray(by_group[group])
        shuffled = indices[rng.permutation(len(indices))]
        cut = int(round(train_fraction * len(indices)))
        train_idx.extend(shuffled[:cut].tolist())
        test_idx.extend(shuffled[cut:].tolist())

    def part(indices, name):
        indices = sorted(indices)
        provenance = replace(
            sample.provenance,
            seed=int(seed),
            filter=f"{sample.provenance.filter}; {name} part of {train_fraction:g} split",
        )
        return PopulationSample(
            individuals=[replace(sample.individuals[i], outcome_ledger=[]) for i in indices],
            labels=[sample.labels[i] for i in indices],
            schema=sample.schema,
            provenance=provenance,
        )

    return part(train_idx, 'train'), part(test_idx, 'test')


def synthetic_schema(spec):
    return DatasetSchema(
        name='synthetic',
        feature_columns=('x1', 'x2'),
        label_column='label',
        group_column='race',
        income_column='income',
        numeric_encodings={'race': {spec.groups[0]: 0.0, spec.groups[1]: 1.0}},
        groups=tuple(spec.groups),
        include_group_feature=spec.include_group_feature,
    )


def synthesize_population(spec, rng, seed=None):
    """Two-group gaussian population with labels from a planted linear rule"""
    rng = as_generator(rng)
    schema = synthetic_schema(spec)
    lo, hi = spec.income_lo, spec.income_hi
    counts = (spec.size - spec.size // 2, spec.size // 2)
    w_income, w_x1, w_x2, bias = spec.planted_weights

    individuals, labels = [], []
    for k, group in enumerate(spec.groups):
        count = counts[k]
        incomes = np.clip(rng.normal(spec.income_means[k], spec.income_sds[k], size=count), lo, hi)
        x1 = rng.normal(spec.feature_shifts[k], 1.0, size=count)
        x2 = rng.normal(-spec.feature_shifts[k], 1.0, size=count)
        income_z = (incomes - (lo + hi) / 2.0) / ((hi - lo) / 4.0)
        score = w_income * income_z + w_x1 * x1 + w_x2 * x2 + bias
        if spec.label_noise > 0:
            score = score + rng.normal(0.0, spec.label_noise, size=count)
        for i in range(count):
            row = {'x1': x1[i], 'x2': x2[i], 'race': float(k), ROW: len(individuals) + 1, GROUP: group}
            individuals.append(IndividualState(
                id=f"synthetic-{len(individuals) + 1}",
                features=_feature_vector(row, schema, incomes[i]),
                income=float(incomes[i]),
                weight=1.0,
                group=group,
            ))
            labels.append(Label.APPROVE if score[i] > 0 else Label.DENY)

    provenance = Provenance(
        source='synthetic', sha256='', seed=seed,
        filter=f"synthetic n={spec.size}, label_noise={spec.label_noise:g}",
    )
    return PopulationSample(individuals=individuals, labels=labels, schema=schema, provenance=provenance)


def race_blind(sample):
    """Copy of a sample whose feature vectors drop the protected attribute"""
    schema = sample.schema
    if not schema.include_group_feature:
        return sample
    blind_schema = replace(schema, include_group_feature=False)
    individuals = []
    for individual in sample.individuals:
        pairs = [(n, v) for n, v in zip(individual.features.names, individual.features.values)
                 if n != schema.group_column]
        features = FeatureVector(values=[v for _, v in pairs], names=[n for n, _ in pairs])
        individuals.append(replace(individual, features=features))
    return PopulationSample(individuals=individuals, labels=list(sample.labels),
                            schema=blind_schema, provenance=sample.provenance)
