"""
Experiment runners behind the management commands: config and data loading,
per-method simulations, and the labeled split protocol.
"""

import copy
import json
import logging
from pathlib import Path

from classifier.svm import train
from core.exceptions import IngestionError, InvalidConfigError
from core.models import InstitutionState
from core.seeding import derive_generator, derive_seed
from datasets.ingest import (
    load_csv, load_schema, prepare_adult, prepare_compas, race_blind, split, synthesize_population,
)
from datasets.models import SynthesisSpec
from datasets.serializers import load_population
from metrics.models import WelfarePoint
from metrics.rates import build_report
from temporal.engine import DecisionRule, fit_ceo, initial_weights, run_epoch, run_simulation
from temporal.models import METHODS
from temporal.serializers import load_simulation_config

logger = logging.getLogger(__name__)

TRAIN_FRACTION = 0.7


def read_json(path, label, error=InvalidConfigError):
    path = Path(path)
    if not path.is_file():
        raise error(f"{label} file not found: {path}")
    try:
        return json.loads(path.read_text(encoding='utf-8'))
    except json.JSONDecodeError as exc:
        raise error(f"{path}: not valid JSON ({exc})") from exc


def load_run_config(path=None, seed=None, default_seed=0):
    """Config file < --seed flag; the environment default seed fills a seed neither gives"""
    data = read_json(path, 'config') if path else {}
    if seed is None and 'seed' not in data:
        seed = default_seed
    return load_simulation_config(data, seed=seed)


def parse_methods(text):
    methods = []
    for name in (part.strip() for part in text.split(',')):
        if name not in METHODS:
            raise InvalidConfigError(f"unknown method {name!r}; expected a subset of {', '.join(METHODS)}")
        if name not in methods:
            methods.append(name)
    if len(methods) < 2:
        raise InvalidConfigError("compare needs at least two distinct methods")
    return tuple(methods)


def baseline_method(methods):
    return 'none' if 'none' in methods else methods[0]


def load_sample(config, data=None, dataset=None, synthetic=False, max_age=35, max_priors=3, blind=False):
    """PopulationSample from --synthetic, a prepared population JSON, or a raw CSV plus --dataset.

    With blind set the protected attribute is dropped from every feature vector.
    """
    sample = _read_sample(config, data, dataset, synthetic, max_age, max_priors)
    return race_blind(sample) if blind else sample


def _read_sample(config, data, dataset, synthetic, max_age, max_priors):
    if synthetic:
        spec = SynthesisSpec(size=config.population_size, income_lo=config.income_lo, income_hi=config.income_hi)
        return synthesize_population(spec, derive_generator(config.seed, 'population'), seed=config.seed)
    if data is None:
        raise InvalidConfigError("one of --data or --synthetic is required")
    if Path(data).suffix == '.json':
        return load_population(read_json(data, 'population', IngestionError), source=str(data))
    if dataset is None:
        raise InvalidConfigError("a CSV passed with --data needs --dataset adult|compas")
    schema = load_schema(dataset)
    table = load_csv(data, schema)
    if schema.name == 'adult':
        return prepare_adult(
            table, config.population_size, config.income_lo, config.income_hi, config.income_noise_sd,
            derive_generator(config.seed, 'population'), seed=config.seed,
        )
    return prepare_compas(table, max_age, max_priors, lo=config.income_lo, hi=config.income_hi)


def welfare_point(record):
    return WelfarePoint(log_nwp=record.log_nwp, mean_weight=record.mean_weight, weight_gini=record.weight_gini)


def compare_simulations(config, sample, methods):
    """Every method runs the full simulation on the same data, classifier and seed"""
    classifier = train(sample.labeled(), config.classifier)
    comparator = fit_ceo(classifier, sample) if 'ceo' in methods else None
    traces = {}
    for method in methods:
        traces[method] = run_simulation(config, sample, method=method, classifier=classifier, comparator=comparator)
        logger.info("simulated method %s", method)
    report = build_report(
        {m: [r.error for r in t.records] for m, t in traces.items()},
        baseline=baseline_method(methods),
        welfare={m: [welfare_point(r) for r in t.records] for m, t in traces.items()},
        axis='epoch',
    )
    return report, traces, comparator


def evaluate_split(test, classifier, comparator, config, method, seed):
    """One labeled epoch over the held-out part; returns its EpochRecord"""
    population = initial_weights(copy.deepcopy(test.individuals), config)
    institution = InstitutionState(weight=config.institution_weight, budget=config.institution_budget)
    rule = DecisionRule(method, config, comparator, derive_generator(seed, f"{method}-mixing"))
    labels = {ind.id: label for ind, label in zip(test.individuals, test.labels)}
    return run_epoch(population, institution, classifier, config, derive_generator(seed, 'epoch'), 1, rule,
                     labels=labels)


def compare_splits(config, sample, methods, splits, train_fraction=TRAIN_FRACTION):
    """Train on each seeded split and score every method on its held-out part.

    Returns the report and the per-split comparators (None when ceo is not compared).
    """
    if splits < 1:
        raise InvalidConfigError("--splits must be at least 1")
    errors = {m: [] for m in methods}
    welfare = {m: [] for m in methods}
    comparators = []
    for k in range(1, splits + 1):
        split_seed = derive_seed(config.seed, f"split-{k}")
        train_part, test_part = split(sample, train_fraction, split_seed)
        classifier = train(train_part.labeled(), config.classifier)
        comparator = fit_ceo(classifier, train_part) if 'ceo' in methods else None
        comparators.append(comparator)
        for method in methods:
            record = evaluate_split(test_part, classifier, comparator, config, method, split_seed)
            errors[method].append(record.error)
            welfare[method].append(welfare_point(record))
        logger.info("split %d: %d train, %d test", k, len(train_part), len(test_part))
    report = build_report(errors, baseline=baseline_method(methods), welfare=welfare, axis='split')
    return report, comparators
