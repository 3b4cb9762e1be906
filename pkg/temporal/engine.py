"""
Multi-epoch loan simulation.

Each epoch every individual, in population order, requests a loan around
their income; the decision rule (plain classifier, NWP modulation or
calibrated equalized odds) decides, the outcome is drawn around the raw
classifier margin, and both parties are paid. After the epoch the tau update
re-derives weights from income and layers the policy adjustments on top.

All draws come from generators seeded by the run seed, consumed in a fixed
order, so a (config, seed, population) triple always yields the same trace.
"""

import copy
import logging
import math

import numpy as np

from baseline.calibration import comparator_decision, fit_comparator
from classifier.svm import margin, raw_margins, train
from core.exceptions import DegenerateDataError, InvalidInputError, SamplingError
from core.models import InstitutionState, LedgerEntry, Label, Party, Scenario
from core.seeding import derive_generator
from core.welfare import (
    decision_utility, log_nwp, scenario_nwp_matrix, scenario_payoff, to_positive_utility,
)
from datasets.ingest import INCOME_FEATURE
from metrics.rates import error_rates, gini
from modulation.modulating import modulate

from .models import (
    METHODS, WEIGHT_CEILING, WEIGHT_FLOOR, DecisionRow, EpochRecord, SimulationTrace,
)

logger = logging.getLogger(__name__)


def _clamp(value, lo, hi):
    return min(max(value, lo), hi)


def initial_weights(population, config):
    """w_i = income_i / income_hi"""
    for individual in population:
        individual.check_income_bounds(config.income_lo, config.income_hi)
    for individual in population:
        individual.weight = individual.income / config.income_hi
    return population


def sample_request(income, spread, rng):
    """Normal(income, spread * income), redrawn until positive"""
    if not (math.isfinite(income) and income > 0):
        raise InvalidInputError(f"income must be positive to request a loan, got {income}")
    while True:
        principal = float(rng.normal(income, spread * income))
        if principal > 0:
            return principal


def sample_outcome(raw_prediction, spread, rng):
    """Repay iff a Normal(raw_prediction, spread) draw is positive"""
    if not (math.isfinite(raw_prediction) and math.isfinite(spread)):
        raise InvalidInputError("sample_outcome needs finite inputs")
    return Label.APPROVE if rng.normal(raw_prediction, spread) > 0 else Label.DENY


def apply_rewards(individual, institution, decision, outcome, principal, table, income_lo, income_hi):
    """Pay both parties for the realized scenario; returns (individual payoff, institution payoff)"""
    scenario = Scenario.realized(decision, outcome)
    if decision == Label.APPROVE:
        if not institution.can_lend(principal):
            raise InvalidInputError("approval exceeds the institution budget; cap it before paying out")
        institution.outstanding += principal

    institution_payoff = scenario_payoff(scenario, principal, table, Party.INSTITUTION)
    individual_payoff = scenario_payoff(scenario, principal, table, Party.INDIVIDUAL)
    institution.profit += institution_payoff
    if individual_payoff:
        individual.income = _clamp(individual.income + individual_payoff, income_lo, income_hi)
        individual.features = individual.features.with_value(INCOME_FEATURE, individual.income)
    return individual_payoff, institution_payoff


def welfare_uplift(weights, eta):
    """Stage (b): lift every weight below the mean towards it"""
    w = np.asarray(weights, dtype=float)
    mean = math.fsum(w) / len(w)
    return w + eta * np.maximum(0.0, mean - w)


def fairness_correction(weights, groups, error, eta):
    """Stage (c): scale each group by its combined-error excess over the population"""
    w = np.asarray(weights, dtype=float).copy()
    groups = np.asarray(groups)
    for group in sorted(set(groups.tolist())):
        rates = error.per_group.get(group)
        if rates is None or rates.counts.total == 0:
            logger.warning("no decisions recorded for group %s; fairness correction skipped", group)
            continue
        w[groups == group] *= 1.0 + eta * (rates.combined - error.combined)
    return w


def tau_update(population, record, policy, income_hi):
    """Income map, then welfare uplift, then fairness correction, clamped into [1e-6, 1]"""
    weights = np.array([ind.income / income_hi for ind in population])
    if policy.welfare_step > 0:
        weights = welfare_uplift(weights, policy.welfare_step)
    if policy.fairness_step > 0:
        weights = fairness_correction(weights, [ind.group for ind in population], record.error,
                                      policy.fairness_step)
    weights = np.clip(weights, WEIGHT_FLOOR, WEIGHT_CEILING)
    for individual, weight in zip(population, weights):
        individual.weight = float(weight)
    return [ind.weight for ind in population]


def institution_weight_after(weights, config):
    if config.policy.institution_weight_mode == 'distribution':
        return max(config.institution_weight * (1.0 - gini(weights)), WEIGHT_FLOOR)
    return config.institution_weight


def _individual_terms(population, table):
    return [math.log(ind.weight) + math.log(to_positive_utility(ind.last_payoff, table)) for ind in population]


class DecisionRule:
    """Turns a classifier margin and a decision utility into a loan decision"""

    def __init__(self, method, config, comparator=None, mixing_rng=None):
        if method not in METHODS:
            raise InvalidInputError(f"unknown method {method!r}; expected one of {', '.join(METHODS)}")
        if method == 'ceo' and comparator is None:
            raise InvalidInputError("the ceo method needs a fitted comparator")
        self.method = method
        self.config = config
        self.comparator = comparator
        self.mixing_rng = mixing_rng

    def decide(self, individual, distance, utility):
        """(adjustment, score, decision)"""
        if self.method == 'nwp':
            modulated = modulate(distance, utility, self.config.modulation)
            return modulated.adjustment, modulated.modulated, int(modulated.decision)
        if self.method == 'ceo':
            score, decision = comparator_decision(self.comparator, distance.raw, individual.group, self.mixing_rng)
            return 0.0, score, decision
        return 0.0, distance.raw, int(distance.raw > 0)


def run_epoch(population, institution, classifier, config, rng, epoch, rule, labels=None):
    """One pass over the population followed by the tau update.

    With labels (individual id -> Label) the epoch is a labeled evaluation:
    each stake is the individual's income and outcomes are the given labels.
    """
    table = config.utility_table
    snapshot = {ind.id: ind.weight for ind in population}
    institution.outstanding = 0.0
    profit_before = institution.profit
    terms = _individual_terms(population, table)
    total = math.fsum(terms)

    rows, payoffs = [], []
    for individual, own_term in zip(population, terms):
        if labels is None:
            principal = sample_request(individual.income, config.request_spread, rng)
        else:
            principal = individual.income
        matrix = scenario_nwp_matrix(individual, institution, total - own_term, principal, table)
        utility = decision_utility(matrix)
        distance = margin(classifier, individual.features)
        adjustment, score, decision = rule.decide(individual, distance, utility)

        capped = bool(decision) and not institution.can_lend(principal)
        if capped:
            decision = 0
        if labels is None:
            outcome = sample_outcome(distance.raw, config.outcome_spread, rng)
        else:
            outcome = Label(labels[individual.id])
        payoff, _ = apply_rewards(
            individual, institution, Label(decision), outcome, principal, table,
            config.income_lo, config.income_hi,
        )
        individual.outcome_ledger.append(LedgerEntry(epoch, Label(decision), outcome, payoff))
        payoffs.append(payoff)
        rows.append(DecisionRow(
            epoch=epoch,
            individual_id=individual.id,
            group=individual.group,
            principal=principal,
            u_decision=utility.u_decision,
            raw_margin=distance.raw,
            normalized_margin=distance.normalized,
            adjustment=adjustment,
            score=score,
            raw_decision=int(distance.raw > 0),
            decision=decision,
            outcome=int(outcome),
            budget_capped=capped,
            payoff=payoff,
            income_after=individual.income,
        ))

    capped_count = sum(row.budget_capped for row in rows)
    if capped_count:
        logger.info("epoch %d: %d approvals denied by the budget cap", epoch, capped_count)

    error = error_rates(
        [row.decision for row in rows], [row.outcome for row in rows], [row.group for row in rows],
        mode=config.combined_error_mode,
    )
    epoch_profit = institution.profit - profit_before
    weights = list(snapshot.values())
    utilities = [to_positive_utility(epoch_profit / len(population), table)]
    utilities += [to_positive_utility(p, table) for p in payoffs]
    record = EpochRecord(
        epoch=epoch,
        decisions=tuple(rows),
        log_nwp=log_nwp([institution.weight] + weights, utilities),
        error=error,
        weights_snapshot=snapshot,
        institution_weight=institution.weight,
        institution_profit=epoch_profit,
        mean_weight=math.fsum(weights) / len(weights),
        weight_gini=gini(weights),
    )

    new_weights = tau_update(population, record, config.policy, config.income_hi)
    institution.weight = institution_weight_after(new_weights, config)
    logger.info(
        "epoch %d: log_nwp=%.6f combined_error=%.4f mean_weight=%.4f gini=%.4f",
        epoch, record.log_nwp, error.combined, record.mean_weight, record.weight_gini,
    )
    return record


def _retrain(population, classifier, config):
    """Fit on current features against last epoch's realized outcomes"""
    dataset = [(ind.features, ind.outcome_ledger[-1].outcome) for ind in population]
    try:
        return train(dataset, config.classifier)
    except DegenerateDataError as exc:
        logger.warning("retraining skipped, keeping the previous classifier: %s", exc)
        return classifier


def fit_ceo(classifier, sample):
    """Comparator fitted on the training sample's margins"""
    X = [ind.features.values for ind in sample.individuals]
    return fit_comparator(
        raw_margins(classifier, X), [int(y) for y in sample.labels], [ind.group for ind in sample.individuals],
    )


def group_quotas(counts, size):
    """Largest-remainder apportionment of size over the groups, proportional to counts"""
    total = sum(counts.values())
    exact = {g: size * c / total for g, c in counts.items()}
    quotas = {g: math.floor(q) for g, q in exact.items()}
    leftover = size - sum(quotas.values())
    for g in sorted(exact, key=lambda g: (quotas[g] - exact[g], g))[:leftover]:
        quotas[g] += 1
    return quotas


def population_subset(sample, size, rng):
    """Indices of a group-stratified random subset, in sample order"""
    if size == len(sample):
        return list(range(len(sample)))
    members = {}
    for index, individual in enumerate(sample.individuals):
        members.setdefault(individual.group, []).append(index)
    chosen = []
    for group, quota in sorted(group_quotas({g: len(m) for g, m in members.items()}, size).items()):
        chosen.extend(rng.choice(members[group], size=quota, replace=False).tolist())
    return sorted(chosen)


def prepare_population(sample, config):
    if len(sample) < config.population_size:
        raise SamplingError(
            f"population needs {config.population_size} individuals, the sample has {len(sample)}"
        )
    indices = population_subset(sample, config.population_size, derive_generator(config.seed, 'population-subset'))
    return initial_weights([copy.deepcopy(sample.individuals[i]) for i in indices], config)


def run_simulation(config, sample, method='nwp', classifier=None, comparator=None):
    """Train once on the sample, then chain the configured number of epochs"""
    population = prepare_population(sample, config)
    if classifier is None:
        classifier = train(sample.labeled(), config.classifier)
    if method == 'ceo' and comparator is None:
        comparator = fit_ceo(classifier, sample)

    rng = np.random.default_rng(config.seed)
    rule = DecisionRule(method, config, comparator, derive_generator(config.seed, 'ceo-mixing'))
    institution = InstitutionState(weight=config.institution_weight, budget=config.institution_budget)
    initial = {ind.id: ind.weight for ind in population}

    records = []
    model = classifier
    for epoch in range(1, config.epochs + 1):
        if config.retrain_each_epoch and epoch > 1:
            model = _retrain(population, model, config)
        records.append(run_epoch(population, institution, model, config, rng, epoch, rule))

    return SimulationTrace(
        config=config, method=method, initial_weights=initial, records=tuple(records), classifier=classifier,
    )
