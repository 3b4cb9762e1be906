"""
Calibrated equalized odds for two groups.

Raw classifier margins are squashed into probabilities by a logistic fit, then
the group with the lower weighted generalized cost has a fraction alpha of its
scores replaced by its base rate, which raises that group's expected cost
until it matches the other group's.
"""

import logging
import math

import numpy as np
from scipy.special import expit
from sklearn.linear_model import LogisticRegression

from core.exceptions import DegenerateDataError, InvalidInputError

from .models import CalibratedEqualizedOdds, GroupScores, LogisticSquash, MixingPolicy, check_cost_weights

logger = logging.getLogger(__name__)

DEFAULT_COST_WEIGHTS = (1.0, 1.0)


def generalized_rates(g):
    """(gFPR, gFNR): mean score over negatives, mean (1 - score) over positives"""
    negatives = [s for s, y in zip(g.scores, g.labels) if y == 0]
    positives = [s for s, y in zip(g.scores, g.labels) if y == 1]
    if not negatives or not positives:
        raise DegenerateDataError(f"group {g.group} needs both labels to define generalized rates")
    gfpr = math.fsum(negatives) / len(negatives)
    gfnr = math.fsum(1.0 - s for s in positives) / len(positives)
    return gfpr, gfnr


def weighted_cost(gfpr, gfnr, cost_weights):
    fp_weight, fn_weight = cost_weights
    return fp_weight * gfpr + fn_weight * gfnr


def group_cost(g, cost_weights):
    return weighted_cost(*generalized_rates(g), cost_weights)


def base_rate_cost(g, cost_weights):
    """Cost of the constant predictor that outputs the group base rate"""
    mu = g.base_rate
    return weighted_cost(mu, 1.0 - mu, cost_weights)


def mixing_rate(cost_self, cost_base, cost_other):
    """Solve (1 - alpha) * cost_self + alpha * cost_base = cost_other for alpha.

    Returns (alpha, residual_gap); alpha is clamped into [0, 1] and the gap is
    what remains between the two costs after clamping.
    """
    if cost_other <= cost_self:
        return 0.0, 0.0
    if cost_base <= cost_self:
        return 1.0, cost_other - cost_base
    alpha = (cost_other - cost_self) / (cost_base - cost_self)
    if alpha > 1.0:
        return 1.0, cost_other - cost_base
    return alpha, 0.0


def mixed_cost(g, alpha, cost_weights):
    """Expected weighted cost of a group after mixing at rate alpha"""
    return (1.0 - alpha) * group_cost(g, cost_weights) + alpha * base_rate_cost(g, cost_weights)


def fit_mixing(advantaged, disadvantaged, cost_weights=DEFAULT_COST_WEIGHTS):
    """Mixing policy that equalizes the weighted costs of the two groups.

    Only the cheaper group is mixed; which group that is follows from the
    costs, never from the argument order.
    """
    check_cost_weights(cost_weights)
    if advantaged.group == disadvantaged.group:
        raise InvalidInputError("fit_mixing needs two distinct groups")
    costs = {g.group: group_cost(g, cost_weights) for g in (advantaged, disadvantaged)}
    by_group = {advantaged.group: advantaged, disadvantaged.group: disadvantaged}
    base_rates = {name: g.base_rate for name, g in by_group.items()}
    alphas = {name: 0.0 for name in by_group}

    low, high = sorted(by_group, key=lambda name: (costs[name], name))
    if costs[low] == costs[high]:
        logger.info("group costs already equal (%.6f); no mixing", costs[low])
        return MixingPolicy(alpha_per_group=alphas, cost_weights=cost_weights, base_rate_per_group=base_rates)

    alpha, residual = mixing_rate(costs[low], base_rate_cost(by_group[low], cost_weights), costs[high])
    alphas[low] = alpha
    clamped = residual > 0
    if clamped:
        logger.warning(
            "mixing %s at alpha=1 cannot reach the cost of %s; residual gap %.6f", low, high, residual,
        )
    else:
        logger.info("mixing %s at alpha=%.6f to match cost %.6f of %s", low, alpha, costs[high], high)
    return MixingPolicy(
        alpha_per_group=alphas,
        cost_weights=cost_weights,
        base_rate_per_group=base_rates,
        mixed_group=low,
        residual_gap=residual,
        clamped=clamped,
    )


def apply_mixing(score, group, policy, rng):
    """With probability alpha_group return the group base rate, else the score"""
    if group not in policy.alpha_per_group:
        raise InvalidInputError(f"no mixing rate for group {group!r}")
    if not 0.0 <= score <= 1.0:
        raise InvalidInputError(f"score must lie in [0, 1], got {score}")
    if rng.random() < policy.alpha_per_group[group]:
        return policy.base_rate_per_group[group]
    return score


def fit_squash(raw_margins, labels):
    """Maximum-likelihood logistic fit of labels on raw margins"""
    X = np.asarray(raw_margins, dtype=float).reshape(-1, 1)
    y = np.asarray([int(v) for v in labels])
    if len(set(y.tolist())) < 2:
        raise DegenerateDataError("the logistic squash needs both labels")
    # a very weak penalty makes the lbfgs fit a maximum-likelihood one
    model = LogisticRegression(C=1e6, solver='lbfgs', max_iter=2000)
    model.fit(X, y)
    return LogisticSquash(slope=float(model.coef_[0, 0]), intercept=float(model.intercept_[0]))


def squash_scores(squash, raw_margins):
    return expit(squash.slope * np.asarray(raw_margins, dtype=float) + squash.intercept)


def group_scores(scores, labels, groups):
    """Split parallel lists into one GroupScores per group, sorted by group name"""
    members = {}
    for score, label, group in zip(scores, labels, groups):
        bucket = members.setdefault(group, ([], []))
        bucket[0].append(score)
        bucket[1].append(label)
    return [GroupScores(group=g, scores=s, labels=y) for g, (s, y) in sorted(members.items())]


def fit_comparator(raw_margins, labels, groups, cost_weights=DEFAULT_COST_WEIGHTS):
    """Squash on training margins, then fit the two-group mixing policy on the squashed scores"""
    squash = fit_squash(raw_margins, labels)
    scores = squash_scores(squash, raw_margins)
    per_group = group_scores(scores, labels, groups)
    if len(per_group) != 2:
        raise DegenerateDataError(f"calibrated equalized odds needs exactly two groups, found {len(per_group)}")
    policy = fit_mixing(per_group[0], per_group[1], cost_weights)
    return CalibratedEqualizedOdds(squash=squash, policy=policy, groups=tuple(g.group for g in per_group))


def comparator_decision(comparator, raw_margin, group, rng):
    """(mixed score, decision) for one individual"""
    score = float(squash_scores(comparator.squash, [raw_margin])[0])
    mixed = apply_mixing(score, group, comparator.policy, rng)
    return mixed, int(mixed > comparator.threshold)
