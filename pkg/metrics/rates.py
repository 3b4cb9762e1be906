"""
Error rates, weight inequality and method comparison reports.

Undefined rates (no negatives for an FPR, no positives for an FNR) are carried
as None and skipped by every aggregate; they are never reported as 0.
"""

import numpy as np

from core.exceptions import InvalidInputError
from core.models import Label

from .models import ComparisonReport, ConfusionCounts, ErrorRates, GroupRates, ReportRow

COMBINED_MODES = ('pooled', 'mean_rates')


def _counts(decisions, outcomes):
    d = np.asarray(decisions, dtype=int)
    o = np.asarray(outcomes, dtype=int)
    return ConfusionCounts(
        tp=int(np.sum((d == 1) & (o == 1))),
        fp=int(np.sum((d == 1) & (o == 0))),
        tn=int(np.sum((d == 0) & (o == 0))),
        fn=int(np.sum((d == 0) & (o == 1))),
    )


def _rates(counts, mode):
    fpr = counts.fp / counts.negatives if counts.negatives else None
    fnr = counts.fn / counts.positives if counts.positives else None
    if mode == 'pooled':
        combined = (counts.fp + counts.fn) / counts.total
    else:
        defined = [r for r in (fpr, fnr) if r is not None]
        combined = sum(defined) / len(defined)
    return fpr, fnr, combined


def error_rates(decisions, outcomes, groups, mode='pooled'):
    """Confusion-matrix rates overall and per group"""
    if not (len(decisions) == len(outcomes) == len(groups)):
        raise InvalidInputError(
            f"decisions, outcomes and groups must have equal length, got "
            f"{len(decisions)}, {len(outcomes)}, {len(groups)}"
        )
    if not decisions:
        raise InvalidInputError("error_rates needs at least one decision")
    if mode not in COMBINED_MODES:
        raise InvalidInputError(f"combined error mode must be one of {COMBINED_MODES}, got {mode!r}")
    decisions = [int(Label.of(d)) for d in decisions]
    outcomes = [int(Label.of(o)) for o in outcomes]

    counts = _counts(decisions, outcomes)
    fpr, fnr, combined = _rates(counts, mode)

    per_group = {}
    group_array = np.asarray([str(g) for g in groups])
    for group in sorted(set(group_array.tolist())):
        mask = group_array == group
        group_counts = _counts(np.asarray(decisions)[mask], np.asarray(outcomes)[mask])
        g_fpr, g_fnr, g_combined = _rates(group_counts, mode)
        per_group[group] = GroupRates(fpr=g_fpr, fnr=g_fnr, combined=g_combined, counts=group_counts)

    return ErrorRates(fpr=fpr, fnr=fnr, combined=combined, counts=counts, per_group=per_group, mode=mode)


def group_gap(rates, attribute):
    """max - min of a per-group rate over the groups where it is defined"""
    values = [getattr(g, attribute) for g in rates.per_group.values()]
    values = [v for v in values if v is not None]
    if len(values) < 2:
        return None
    return max(values) - min(values)


def gini(values):
    """Gini coefficient: mean-normalized pairwise absolute difference over two"""
    x = np.asarray(values, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise InvalidInputError("gini needs a non-empty vector")
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise InvalidInputError("gini is only defined for finite non-negative values")
    total = x.sum()
    if total == 0:
        raise InvalidInputError("gini is undefined when every value is zero")
    n = x.size
    ranks = np.arange(1, n + 1)
    return float(np.sum((2 * ranks - n - 1) * np.sort(x)) / (n * total))


def _delta(value, reference):
    if value is None or reference is None:
        return None
    return value - reference


def build_report(series, baseline, welfare=None, axis='epoch'):
    """Tabulate per-method ErrorRates with deltas against the baseline method.

    series maps method name -> list of ErrorRates (one per epoch or split),
    welfare optionally maps method name -> list of WelfarePoint.
    """
    if not series:
        raise InvalidInputError("build_report needs at least one method")
    if baseline not in series:
        raise InvalidInputError(f"baseline method {baseline!r} is not among {list(series)}")
    lengths = {method: len(rows) for method, rows in series.items()}
    if len(set(lengths.values())) != 1:
        raise InvalidInputError(f"misaligned series lengths: {lengths}")
    welfare = welfare or {}
    for method, points in welfare.items():
        if len(points) != lengths.get(method, -1):
            raise InvalidInputError(f"welfare series for {method!r} is misaligned with its rates")

    reference = series[baseline]
    rows = []
    for method, method_rates in series.items():
        points = welfare.get(method)
        for index, rates in enumerate(method_rates):
            base = reference[index]
            rows.append(ReportRow(
                method=method,
                index=index + 1,
                rates=rates,
                delta_fpr=_delta(rates.fpr, base.fpr),
                delta_fnr=_delta(rates.fnr, base.fnr),
                delta_combined=rates.combined - base.combined,
                welfare=points[index] if points else None,
            ))
    return ComparisonReport(methods=tuple(series), baseline=baseline, axis=axis, rows=tuple(rows))
