import pandas as pd
from rest_framework import serializers

from .rates import group_gap

# Flat report columns, in order; plotting scripts rely on these names
REPORT_COLUMNS = [
    'method', 'axis', 'index', 'fpr', 'fnr', 'combined',
    'delta_fpr', 'delta_fnr', 'delta_combined', 'fpr_group_gap', 'fnr_group_gap',
    'log_nwp', 'mean_weight', 'weight_gini',
]


class ConfusionCountsSerializer(serializers.Serializer):
    tp = serializers.IntegerField()
    fp = serializers.IntegerField()
    tn = serializers.IntegerField()
    fn = serializers.IntegerField()


class GroupRatesSerializer(serializers.Serializer):
    fpr = serializers.FloatField(allow_null=True)
    fnr = serializers.FloatField(allow_null=True)
    combined = serializers.FloatField()
    counts = ConfusionCountsSerializer()


class ErrorRatesSerializer(serializers.Serializer):
    fpr = serializers.FloatField(allow_null=True)
    fnr = serializers.FloatField(allow_null=True)
    combined = serializers.FloatField()
    mode = serializers.CharField()
    counts = ConfusionCountsSerializer()
    per_group = serializers.SerializerMethodField()

    def get_per_group(self, rates):
        return {group: GroupRatesSerializer(g).data for group, g in rates.per_group.items()}


class WelfarePointSerializer(serializers.Serializer):
    log_nwp = serializers.FloatField()
    mean_weight = serializers.FloatField()
    weight_gini = serializers.FloatField()


class ReportRowSerializer(serializers.Serializer):
    method = serializers.CharField()
    index = serializers.IntegerField()
    rates = ErrorRatesSerializer()
    delta_fpr = serializers.FloatField(allow_null=True)
    delta_fnr = serializers.FloatField(allow_null=True)
    delta_combined = serializers.FloatField()
    welfare = WelfarePointSerializer(allow_null=True)


class ComparisonReportSerializer(serializers.Serializer):
    methods = serializers.ListField(child=serializers.CharField())
    baseline = serializers.CharField()
    axis = serializers.CharField()
    rows = ReportRowSerializer(many=True)


def dump_report(report):
    return ComparisonReportSerializer(report).data


def report_frame(report):
    """One flat row per (method, epoch/split)"""
    records = []
    for row in report.rows:
        welfare = row.welfare
        records.append({
            'method': row.method,
            'axis': report.axis,
            'index': row.index,
            'fpr': row.rates.fpr,
            'fnr': row.rates.fnr,
            'combined': row.rates.combined,
            'delta_fpr': row.delta_fpr,
            'delta_fnr': row.delta_fnr,
            'delta_combined': row.delta_combined,
            'fpr_group_gap': group_gap(row.rates, 'fpr'),
            'fnr_group_gap': group_gap(row.rates, 'fnr'),
            'log_nwp': welfare.log_nwp if welfare else None,
            'mean_weight': welfare.mean_weight if welfare else None,
            'weight_gini': welfare.weight_gini if welfare else None,
        })
    return pd.DataFrame.from_records(records, columns=REPORT_COLUMNS)
