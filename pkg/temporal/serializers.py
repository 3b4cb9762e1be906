from dataclasses import asdict

import pandas as pd
from rest_framework import serializers

from classifier.serializers import (
    ClassifierConfigSerializer, dump_trained_classifier, load_classifier_config,
)
from core.serializers import UtilityTableSerializer, load_utility_table, load_validated, reject_unknown_keys
from metrics.serializers import ErrorRatesSerializer
from modulation.serializers import ModulationConfigSerializer, load_modulation_config

from .models import INSTITUTION_WEIGHT_MODES, POLICY_MODES, PolicyGoal, SimulationConfig

EPOCH_COLUMNS = ['epoch', 'log_nwp', 'mean_weight', 'weight_gini', 'fpr', 'fnr', 'combined_error']

NESTED_BLOCKS = ('classifier', 'modulation', 'policy', 'utility_table')


class PolicyGoalSerializer(serializers.Serializer):
    mode = serializers.ChoiceField(choices=POLICY_MODES, default='welfare')
    theta = serializers.FloatField(min_value=0, max_value=1, default=0.5)
    eta_welfare = serializers.FloatField(min_value=0, max_value=1, default=1.0)
    eta_fairness = serializers.FloatField(min_value=0, default=0.0)
    institution_weight_mode = serializers.ChoiceField(
        choices=INSTITUTION_WEIGHT_MODES, allow_null=True, default=None,
    )

    def create(self, validated_data):
        return PolicyGoal(**validated_data)


def load_policy_goal(data):
    return load_validated(PolicyGoalSerializer, data or {}, 'policy')


class SimulationConfigSerializer(serializers.Serializer):
    """Top-level run config; nested blocks are validated by their own serializers"""
    population_size = serializers.IntegerField(min_value=1, default=100)
    epochs = serializers.IntegerField(min_value=1, default=6)
    income_lo = serializers.FloatField(default=100.0)
    income_hi = serializers.FloatField(default=1000.0)
    income_noise_sd = serializers.FloatField(min_value=0, default=20.0)
    institution_weight = serializers.FloatField(default=0.5)
    institution_budget = serializers.FloatField(min_value=0, default=1_000_000.0)
    request_spread = serializers.FloatField(default=0.2)
    outcome_spread = serializers.FloatField(default=0.5)
    retrain_each_epoch = serializers.BooleanField(default=False)
    combined_error_mode = serializers.ChoiceField(choices=['pooled', 'mean_rates'], default='pooled')
    seed = serializers.IntegerField(default=0)
    classifier = serializers.DictField(required=False)
    modulation = serializers.DictField(required=False)
    policy = serializers.DictField(required=False)
    utility_table = serializers.DictField(required=False)

    def validate(self, attrs):
        if attrs['income_lo'] >= attrs['income_hi']:
            raise serializers.ValidationError({'income_lo': "must be below income_hi"})
        if attrs['income_lo'] <= 0:
            raise serializers.ValidationError({'income_lo': "must be positive"})
        for name in ('request_spread', 'outcome_spread', 'institution_weight'):
            if attrs[name] <= 0:
                raise serializers.ValidationError({name: "must be positive"})
        return attrs

    def create(self, validated_data):
        blocks = {name: validated_data.pop(name, None) for name in NESTED_BLOCKS}
        return SimulationConfig(
            classifier=load_classifier_config(blocks['classifier']),
            modulation=load_modulation_config(blocks['modulation']),
            policy=load_policy_goal(blocks['policy']),
            # payoffs are shifted by the income ceiling unless the table says otherwise
            utility_table=load_utility_table(blocks['utility_table'], payoff_shift=validated_data['income_hi']),
            **validated_data,
        )


def load_simulation_config(data, **overrides):
    """SimulationConfig from a run-config object; keyword overrides (CLI flags) win"""
    reject_unknown_keys(SimulationConfigSerializer(), data if data is not None else {}, 'config')
    merged = dict(data or {})
    merged.update({key: value for key, value in overrides.items() if value is not None})
    return load_validated(SimulationConfigSerializer, merged, 'config')


class SimulationConfigEchoSerializer(serializers.Serializer):
    """Config echo written into every trace"""
    population_size = serializers.IntegerField()
    epochs = serializers.IntegerField()
    income_lo = serializers.FloatField()
    income_hi = serializers.FloatField()
    income_noise_sd = serializers.FloatField()
    institution_weight = serializers.FloatField()
    institution_budget = serializers.FloatField()
    request_spread = serializers.FloatField()
    outcome_spread = serializers.FloatField()
    retrain_each_epoch = serializers.BooleanField()
    combined_error_mode = serializers.CharField()
    seed = serializers.IntegerField()
    classifier = ClassifierConfigSerializer()
    modulation = ModulationConfigSerializer()
    policy = PolicyGoalSerializer()
    utility_table = UtilityTableSerializer()


def dump_simulation_config(config):
    return SimulationConfigEchoSerializer(config).data


class DecisionRowSerializer(serializers.Serializer):
    individual_id = serializers.CharField()
    group = serializers.CharField()
    principal = serializers.FloatField()
    u_decision = serializers.FloatField()
    raw_margin = serializers.FloatField()
    normalized_margin = serializers.FloatField()
    adjustment = serializers.FloatField()
    score = serializers.FloatField()
    raw_decision = serializers.IntegerField()
    decision = serializers.IntegerField()
    outcome = serializers.IntegerField()
    budget_capped = serializers.BooleanField()
    payoff = serializers.FloatField()
    income_after = serializers.FloatField()


class EpochRecordSerializer(serializers.Serializer):
    epoch = serializers.IntegerField()
    log_nwp = serializers.FloatField()
    mean_weight = serializers.FloatField()
    weight_gini = serializers.FloatField()
    institution_weight = serializers.FloatField()
    institution_profit = serializers.FloatField()
    budget_capped = serializers.IntegerField()
    error = ErrorRatesSerializer()
    weights_snapshot = serializers.DictField(child=serializers.FloatField())
    decisions = DecisionRowSerializer(many=True)


class SimulationTraceSerializer(serializers.Serializer):
    method = serializers.CharField()
    config = SimulationConfigEchoSerializer()
    initial_weights = serializers.DictField(child=serializers.FloatField())
    records = EpochRecordSerializer(many=True)
    classifier = serializers.SerializerMethodField()

    def get_classifier(self, trace):
        return dump_trained_classifier(trace.classifier) if trace.classifier is not None else None


def dump_trace(trace):
    return SimulationTraceSerializer(trace).data


def epoch_frame(trace):
    """Per-epoch CSV rows"""
    records = [{
        'epoch': record.epoch,
        'log_nwp': record.log_nwp,
        'mean_weight': record.mean_weight,
        'weight_gini': record.weight_gini,
        'fpr': record.error.fpr,
        'fnr': record.error.fnr,
        'combined_error': record.error.combined,
    } for record in trace.records]
    return pd.DataFrame.from_records(records, columns=EPOCH_COLUMNS)


def decision_frame(trace):
    """Per-decision CSV rows, epoch by epoch"""
    return pd.DataFrame.from_records([asdict(row) for record in trace.records for row in record.decisions])
