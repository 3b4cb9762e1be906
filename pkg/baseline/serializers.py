from rest_framework import serializers


class MixingPolicySerializer(serializers.Serializer):
    """Audit export of a fitted mixing policy"""
    alpha_per_group = serializers.DictField(child=serializers.FloatField())
    base_rate_per_group = serializers.DictField(child=serializers.FloatField())
    cost_weights = serializers.SerializerMethodField()
    mixed_group = serializers.CharField(allow_null=True)
    residual_gap = serializers.FloatField()
    clamped = serializers.BooleanField()

    def get_cost_weights(self, policy):
        fp_weight, fn_weight = policy.cost_weights
        return {'fp': fp_weight, 'fn': fn_weight}


class LogisticSquashSerializer(serializers.Serializer):
    slope = serializers.FloatField()
    intercept = serializers.FloatField()


class ComparatorSerializer(serializers.Serializer):
    squash = LogisticSquashSerializer()
    policy = MixingPolicySerializer()
    threshold = serializers.FloatField()
    groups = serializers.ListField(child=serializers.CharField())


def dump_mixing_policy(policy):
    return MixingPolicySerializer(policy).data


def dump_comparator(comparator):
    return ComparatorSerializer(comparator).data
