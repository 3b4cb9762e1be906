from rest_framework import serializers

from core.serializers import load_validated

from .models import ClassifierConfig


class ClassifierConfigSerializer(serializers.Serializer):
    c = serializers.FloatField(default=1.0)
    gamma = serializers.FloatField(default=0.5)
    learning_rate = serializers.FloatField(default=0.1)
    max_iterations = serializers.IntegerField(min_value=1, default=2000)
    tolerance = serializers.FloatField(default=1e-6)
    seed = serializers.IntegerField(default=0)
    checkpoint_every = serializers.IntegerField(min_value=1, default=50)

    def validate_c(self, value):
        if value <= 0:
            raise serializers.ValidationError("C must be positive")
        return value

    def validate_learning_rate(self, value):
        if value <= 0:
            raise serializers.ValidationError("learning_rate must be positive")
        return value

    def validate_tolerance(self, value):
        if value <= 0:
            raise serializers.ValidationError("tolerance must be positive")
        return value

    def create(self, validated_data):
        return ClassifierConfig(**validated_data)


class TrainedClassifierSerializer(serializers.Serializer):
    """Model export: weights, bias, per-feature scaling, q95 and a config echo"""
    weights = serializers.ListField(child=serializers.FloatField())
    bias = serializers.FloatField()
    feature_names = serializers.ListField(child=serializers.CharField())
    feature_scaling = serializers.SerializerMethodField()
    q95 = serializers.FloatField()
    training_loss = serializers.FloatField()
    iterations = serializers.IntegerField()
    converged = serializers.BooleanField()
    config = ClassifierConfigSerializer()

    def get_feature_scaling(self, model):
        return [{'mean': mean, 'scale': scale} for mean, scale in model.feature_scaling]


def load_classifier_config(data):
    return load_validated(ClassifierConfigSerializer, data or {}, 'classifier')


def dump_trained_classifier(model):
    return TrainedClassifierSerializer(model).data
