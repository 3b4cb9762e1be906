from rest_framework import serializers

from core.serializers import load_validated

from .models import ModulationConfig


class ModulationConfigSerializer(serializers.Serializer):
    """Run-config block with keys lambda, utility_scale, threshold"""
    utility_scale = serializers.FloatField(default=1.0)
    threshold = serializers.FloatField(default=0.0)

    def get_fields(self):
        fields = super().get_fields()
        # "lambda" is a keyword, so the field is declared here rather than on the class
        fields['lambda'] = serializers.FloatField(min_value=0, default=0.5, source='lambda_')
        return fields

    def validate_utility_scale(self, value):
        if value <= 0:
            raise serializers.ValidationError("utility_scale must be positive")
        return value

    def create(self, validated_data):
        return ModulationConfig(**validated_data)


def load_modulation_config(data):
    return load_validated(ModulationConfigSerializer, data or {}, 'modulation')


def dump_modulation_config(config):
    return ModulationConfigSerializer(config).data
