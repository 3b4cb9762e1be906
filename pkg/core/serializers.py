from rest_framework import serializers

from .exceptions import InvalidConfigError, InvalidInputError, error_message
from .models import UtilityTable


class UtilityTableSerializer(serializers.Serializer):
    """JSON <-> UtilityTable, field names as on the dataclass"""
    interest_rate = serializers.FloatField(min_value=0, default=0.1)
    principal_loss_fraction = serializers.FloatField(min_value=0, default=1.0)
    individual_gain_repay = serializers.FloatField(min_value=0, default=0.2)
    individual_loss_default = serializers.FloatField(min_value=0, default=0.5)
    rejection_opportunity_cost = serializers.FloatField(min_value=0, default=0.05)
    payoff_shift = serializers.FloatField(required=False)
    utility_floor = serializers.FloatField(default=1e-6)

    def validate_utility_floor(self, value):
        if value <= 0:
            raise serializers.ValidationError("utility_floor must be positive")
        return value

    def create(self, validated_data):
        return UtilityTable(**validated_data)


def reject_unknown_keys(serializer, data, label):
    """Serializer classes silently drop unknown keys; run configs must not"""
    if not isinstance(data, dict):
        raise InvalidConfigError(f"{label} must be a JSON object")
    unknown = sorted(set(data) - set(serializer.fields))
    if unknown:
        raise InvalidConfigError(f"{label}: unknown keys {', '.join(unknown)}")


def load_validated(serializer_class, data, label, **defaults):
    """Validate a JSON object with a serializer and build its domain object"""
    serializer = serializer_class(data=data)
    reject_unknown_keys(serializer, data, label)
    if not serializer.is_valid():
        details = '; '.join(
            f"{key}: {' '.join(str(m) for m in messages)}"
            for key, messages in serializer.errors.items()
        )
        raise InvalidConfigError(f"{label}: {details}")
    missing = {key: value for key, value in defaults.items() if key not in serializer.validated_data}
    try:
        return serializer.save(**missing)
    except InvalidInputError as exc:
        raise InvalidConfigError(f"{label}: {error_message(exc)}") from exc


def load_utility_table(data, payoff_shift=None):
    """UtilityTable from its JSON object; payoff_shift defaults to the supplied income ceiling"""
    defaults = {} if payoff_shift is None else {'payoff_shift': payoff_shift}
    return load_validated(UtilityTableSerializer, data or {}, 'utility_table', **defaults)


def dump_utility_table(table):
    return UtilityTableSerializer(table).data
