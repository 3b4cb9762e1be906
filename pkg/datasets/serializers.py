import pandas as pd
from rest_framework import serializers

from core.exceptions import IngestionError, InvalidConfigError, InvalidInputError, error_message
from core.models import FeatureVector, IndividualState, Label
from core.serializers import load_validated

from .models import DatasetSchema, PopulationSample, Provenance


class DatasetSchemaSerializer(serializers.Serializer):
    name = serializers.ChoiceField(choices=['adult', 'compas', 'synthetic'])
    feature_columns = serializers.ListField(child=serializers.CharField(), allow_empty=False)
    label_column = serializers.CharField()
    group_column = serializers.CharField()
    income_column = serializers.CharField(required=False, allow_null=True, default=None)
    numeric_encodings = serializers.DictField(
        child=serializers.DictField(child=serializers.FloatField()), default=dict,
    )
    groups = serializers.ListField(child=serializers.CharField(), default=list)
    include_group_feature = serializers.BooleanField(default=True)
    auxiliary_columns = serializers.ListField(child=serializers.CharField(), default=list)
    id_column = serializers.CharField(required=False, allow_null=True, default=None)

    def validate_groups(self, value):
        if value and len(value) != 2:
            raise serializers.ValidationError("exactly two groups are supported")
        return value

    def create(self, validated_data):
        return DatasetSchema(**validated_data)


def load_dataset_schema(data):
    return load_validated(DatasetSchemaSerializer, data, 'dataset schema')


class ProvenanceSerializer(serializers.Serializer):
    source = serializers.CharField()
    sha256 = serializers.CharField(allow_blank=True)
    seed = serializers.IntegerField(allow_null=True)
    filter = serializers.CharField()


class IndividualSerializer(serializers.Serializer):
    id = serializers.CharField()
    group = serializers.CharField()
    income = serializers.FloatField()
    weight = serializers.FloatField()
    features = serializers.SerializerMethodField()

    def get_features(self, individual):
        return dict(zip(individual.features.names, individual.features.values))


class PopulationSampleSerializer(serializers.Serializer):
    """JSON export of a prepared population with its provenance block"""
    schema = DatasetSchemaSerializer()
    provenance = ProvenanceSerializer()
    group_counts = serializers.SerializerMethodField()
    individuals = serializers.SerializerMethodField()

    def get_group_counts(self, sample):
        return sample.group_counts()

    def get_individuals(self, sample):
        rows = []
        for individual, label in zip(sample.individuals, sample.labels):
            row = IndividualSerializer(individual).data
            row['label'] = int(label)
            rows.append(row)
        return rows


def dump_population(sample):
    return PopulationSampleSerializer(sample).data


def load_population(data, source='population'):
    """Inverse of dump_population; feature order follows the stored key order.

    Any defect in the document is a data error naming the source.
    """
    try:
        schema = load_dataset_schema(data['schema'])
        provenance = Provenance(**data['provenance'])
        individuals, labels = [], []
        for row in data['individuals']:
            features = row['features']
            individuals.append(IndividualState(
                id=row['id'],
                features=FeatureVector(values=list(features.values()), names=list(features)),
                income=float(row['income']),
                weight=float(row['weight']),
                group=row['group'],
            ))
            labels.append(Label.of(row['label']))
        return PopulationSample(individuals=individuals, labels=labels, schema=schema, provenance=provenance)
    except (KeyError, TypeError, AttributeError) as exc:
        raise IngestionError(f"{source}: population document is malformed: {exc}") from exc
    except (InvalidConfigError, InvalidInputError) as exc:
        raise IngestionError(f"{source}: {error_message(exc)}") from exc


def population_frame(sample):
    """One CSV row per individual; features as feature.<name> columns"""
    records = []
    for individual, label in zip(sample.individuals, sample.labels):
        record = {
            'id': individual.id,
            'group': individual.group,
            'income': individual.income,
            'weight': individual.weight,
            'label': int(label),
        }
        for name, value in zip(individual.features.names, individual.features.values):
            record[f"feature.{name}"] = value
        records.append(record)
    return pd.DataFrame.from_records(records)
