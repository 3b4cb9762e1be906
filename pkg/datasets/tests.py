import hashlib
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from core.exceptions import (
    DegenerateDataError, IngestionError, InvalidConfigError, InvalidInputError, SamplingError,
)
from core.models import Label

from .ingest import (
    income_proxy, load_csv, load_schema, prepare_adult, prepare_compas,
    race_blind, split, synthesize_population,
)
from .models import DatasetSchema, SynthesisSpec
from .serializers import dump_population, load_population, population_frame

FIXTURES = Path(__file__).resolve().parent / 'fixtures'


def fixture(name):
    return FIXTURES / name


def planted_labels(sample, spec):
    """Noise-free labels of the planted rule, recomputed from the features"""
    w_income, w_x1, w_x2, bias = spec.planted_weights
    lo, hi = spec.income_lo, spec.income_hi
    labels = []
    for individual in sample.individuals:
        values = dict(zip(individual.features.names, individual.features.values))
        income_z = (individual.income - (lo + hi) / 2.0) / ((hi - lo) / 4.0)
        score = w_income * income_z + w_x1 * values['x1'] + w_x2 * values['x2'] + bias
        labels.append(Label.APPROVE if score > 0 else Label.DENY)
    return labels


class SchemaTest(SimpleTestCase):
    """Shipped schemas and their invariants"""

    def test_shipped_schemas_load(self):
        """Both shipped schemas load and list their model features"""
        adult = load_schema('adult')
        compas = load_schema('compas')
        self.assertEqual(adult.groups, ('White', 'Black'))
        self.assertEqual(compas.model_features, ['age', 'priors_count', 'race'])

    def test_unknown_dataset_name(self):
        """An unknown schema name is a config error"""
        with self.assertRaises(InvalidConfigError):
            load_schema('fico')

    def test_race_aware_needs_group_encoding(self):
        """Using the group as a feature needs a numeric encoding for it"""
        with self.assertRaises(InvalidInputError):
            DatasetSchema(name='adult', feature_columns=['age'], label_column='y', group_column='race')

    def test_label_is_not_a_feature(self):
        """The label column cannot also be a feature"""
        with self.assertRaises(InvalidInputError):
            DatasetSchema(
                name='adult', feature_columns=['age', 'y'], label_column='y',
                group_column='race', include_group_feature=False,
            )


class LoadCsvTest(SimpleTestCase):
    """CSV parsing against a schema"""

    def setUp(self):
        self.schema = load_schema('adult')

    def test_well_formed_rows(self):
        """Clean rows all load"""
        table = load_csv(fixture('adult_small.csv'), self.schema)
        self.assertEqual(len(table), 3)
        self.assertEqual(table.dropped_missing, 0)

    def test_missing_label_dropped_and_counted(self):
        """Rows without a label are dropped and counted"""
        table = load_csv(fixture('adult_missing_label.csv'), self.schema)
        self.assertEqual(len(table), 2)
        self.assertEqual(table.dropped_missing, 1)

    def test_unknown_categorical_value(self):
        """An unknown categorical value is reported by value"""
        with self.assertRaisesMessage(IngestionError, "'Unknown'"):
            load_csv(fixture('adult_unknown_value.csv'), self.schema)

    def test_unknown_value_names_row_and_column(self):
        """The error names the CSV row and column"""
        with self.assertRaisesMessage(IngestionError, 'row 3, column sex'):
            load_csv(fixture('adult_unknown_value.csv'), self.schema)

    def test_missing_file(self):
        """A missing file is an ingestion error naming the path"""
        with self.assertRaisesMessage(IngestionError, 'no-such-file.csv'):
            load_csv(fixture('no-such-file.csv'), self.schema)

    def test_header_mismatch(self):
        """A header without the schema columns is rejected"""
        with self.assertRaisesMessage(IngestionError, 'education-num'):
            load_csv(fixture('compas.csv'), self.schema)

    def test_other_groups_dropped(self):
        """Rows outside the two groups are dropped and counted"""
        table = load_csv(fixture('adult.csv'), self.schema)
        self.assertEqual(table.dropped_group, 12)
        self.assertEqual(len(table), 138)

    def test_encodings_applied(self):
        """Categorical columns come out numerically encoded"""
        table = load_csv(fixture('adult_small.csv'), self.schema)
        self.assertEqual(table.frame['sex'].tolist(), [1.0, 1.0, 0.0])
        self.assertEqual(table.frame['income'].tolist(), [1.0, 1.0, 1.0])

    def test_source_hash(self):
        """The loaded table records the file hash"""
        path = fixture('adult_small.csv')
        table = load_csv(path, self.schema)
        self.assertEqual(table.sha256, hashlib.sha256(path.read_bytes()).hexdigest())


class PrepareAdultTest(SimpleTestCase):
    """Balanced Adult sample with the income proxy"""

    def setUp(self):
        self.table = load_csv(fixture('adult.csv'), load_schema('adult'))

    def test_balanced_sample(self):
        """The adult sample has equal group counts"""
        sample = prepare_adult(self.table, 100, 100, 1000, 20, np.random.default_rng(0))
        self.assertEqual(sample.group_counts(), {'Black': 50, 'White': 50})
        self.assertTrue(all(100 <= ind.income <= 1000 for ind in sample.individuals))

    def test_zero_noise_is_the_linear_map(self):
        """Without noise the income proxy is the plain linear map"""
        sample = prepare_adult(self.table, 20, 100, 1000, 0.0, np.random.default_rng(3))
        frame = self.table.frame.set_index('__row__')
        for individual in sample.individuals:
            row = frame.loc[int(individual.id.split('-')[1])]
            expected = income_proxy(row['income'], row['education-num'], row['hours-per-week'], 100, 1000)
            self.assertEqual(individual.income, float(expected))

    def test_same_seed_same_ids(self):
        """The same generator seed draws the same individuals"""
        first = prepare_adult(self.table, 40, 100, 1000, 20, np.random.default_rng(5))
        second = prepare_adult(self.table, 40, 100, 1000, 20, np.random.default_rng(5))
        self.assertEqual([i.id for i in first.individuals], [i.id for i in second.individuals])
        self.assertEqual([i.income for i in first.individuals], [i.income for i in second.individuals])

    def test_insufficient_group_rows(self):
        """Asking for more rows than a group has is a sampling error"""
        with self.assertRaises(SamplingError):
            prepare_adult(self.table, 140, 100, 1000, 20, np.random.default_rng(0))

    def test_feature_vector_layout(self):
        """Features follow the schema order with income last"""
        sample = prepare_adult(self.table, 10, 100, 1000, 20, np.random.default_rng(0))
        individual = sample.individuals[0]
        self.assertEqual(individual.features.names[-2:], ('race', 'income'))
        self.assertEqual(individual.features.values[-1], individual.income)

    def test_odd_size_rejected(self):
        """An odd adult sample size is rejected"""
        with self.assertRaises(InvalidInputError):
            prepare_adult(self.table, 9, 100, 1000, 20, np.random.default_rng(0))


class PrepareCompasTest(SimpleTestCase):
    """Age and priors filter"""

    def setUp(self):
        self.schema = load_schema('compas')

    def test_filter_boundaries(self):
        """Age 35 is inclusive, three priors is not"""
        table = load_csv(fixture('compas_boundary.csv'), self.schema)
        sample = prepare_compas(table, max_age=35, max_priors=3)
        self.assertEqual([i.id for i in sample.individuals], ['compas-1', 'compas-4'])

    def test_label_is_no_reoffence(self):
        """Release is the favorable label"""
        table = load_csv(fixture('compas_boundary.csv'), self.schema)
        sample = prepare_compas(table)
        self.assertEqual(sample.labels, [Label.APPROVE, Label.DENY])

    def test_midpoint_stake(self):
        """Without an income column every stake is the midpoint"""
        table = load_csv(fixture('compas_boundary.csv'), self.schema)
        sample = prepare_compas(table, lo=100, hi=1000)
        self.assertTrue(all(i.income == 550.0 for i in sample.individuals))
        self.assertEqual(sample.individuals[0].features.names, ('age', 'priors_count', 'race'))

    def test_empty_result(self):
        """Filters that remove every row are a degenerate data error"""
        table = load_csv(fixture('compas_boundary.csv'), self.schema)
        with self.assertRaises(DegenerateDataError):
            prepare_compas(table, max_age=18)

    def test_full_fixture(self):
        """The full fixture keeps only filtered rows of the two groups"""
        table = load_csv(fixture('compas.csv'), self.schema)
        sample = prepare_compas(table)
        self.assertEqual(len(sample), 127)
        self.assertEqual(sorted(sample.group_counts()), ['African-American', 'Caucasian'])


class SplitTest(SimpleTestCase):
    """Stratified train/test split"""

    def setUp(self):
        self.sample = synthesize_population(SynthesisSpec(size=100), np.random.default_rng(0), seed=0)

    def test_seventy_thirty(self):
        """A 0.7 split of 100 gives 70 and 30"""
        train, test = split(self.sample, 0.7, seed=1)
        self.assertEqual((len(train), len(test)), (70, 30))

    def test_partition(self):
        """Train and test are disjoint and cover the sample"""
        train, test = split(self.sample, 0.7, seed=1)
        train_ids = {i.id for i in train.individuals}
        test_ids = {i.id for i in test.individuals}
        self.assertFalse(train_ids & test_ids)
        self.assertEqual(train_ids | test_ids, {i.id for i in self.sample.individuals})

    def test_stratified(self):
        """Each group is split in the same proportion"""
        train, _ = split(self.sample, 0.7, seed=2)
        self.assertEqual(train.group_counts(), {'African-American': 35, 'White': 35})

    def test_distinct_seeds_distinct_splits(self):
        """Different seeds hold out different individuals"""
        tests = [frozenset(i.id for i in split(self.sample, 0.7, seed=s)[1].individuals) for s in (1, 2, 3)]
        self.assertEqual(len(set(tests)), 3)

    def test_same_seed_same_split(self):
        """The same seed holds out the same individuals"""
        first = split(self.sample, 0.7, seed=4)[1]
        second = split(self.sample, 0.7, seed=4)[1]
        self.assertEqual([i.id for i in first.individuals], [i.id for i in second.individuals])

    def test_fraction_out_of_range(self):
        """Fractions outside (0, 1) are rejected"""
        for fraction in (0, 1, 1.5):
            with self.assertRaises(InvalidInputError):
                split(self.sample, fraction, seed=0)


class SynthesizeTest(SimpleTestCase):
    """Offline two-group populations"""

    def test_noiseless_labels_follow_planted_rule(self):
        """Without label noise the labels follow the planted rule exactly"""
        spec = SynthesisSpec(label_noise=0.0)
        sample = synthesize_population(spec, np.random.default_rng(9))
        self.assertEqual(sample.labels, planted_labels(sample, spec))

    def test_default_balance(self):
        """The default population splits evenly between the groups"""
        sample = synthesize_population(SynthesisSpec(), np.random.default_rng(0))
        self.assertEqual(sample.group_counts(), {'African-American': 50, 'White': 50})

    def test_incomes_clamped(self):
        """Wide income spreads are clamped into the income range"""
        spec = SynthesisSpec(income_sds=(900.0, 900.0))
        sample = synthesize_population(spec, np.random.default_rng(0))
        self.assertTrue(all(100 <= i.income <= 1000 for i in sample.individuals))

    def test_fixed_seed_identical_csv(self):
        """A fixed seed gives identical CSV text"""
        first = population_frame(synthesize_population(SynthesisSpec(), np.random.default_rng(42))).to_csv(index=False)
        second = population_frame(synthesize_population(SynthesisSpec(), np.random.default_rng(42))).to_csv(index=False)
        self.assertEqual(first, second)

    def test_race_blind(self):
        """The blind copy drops the race feature and records it in the schema"""
        sample = synthesize_population(SynthesisSpec(), np.random.default_rng(0))
        blind = race_blind(sample)
        self.assertEqual(blind.individuals[0].features.names, ('x1', 'x2', 'income'))
        self.assertFalse(blind.schema.include_group_feature)

    def test_both_labels_present(self):
        """Both labels appear in a default population"""
        sample = synthesize_population(SynthesisSpec(), np.random.default_rng(0))
        self.assertEqual(set(sample.labels), {Label.DENY, Label.APPROVE})


class PopulationExportTest(SimpleTestCase):
    """PopulationSample JSON and CSV exports"""

    def test_json_document(self):
        """The JSON document carries schema, provenance and every individual"""
        sample = synthesize_population(SynthesisSpec(size=6), np.random.default_rng(0), seed=7)
        data = dump_population(sample)
        self.assertEqual(data['provenance']['seed'], 7)
        self.assertEqual(data['group_counts'], {'African-American': 3, 'White': 3})
        restored = load_population(data)
        self.assertEqual(restored.individuals[2].features, sample.individuals[2].features)
        self.assertEqual(restored.labels, sample.labels)

    def test_csv_columns(self):
        """Features flatten into feature.<name> columns"""
        sample = synthesize_population(SynthesisSpec(size=4), np.random.default_rng(0))
        frame = population_frame(sample)
        self.assertEqual(
            list(frame.columns),
            ['id', 'group', 'income', 'weight', 'label', 'feature.x1', 'feature.x2', 'feature.race', 'feature.income'],
        )

    def test_malformed_document(self):
        """A broken population document is a data error naming its source"""
        with self.assertRaises(IngestionError) as ctx:
            load_population({'schema': {}}, source='pop.json')
        self.assertIn('pop.json', str(ctx.exception))

    def test_non_object_document(self):
        """A JSON list instead of an object is rejected the same way"""
        with self.assertRaises(IngestionError):
            load_population([1, 2, 3])
