import json
from io import StringIO
from pathlib import Path
from tempfile import TemporaryDirectory

import pandas as pd
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from datasets.ingest import file_sha256

from .experiments import baseline_method, load_run_config, parse_methods

FIXTURES = Path(__file__).resolve().parent.parent / 'datasets' / 'fixtures'

SMALL_RUN = {'population_size': 40, 'epochs': 6, 'classifier': {'max_iterations': 500}}


class CommandTestCase(SimpleTestCase):
    """Temporary output directory plus call_command helpers"""

    def setUp(self):
        self._tmp = TemporaryDirectory()
        self.tmp = Path(self._tmp.name)
        self.addCleanup(self._tmp.cleanup)

    def write_config(self, data, name='run.json'):
        path = self.tmp / name
        path.write_text(json.dumps(data), encoding='utf-8')
        return str(path)

    def call(self, *args):
        stdout = StringIO()
        call_command(*args, stdout=stdout)
        return stdout.getvalue()

    def assertExitCode(self, code, *args):
        with self.assertRaises(CommandError) as ctx:
            self.call(*args)
        self.assertEqual(ctx.exception.returncode, code)
        return str(ctx.exception)


class SimulateCommandTest(CommandTestCase):
    """manage.py simulate"""

    def test_synthetic_happy_path(self):
        """A synthetic run writes the trace, both CSVs and the manifest"""
        out = self.tmp / 'sim'
        stdout = self.call('simulate', '--config', self.write_config(SMALL_RUN), '--synthetic', '--out', str(out))
        self.assertEqual(sorted(p.name for p in out.iterdir()),
                         ['decisions.csv', 'epochs.csv', 'manifest.json', 'trace.json'])
        self.assertEqual(len(pd.read_csv(out / 'epochs.csv')), 6)
        self.assertEqual(len(pd.read_csv(out / 'decisions.csv')), 240)
        self.assertIn('epochs=6', stdout)

    def test_stdout_is_key_value_only(self):
        """Every stdout token is a key=value pair"""
        stdout = self.call('simulate', '--config', self.write_config(SMALL_RUN), '--synthetic',
                           '--out', str(self.tmp / 'sim'))
        for line in stdout.strip().splitlines():
            self.assertTrue(all('=' in token for token in line.split()))

    def test_manifest_hashes_match(self):
        """Manifest hashes match the files on disk"""
        out = self.tmp / 'sim'
        self.call('simulate', '--config', self.write_config(SMALL_RUN), '--synthetic', '--out', str(out))
        manifest = json.loads((out / 'manifest.json').read_text())
        self.assertEqual(manifest['command'], 'simulate')
        self.assertEqual(len(manifest['artifacts']), 3)
        for artifact in manifest['artifacts']:
            self.assertEqual(artifact['sha256'], file_sha256(out / artifact['path']))

    def test_seed_flag_overrides_config(self):
        """--seed wins over the seed in the config file"""
        out = self.tmp / 'sim'
        self.call('simulate', '--config', self.write_config(dict(SMALL_RUN, seed=3)), '--synthetic',
                  '--seed', '11', '--out', str(out))
        trace = json.loads((out / 'trace.json').read_text())
        self.assertEqual(trace['config']['seed'], 11)

    def test_missing_config(self):
        """A missing config file exits with the config code and names the path"""
        missing = str(self.tmp / 'nowhere.json')
        message = self.assertExitCode(1, 'simulate', '--config', missing, '--synthetic', '--out', str(self.tmp))
        self.assertIn(missing, message)

    def test_unknown_config_key(self):
        """A misspelled config key exits with the config code"""
        config = self.write_config({'epochz': 3})
        self.assertExitCode(1, 'simulate', '--config', config, '--synthetic', '--out', str(self.tmp))

    def test_unknown_method(self):
        """An unknown decision rule exits with the config code"""
        self.assertExitCode(1, 'simulate', '--method', 'svm', '--synthetic', '--out', str(self.tmp))

    def test_no_data_source(self):
        """Neither --data nor --synthetic is a config error"""
        self.assertExitCode(1, 'simulate', '--out', str(self.tmp))

    def test_population_too_small_is_a_data_error(self):
        """A prepared population below the run size exits with the data code"""
        prepared = self.tmp / 'prepared'
        self.call('prepare', '--dataset', 'compas', '--data', str(FIXTURES / 'compas_boundary.csv'),
                  '--out', str(prepared))
        self.assertExitCode(2, 'simulate', '--data', str(prepared / 'population.json'), '--out', str(self.tmp))

    def test_missing_population_json_is_a_data_error(self):
        """A population file that does not exist exits with the data code"""
        missing = str(self.tmp / 'gone.json')
        message = self.assertExitCode(2, 'simulate', '--data', missing, '--out', str(self.tmp / 'sim'))
        self.assertIn(missing, message)

    def test_malformed_population_json_is_a_data_error(self):
        """An empty object and unparsable text are both data errors"""
        empty = self.write_config({}, name='empty.json')
        self.assertExitCode(2, 'simulate', '--data', empty, '--out', str(self.tmp / 'sim'))
        broken = self.tmp / 'broken.json'
        broken.write_text('{"schema": ', encoding='utf-8')
        self.assertExitCode(2, 'simulate', '--data', str(broken), '--out', str(self.tmp / 'sim'))

    def test_runtime_failure_is_one_line(self):
        """An output path that is a file exits 3 with a single-line message and no error log"""
        blocker = self.tmp / 'taken'
        blocker.write_text('', encoding='utf-8')
        with self.assertNoLogs('cli.base', 'WARNING'):
            message = self.assertExitCode(3, 'simulate', '--config', self.write_config(SMALL_RUN), '--synthetic',
                                          '--out', str(blocker))
        self.assertTrue(message.startswith('runtime failure'))
        self.assertNotIn('\n', message)

    def test_race_blind_flag(self):
        """--race-blind trains on features without the protected attribute"""
        out = self.tmp / 'sim'
        self.call('simulate', '--config', self.write_config(dict(SMALL_RUN, epochs=1)), '--synthetic',
                  '--race-blind', '--out', str(out))
        trace = json.loads((out / 'trace.json').read_text())
        self.assertNotIn('race', trace['classifier']['feature_names'])


class CompareCommandTest(CommandTestCase):
    """manage.py compare"""

    def test_single_method_rejected(self):
        """Compare needs at least two methods"""
        self.assertExitCode(1, 'compare', '--methods', 'none', '--synthetic', '--out', str(self.tmp))

    def test_unknown_method_rejected(self):
        """An unknown method in the list exits with the config code"""
        self.assertExitCode(1, 'compare', '--methods', 'nwp,svm', '--synthetic', '--out', str(self.tmp))

    def test_simulation_mode(self):
        """Simulation mode reports every epoch and zero deltas for the baseline"""
        out = self.tmp / 'cmp'
        config = self.write_config(dict(SMALL_RUN, epochs=3))
        self.call('compare', '--config', config, '--synthetic', '--methods', 'none,nwp', '--out', str(out))
        report = pd.read_csv(out / 'report.csv')
        self.assertEqual(len(report), 6)
        self.assertEqual(set(report['axis']), {'epoch'})
        baseline = report[report['method'] == 'none']
        self.assertTrue((baseline['delta_combined'] == 0).all())

    def test_compas_splits(self):
        """Split mode reports one row per method and split"""
        out = self.tmp / 'cmp'
        self.call('compare', '--dataset', 'compas', '--data', str(FIXTURES / 'compas.csv'),
                  '--methods', 'nwp,ceo', '--splits', '3', '--out', str(out))
        report = pd.read_csv(out / 'report.csv')
        self.assertEqual(len(report), 6)
        self.assertEqual(sorted(report['index'].unique().tolist()), [1, 2, 3])
        self.assertEqual(json.loads((out / 'report.json').read_text())['baseline'], 'nwp')
        for k in (1, 2, 3):
            comparator = json.loads((out / f'comparator-split-{k}.json').read_text())
            self.assertEqual(set(comparator), {'squash', 'policy', 'threshold', 'groups'})
        manifest = json.loads((out / 'manifest.json').read_text())
        self.assertIn('comparator-split-2.json', [a['path'] for a in manifest['artifacts']])

    def test_compas_nwp_within_margin_of_baseline(self):
        """Seed 0, three splits: NWP combined error stays within 0.03 of the plain classifier"""
        out = self.tmp / 'cmp'
        self.call('compare', '--dataset', 'compas', '--data', str(FIXTURES / 'compas.csv'),
                  '--methods', 'none,nwp,ceo', '--splits', '3', '--seed', '0', '--out', str(out))
        report = pd.read_csv(out / 'report.csv')
        nwp = report[report['method'] == 'nwp']
        self.assertEqual(len(nwp), 3)
        self.assertTrue((nwp['delta_combined'] <= 0.03).all())

    def test_simulation_mode_writes_comparator(self):
        """The fitted comparator is written only when ceo is compared"""
        config = self.write_config(dict(SMALL_RUN, epochs=1))
        with_ceo = self.tmp / 'with'
        self.call('compare', '--config', config, '--synthetic', '--methods', 'none,ceo', '--out', str(with_ceo))
        comparator = json.loads((with_ceo / 'comparator.json').read_text())
        self.assertEqual(len(comparator['groups']), 2)
        without = self.tmp / 'without'
        self.call('compare', '--config', config, '--synthetic', '--methods', 'none,nwp', '--out', str(without))
        self.assertFalse((without / 'comparator.json').exists())

    def test_identical_invocations_are_byte_identical(self):
        """Two runs with the same arguments write the same bytes"""
        args = ('compare', '--dataset', 'compas', '--data', str(FIXTURES / 'compas.csv'),
                '--methods', 'none,nwp,ceo', '--splits', '2', '--seed', '5')
        self.call(*args, '--out', str(self.tmp / 'first'))
        self.call(*args, '--out', str(self.tmp / 'second'))
        for name in ('report.csv', 'report.json'):
            self.assertEqual((self.tmp / 'first' / name).read_bytes(), (self.tmp / 'second' / name).read_bytes())


class PrepareCommandTest(CommandTestCase):
    """manage.py prepare"""

    def test_balanced_adult_sample(self):
        """Adult sampling balances the two race groups and hashes its source"""
        out = self.tmp / 'adult'
        self.call('prepare', '--dataset', 'adult', '--data', str(FIXTURES / 'adult.csv'),
                  '--n', '100', '--balance', 'race', '--out', str(out))
        frame = pd.read_csv(out / 'population.csv')
        self.assertEqual(len(frame), 100)
        self.assertEqual(frame['group'].value_counts().to_dict(), {'White': 50, 'Black': 50})
        document = json.loads((out / 'population.json').read_text())
        self.assertEqual(document['provenance']['sha256'], file_sha256(FIXTURES / 'adult.csv'))

    def test_compas_filters(self):
        """COMPAS keeps only rows inside the age and priors filters"""
        out = self.tmp / 'compas'
        self.call('prepare', '--dataset', 'compas', '--data', str(FIXTURES / 'compas_boundary.csv'),
                  '--max-age', '35', '--max-priors', '3', '--out', str(out))
        frame = pd.read_csv(out / 'population.csv')
        self.assertEqual(frame['id'].tolist(), ['compas-1', 'compas-4'])

    def test_prepared_population_feeds_simulate(self):
        """A prepared population JSON runs through simulate"""
        prepared = self.tmp / 'adult'
        self.call('prepare', '--dataset', 'adult', '--data', str(FIXTURES / 'adult.csv'),
                  '--n', '40', '--out', str(prepared))
        out = self.tmp / 'sim'
        self.call('simulate', '--config', self.write_config(dict(SMALL_RUN, epochs=2)),
                  '--data', str(prepared / 'population.json'), '--out', str(out))
        self.assertEqual(len(pd.read_csv(out / 'epochs.csv')), 2)

    def test_race_blind_population(self):
        """--race-blind drops the race feature column and records it in the schema"""
        out = self.tmp / 'adult'
        self.call('prepare', '--dataset', 'adult', '--data', str(FIXTURES / 'adult.csv'),
                  '--n', '40', '--race-blind', '--out', str(out))
        frame = pd.read_csv(out / 'population.csv')
        self.assertNotIn('feature.race', frame.columns)
        self.assertIn('group', frame.columns)
        document = json.loads((out / 'population.json').read_text())
        self.assertFalse(document['schema']['include_group_feature'])

    def test_unknown_dataset(self):
        """An unshipped dataset name exits with the config code"""
        self.assertExitCode(1, 'prepare', '--dataset', 'fico', '--data', str(FIXTURES / 'adult.csv'),
                            '--out', str(self.tmp))

    def test_schema_mismatch(self):
        """A CSV whose header does not match the schema exits with the data code"""
        self.assertExitCode(2, 'prepare', '--dataset', 'adult', '--data', str(FIXTURES / 'compas.csv'),
                            '--out', str(self.tmp))

    def test_odd_size(self):
        """An odd adult sample size exits with the config code"""
        self.assertExitCode(1, 'prepare', '--dataset', 'adult', '--data', str(FIXTURES / 'adult.csv'),
                            '--n', '9', '--out', str(self.tmp))

    def test_wrong_balance_column(self):
        """Balancing on a column other than the group column is refused"""
        self.assertExitCode(1, 'prepare', '--dataset', 'adult', '--data', str(FIXTURES / 'adult.csv'),
                            '--balance', 'sex', '--out', str(self.tmp))


class ExperimentHelpersTest(SimpleTestCase):
    """Method parsing and config precedence"""

    def test_methods_deduplicated_in_order(self):
        """Repeated methods collapse and keep their first position"""
        self.assertEqual(parse_methods('nwp, ceo,nwp'), ('nwp', 'ceo'))

    def test_baseline_prefers_plain_classifier(self):
        """The plain classifier is the baseline whenever it is listed"""
        self.assertEqual(baseline_method(('nwp', 'none')), 'none')
        self.assertEqual(baseline_method(('ceo', 'nwp')), 'ceo')

    def test_default_seed_fills_in(self):
        """The environment seed applies only when no seed is given"""
        self.assertEqual(load_run_config(default_seed=9).seed, 9)
        self.assertEqual(load_run_config(seed=4, default_seed=9).seed, 4)
