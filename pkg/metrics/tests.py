import numpy as np
from django.test import SimpleTestCase

from core.exceptions import InvalidInputError

from .models import WelfarePoint
from .rates import build_report, error_rates, gini, group_gap
from .serializers import REPORT_COLUMNS, dump_report, report_frame


class ErrorRatesTest(SimpleTestCase):
    """Confusion-matrix rates"""

    def test_perfect_agreement(self):
        """Matching decisions and outcomes give zero error"""
        rates = error_rates([1, 0, 1, 0], [1, 0, 1, 0], ['A'] * 4)
        self.assertEqual((rates.fpr, rates.fnr, rates.combined), (0.0, 0.0, 0.0))

    def test_constant_approver(self):
        """All approvals against half negatives"""
        rates = error_rates([1, 1, 1, 1], [1, 0, 1, 0], ['A'] * 4)
        self.assertEqual((rates.fpr, rates.fnr, rates.combined), (1.0, 0.0, 0.5))

    def test_hand_confusion_matrix(self):
        """Counts from a hand-built confusion matrix"""
        rates = error_rates([1, 0, 1, 0], [1, 1, 0, 0], ['A', 'B', 'A', 'B'])
        self.assertEqual((rates.counts.fp, rates.counts.fn), (1, 1))
        self.assertEqual(rates.combined, 0.5)

    def test_per_group(self):
        """Each group gets its own rates"""
        rates = error_rates([1, 0, 1, 0], [1, 1, 0, 0], ['A', 'B', 'A', 'B'])
        self.assertEqual(rates.per_group['A'].fpr, 1.0)
        self.assertEqual(rates.per_group['A'].fnr, 0.0)
        self.assertEqual(rates.per_group['B'].fnr, 1.0)
        self.assertEqual(rates.per_group['B'].fpr, 0.0)

    def test_undefined_group_rate_marker(self):
        """A group without negatives reports fpr as None, never 0"""
        rates = error_rates([1, 1, 0], [1, 1, 0], ['A', 'A', 'B'])
        self.assertIsNone(rates.per_group['A'].fpr)
        self.assertIsNone(rates.per_group['B'].fnr)
        self.assertIsNone(group_gap(rates, 'fpr'))

    def test_mean_rates_mode(self):
        """Mean-rates mode averages FPR and FNR"""
        rates = error_rates([1, 1, 1, 0], [1, 0, 0, 0], ['A'] * 4, mode='mean_rates')
        self.assertAlmostEqual(rates.combined, (2 / 3 + 0.0) / 2)

    def test_length_mismatch(self):
        """Decision and outcome lists must have equal length"""
        with self.assertRaises(InvalidInputError):
            error_rates([1, 0], [1], ['A', 'A'])

    def test_empty(self):
        """No decisions is an error"""
        with self.assertRaises(InvalidInputError):
            error_rates([], [], [])

    def test_combined_invariant_to_group_relabel(self):
        """Renaming groups leaves the overall combined error unchanged"""
        rng = np.random.default_rng(0)
        d = rng.integers(0, 2, size=60).tolist()
        o = rng.integers(0, 2, size=60).tolist()
        g = rng.choice(['A', 'B'], size=60).tolist()
        relabeled = ['X' if v == 'A' else 'Y' for v in g]
        self.assertEqual(error_rates(d, o, g).combined, error_rates(d, o, relabeled).combined)


class GiniTest(SimpleTestCase):
    """Gini coefficient"""

    def test_equal_values(self):
        """Equal values have zero Gini"""
        self.assertEqual(gini([3, 3, 3, 3]), 0.0)

    def test_one_owner(self):
        """One holder of everything among four"""
        self.assertAlmostEqual(gini([0, 0, 0, 7]), 0.75)

    def test_pairwise(self):
        """A small ladder by hand"""
        self.assertAlmostEqual(gini([1, 2, 3, 4]), 0.25)

    def test_matches_pairwise_definition(self):
        """Agrees with the mean absolute difference definition"""
        x = np.random.default_rng(1).uniform(0, 10, size=40)
        pairwise = np.abs(x[:, None] - x[None, :]).sum() / (2 * x.size ** 2 * x.mean())
        self.assertAlmostEqual(gini(x), pairwise, places=12)

    def test_scale_invariant(self):
        """Scaling every value leaves the Gini unchanged"""
        x = np.random.default_rng(2).uniform(0, 1, size=25)
        self.assertAlmostEqual(gini(x), gini(13.5 * x), places=12)

    def test_all_zero_rejected(self):
        """An all-zero vector has no Gini"""
        with self.assertRaises(InvalidInputError):
            gini([0, 0, 0])


class BuildReportTest(SimpleTestCase):
    """Method comparison tables"""

    def setUp(self):
        self.a = error_rates([1, 0, 1, 0], [1, 1, 0, 0], ['A', 'B', 'A', 'B'])
        self.b = error_rates([1, 1, 1, 0], [1, 1, 0, 0], ['A', 'B', 'A', 'B'])

    def test_degenerate_report(self):
        """One method, one epoch: the row carries the rates verbatim"""
        report = build_report({'nwp': [self.a]}, baseline='nwp')
        self.assertEqual(len(report.rows), 1)
        self.assertIs(report.rows[0].rates, self.a)
        self.assertEqual(report.rows[0].delta_combined, 0.0)

    def test_self_comparison(self):
        """A method compared with itself has zero deltas"""
        report = build_report({'none': [self.a, self.b], 'copy': [self.a, self.b]}, baseline='none')
        self.assertTrue(all(row.delta_combined == 0 for row in report.rows))

    def test_deltas_are_subtractions(self):
        """Deltas are the method rates minus the baseline rates"""
        report = build_report({'none': [self.a], 'nwp': [self.b]}, baseline='none')
        row = report.rows_for('nwp')[0]
        self.assertEqual(row.delta_combined, self.b.combined - self.a.combined)
        self.assertEqual(row.delta_fpr, self.b.fpr - self.a.fpr)

    def test_row_count(self):
        """One row per method and index"""
        report = build_report({'none': [self.a] * 3, 'nwp': [self.b] * 3}, baseline='none', axis='split')
        self.assertEqual(len(report.rows), 6)
        self.assertEqual([r.index for r in report.rows_for('nwp')], [1, 2, 3])

    def test_misaligned_rejected(self):
        """Methods with different row counts are rejected"""
        with self.assertRaises(InvalidInputError):
            build_report({'none': [self.a], 'nwp': [self.a, self.b]}, baseline='none')

    def test_unknown_baseline_rejected(self):
        """A baseline missing from the results is rejected"""
        with self.assertRaises(InvalidInputError):
            build_report({'nwp': [self.a]}, baseline='none')

    def test_exports(self):
        """The CSV frame and JSON export carry the welfare columns"""
        welfare = {'none': [WelfarePoint(1.0, 0.5, 0.2)], 'nwp': [WelfarePoint(2.0, 0.6, 0.1)]}
        report = build_report({'none': [self.a], 'nwp': [self.b]}, baseline='none', welfare=welfare)
        frame = report_frame(report)
        self.assertEqual(list(frame.columns), REPORT_COLUMNS)
        self.assertEqual(len(frame), 2)
        data = dump_report(report)
        self.assertEqual(data['rows'][1]['welfare']['log_nwp'], 2.0)
        self.assertIn('A', data['rows'][0]['rates']['per_group'])
