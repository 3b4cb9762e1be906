import numpy as np
from django.test import SimpleTestCase
from scipy.special import expit

from core.exceptions import DegenerateDataError, InvalidInputError

from .calibration import (
    apply_mixing, base_rate_cost, fit_comparator, fit_mixing, fit_squash, generalized_rates,
    group_cost, mixed_cost, mixing_rate, squash_scores,
)
from .models import GroupScores, MixingPolicy
from .serializers import dump_comparator, dump_mixing_policy


def random_group(rng, name, n=40, bias=0.0):
    labels = rng.integers(0, 2, size=n)
    labels[0], labels[1] = 0, 1
    scores = np.clip(0.5 * labels + rng.uniform(0, 0.5, size=n) + bias, 0, 1)
    return GroupScores(group=name, scores=scores, labels=labels)


class GeneralizedRatesTest(SimpleTestCase):
    """Score-based FPR / FNR"""

    def test_perfect_predictor(self):
        """Scores equal to the labels give zero generalized rates"""
        g = GroupScores(group='A', scores=[0, 1, 1, 0], labels=[0, 1, 1, 0])
        self.assertEqual(generalized_rates(g), (0.0, 0.0))

    def test_uninformative_predictor(self):
        """A constant half score gives one half on both rates"""
        g = GroupScores(group='A', scores=[0.5] * 4, labels=[0, 1, 1, 0])
        self.assertEqual(generalized_rates(g), (0.5, 0.5))

    def test_direct_arithmetic(self):
        """Generalized FPR is the mean negative score, FNR the mean positive shortfall"""
        gfpr, gfnr = generalized_rates(GroupScores(group='A', scores=[0.2, 0.9], labels=[0, 1]))
        self.assertAlmostEqual(gfpr, 0.2)
        self.assertAlmostEqual(gfnr, 0.1)

    def test_missing_label_class(self):
        """A group without negatives has no generalized false positive rate"""
        with self.assertRaises(DegenerateDataError):
            generalized_rates(GroupScores(group='A', scores=[0.2, 0.4], labels=[1, 1]))

    def test_scores_out_of_range(self):
        """Scores outside [0, 1] are rejected"""
        with self.assertRaises(InvalidInputError):
            GroupScores(group='A', scores=[1.2], labels=[1])


class MixingRateTest(SimpleTestCase):
    """Closed-form alpha"""

    def test_interior_solution(self):
        """The mixing rate solves the cost equation inside [0, 1]"""
        alpha, residual = mixing_rate(0.1, 0.5, 0.3)
        self.assertAlmostEqual(alpha, 0.5)
        self.assertEqual(residual, 0.0)
        self.assertAlmostEqual((1 - alpha) * 0.1 + alpha * 0.5, 0.3)

    def test_clamped_solution(self):
        """An unreachable target clamps alpha to 1 and reports the residual"""
        alpha, residual = mixing_rate(0.1, 0.15, 0.3)
        self.assertEqual(alpha, 1.0)
        self.assertAlmostEqual(residual, 0.15)

    def test_already_equal(self):
        """Equal costs need no mixing"""
        self.assertEqual(mixing_rate(0.3, 0.5, 0.3), (0.0, 0.0))


class FitMixingTest(SimpleTestCase):
    """Two-group mixing policy"""

    def test_identical_groups(self):
        """Identical groups leave both alphas at zero"""
        a = GroupScores(group='A', scores=[0.2, 0.7, 0.9], labels=[0, 1, 1])
        b = GroupScores(group='B', scores=[0.2, 0.7, 0.9], labels=[0, 1, 1])
        policy = fit_mixing(a, b)
        self.assertEqual(policy.alpha_per_group, {'A': 0.0, 'B': 0.0})
        self.assertIsNone(policy.mixed_group)

    def test_symmetric(self):
        """After mixing, the mixed group costs the same as the other group"""
        rng = np.random.default_rng(0)
        a, b = random_group(rng, 'A'), random_group(rng, 'B', bias=-0.2)
        self.assertEqual(fit_mixing(a, b), fit_mixing(b, a))

    def test_equalization_exactness(self):
        """Unclamped alphas equalize expected costs on random instances"""
        rng = np.random.default_rng(1)
        checked = 0
        for _ in range(100):
            weights = (rng.uniform(0.1, 2), rng.uniform(0.1, 2))
            a = random_group(rng, 'A', bias=rng.uniform(-0.3, 0.3))
            b = random_group(rng, 'B', bias=rng.uniform(-0.3, 0.3))
            policy = fit_mixing(a, b, weights)
            if policy.clamped or policy.mixed_group is None:
                continue
            groups = {'A': a, 'B': b}
            low = policy.mixed_group
            high = 'B' if low == 'A' else 'A'
            after = mixed_cost(groups[low], policy.alpha_per_group[low], weights)
            self.assertAlmostEqual(after, group_cost(groups[high], weights), delta=1e-9)
            checked += 1
        self.assertGreater(checked, 0)

    def test_clamped_flags_residual(self):
        """A clamped fit records the cost gap it could not close"""
        # A scores perfectly; even its base-rate predictor stays cheaper than B
        a = GroupScores(group='A', scores=[0.0, 0.0, 1.0, 1.0], labels=[0, 0, 1, 1])
        b = GroupScores(group='B', scores=[1.0, 1.0, 0.0, 0.0], labels=[0, 0, 1, 1])
        policy = fit_mixing(a, b)
        self.assertTrue(policy.clamped)
        self.assertEqual(policy.alpha_per_group['A'], 1.0)
        self.assertAlmostEqual(policy.residual_gap, group_cost(b, (1, 1)) - base_rate_cost(a, (1, 1)))

    def test_bad_cost_weights(self):
        """Cost weights of zero are rejected"""
        g = GroupScores(group='A', scores=[0.2, 0.8], labels=[0, 1])
        h = GroupScores(group='B', scores=[0.2, 0.8], labels=[0, 1])
        with self.assertRaises(InvalidInputError):
            fit_mixing(g, h, (0, 0))

    def test_export(self):
        """Cost weights export under fp and fn keys"""
        policy = MixingPolicy(alpha_per_group={'A': 0.25, 'B': 0.0}, cost_weights=(1, 1),
                              base_rate_per_group={'A': 0.4, 'B': 0.6}, mixed_group='A')
        data = dump_mixing_policy(policy)
        self.assertEqual(data['cost_weights'], {'fp': 1.0, 'fn': 1.0})
        self.assertEqual(data['alpha_per_group']['A'], 0.25)


class ApplyMixingTest(SimpleTestCase):
    """Randomized replacement by the base rate"""

    def policy(self, alpha):
        return MixingPolicy(alpha_per_group={'A': alpha, 'B': 0.0}, cost_weights=(1, 1),
                            base_rate_per_group={'A': 0.3, 'B': 0.6})

    def test_alpha_zero_is_identity(self):
        """With alpha zero every score passes through"""
        rng = np.random.default_rng(0)
        self.assertTrue(all(apply_mixing(0.8, 'A', self.policy(0.0), rng) == 0.8 for _ in range(200)))

    def test_alpha_one_replaces(self):
        """With alpha one every score becomes the base rate"""
        rng = np.random.default_rng(0)
        self.assertTrue(all(apply_mixing(0.8, 'A', self.policy(1.0), rng) == 0.3 for _ in range(200)))

    def test_replacement_frequency(self):
        """Half the draws are replaced when alpha is one half"""
        rng = np.random.default_rng(2)
        draws = [apply_mixing(0.8, 'A', self.policy(0.5), rng) for _ in range(10_000)]
        self.assertAlmostEqual(np.mean(np.asarray(draws) == 0.3), 0.5, delta=0.02)

    def test_calibrated_group_keeps_base_rate(self):
        """Expected mean score after mixing equals the base rate when scores are calibrated"""
        g = GroupScores(group='A', scores=[0.6] * 5, labels=[0, 0, 1, 1, 1])
        alpha = 0.4
        expected = (1 - alpha) * np.mean(g.scores) + alpha * g.base_rate
        self.assertAlmostEqual(expected, g.base_rate)

    def test_unknown_group(self):
        """A group the policy never saw is rejected"""
        with self.assertRaises(InvalidInputError):
            apply_mixing(0.5, 'C', self.policy(0.5), np.random.default_rng(0))

    def test_deterministic(self):
        """The same generator seed replays the same draws"""
        first = [apply_mixing(0.9, 'A', self.policy(0.5), np.random.default_rng(7)) for _ in range(3)]
        second = [apply_mixing(0.9, 'A', self.policy(0.5), np.random.default_rng(7)) for _ in range(3)]
        self.assertEqual(first, second)


class SquashTest(SimpleTestCase):
    """Logistic squash of raw margins"""

    def test_recovers_generating_link(self):
        """Labels drawn from a known logistic link give back its slope and intercept"""
        rng = np.random.default_rng(3)
        raw = rng.normal(size=5000)
        labels = (rng.random(5000) < expit(2.0 * raw - 0.5)).astype(int)
        squash = fit_squash(raw, labels)
        self.assertAlmostEqual(squash.slope, 2.0, delta=0.25)
        self.assertAlmostEqual(squash.intercept, -0.5, delta=0.2)
        scores = squash_scores(squash, [-2.0, 0.0, 2.0])
        self.assertTrue(scores[0] < scores[1] < scores[2])

    def test_single_label_rejected(self):
        """A squash fit needs both labels"""
        with self.assertRaises(DegenerateDataError):
            fit_squash([0.1, 0.2], [1, 1])

    def test_comparator_fit(self):
        """The comparator sorts its two groups and keeps alphas in range"""
        rng = np.random.default_rng(4)
        raw = rng.normal(size=200)
        labels = (raw + rng.normal(0, 0.8, size=200) > 0).astype(int)
        groups = np.where(rng.random(200) < 0.5, 'A', 'B')
        comparator = fit_comparator(raw, labels, groups)
        self.assertEqual(comparator.groups, ('A', 'B'))
        self.assertTrue(all(0 <= a <= 1 for a in comparator.policy.alpha_per_group.values()))

    def test_comparator_export(self):
        """The exported comparator carries the squash, the policy and the group order"""
        rng = np.random.default_rng(4)
        raw = rng.normal(size=200)
        labels = (raw + rng.normal(0, 0.8, size=200) > 0).astype(int)
        groups = np.where(rng.random(200) < 0.5, 'A', 'B')
        comparator = fit_comparator(raw, labels, groups)
        data = dump_comparator(comparator)
        self.assertEqual(data['groups'], ['A', 'B'])
        self.assertEqual(data['squash']['slope'], comparator.squash.slope)
        self.assertEqual(data['threshold'], 0.5)
        self.assertEqual(set(data['policy']['alpha_per_group']), {'A', 'B'})
