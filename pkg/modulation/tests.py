import math

import numpy as np
from django.test import SimpleTestCase

from classifier.models import ClassifierConfig, MarginDistance
from classifier.svm import margin, predict, train
from classifier.tests import overlapping_clusters
from core.exceptions import InvalidConfigError, InvalidInputError
from core.models import DecisionUtility, Label

from .models import ModulationConfig
from .modulating import modulate
from .serializers import dump_modulation_config, load_modulation_config


def utility(u):
    return DecisionUtility(delta_nwp_1=u, delta_nwp_0=0.0, u_decision=u)


class ModulateTest(SimpleTestCase):
    """Tanh-squashed, confidence-gated adjustment"""

    def test_zero_strength_is_identity(self):
        """lambda = 0 leaves the sign rule untouched"""
        config = ModulationConfig(lambda_=0.0)
        for raw, eps in ((0.3, 0.1), (-0.2, -0.05), (0.0, 0.0)):
            score = modulate(MarginDistance(raw, eps), utility(7.0), config)
            self.assertEqual(score.adjustment, 0.0)
            self.assertEqual(score.decision, Label.APPROVE if raw > 0 else Label.DENY)

    def test_confident_point_not_adjusted(self):
        """|epsilon| = 1 closes the gate"""
        score = modulate(MarginDistance(-4.0, -1.0), utility(100.0), ModulationConfig(lambda_=3.0))
        self.assertEqual(score.adjustment, 0.0)
        self.assertEqual(score.decision, Label.DENY)

    def test_near_boundary_flip(self):
        """raw -0.05, epsilon -0.02, large u, lambda 1 flips to approve"""
        score = modulate(MarginDistance(-0.05, -0.02), utility(50.0), ModulationConfig(lambda_=1.0, utility_scale=1.0))
        self.assertAlmostEqual(score.adjustment, 0.98, places=9)
        self.assertAlmostEqual(score.modulated, 0.93, places=9)
        self.assertEqual(score.decision, Label.APPROVE)

    def test_threshold_tie_denies(self):
        """A score exactly at the threshold denies"""
        score = modulate(MarginDistance(0.0, 0.0), utility(0.0), ModulationConfig())
        self.assertEqual(score.decision, Label.DENY)

    def test_non_finite_rejected(self):
        """A non-finite decision utility is rejected"""
        with self.assertRaises(InvalidInputError):
            modulate(MarginDistance(0.1, 0.1), utility(math.nan), ModulationConfig())

    def test_invalid_config(self):
        """A negative lambda is rejected"""
        with self.assertRaises(InvalidInputError):
            ModulationConfig(lambda_=-1.0)
        with self.assertRaises(InvalidInputError):
            ModulationConfig(utility_scale=0.0)


class ModulationPropertyTest(SimpleTestCase):
    """Monotonicity, boundedness and the gate over sampled inputs"""

    def setUp(self):
        self.rng = np.random.default_rng(123)

    def sample_margin(self):
        eps = float(self.rng.uniform(-1, 1))
        return MarginDistance(raw=eps * float(self.rng.uniform(0.1, 5.0)), normalized=eps)

    def test_monotone_in_utility(self):
        """A larger decision utility never lowers the score"""
        for _ in range(10_000):
            m = self.sample_margin()
            config = ModulationConfig(lambda_=float(self.rng.uniform(0, 3)), utility_scale=float(self.rng.uniform(0.1, 5)))
            u_a, u_b = np.sort(self.rng.normal(0, 5, size=2))
            self.assertLessEqual(
                modulate(m, utility(float(u_a)), config).modulated,
                modulate(m, utility(float(u_b)), config).modulated,
            )

    def test_adjustment_bounded_by_lambda(self):
        """The adjustment never exceeds lambda in magnitude"""
        for _ in range(10_000):
            lam = float(self.rng.uniform(0, 3))
            score = modulate(self.sample_margin(), utility(float(self.rng.normal(0, 20))), ModulationConfig(lambda_=lam))
            self.assertLessEqual(abs(score.adjustment), lam)

    def test_gate_closed_at_unit_epsilon(self):
        """A normalized margin of one closes the gate"""
        for _ in range(10_000):
            sign = 1.0 if self.rng.random() < 0.5 else -1.0
            m = MarginDistance(raw=sign * float(self.rng.uniform(0.1, 5)), normalized=sign)
            score = modulate(m, utility(float(self.rng.normal(0, 20))), ModulationConfig(lambda_=float(self.rng.uniform(0, 3))))
            self.assertEqual(score.adjustment, 0.0)

    def test_adjustment_largest_at_boundary(self):
        """The adjustment peaks where the normalized margin is zero"""
        config = ModulationConfig(lambda_=1.0)
        u = utility(2.0)
        at_zero = abs(modulate(MarginDistance(0.0, 0.0), u, config).adjustment)
        for eps in np.linspace(-1, 1, 41):
            m = MarginDistance(raw=float(eps), normalized=float(eps))
            self.assertLessEqual(abs(modulate(m, u, config).adjustment), at_zero)

    def test_zero_lambda_matches_classifier(self):
        """lambda = 0 reproduces classifier.predict on a seeded population"""
        dataset = overlapping_clusters(seed=4, n=200)
        model = train(dataset, ClassifierConfig())
        config = ModulationConfig(lambda_=0.0)
        rng = np.random.default_rng(4)
        for x, _ in dataset:
            score = modulate(margin(model, x), utility(float(rng.normal(0, 10))), config)
            self.assertEqual(score.decision, predict(model, x))


class ModulationSerializerTest(SimpleTestCase):
    """Run-config block uses the key 'lambda'"""

    def test_lambda_key(self):
        """The config key lambda maps onto lambda_"""
        config = load_modulation_config({'lambda': 0.25, 'utility_scale': 2.0})
        self.assertEqual(config, ModulationConfig(lambda_=0.25, utility_scale=2.0, threshold=0.0))
        self.assertEqual(dump_modulation_config(config)['lambda'], 0.25)

    def test_negative_lambda_rejected(self):
        """A negative lambda fails config validation"""
        with self.assertRaises(InvalidConfigError):
            load_modulation_config({'lambda': -0.5})

    def test_unknown_key_rejected(self):
        """The attribute spelling is not an accepted key"""
        with self.assertRaises(InvalidConfigError):
            load_modulation_config({'lambda_': 0.5})
