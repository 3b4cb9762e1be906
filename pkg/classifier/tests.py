import numpy as np
from django.test import SimpleTestCase

from core.exceptions import DegenerateDataError, InvalidConfigError, InvalidInputError
from core.models import FeatureVector, Label

from .models import ClassifierConfig, MarginDistance
from .serializers import dump_trained_classifier, load_classifier_config
from .svm import dataset_arrays, hinge_objective, margin, predict, raw_margins, train


def separable_clusters(seed=0, per_class=10):
    """Two well-separated 2-D gaussian clusters"""
    rng = np.random.default_rng(seed)
    names = ('x1', 'x2')
    dataset = []
    for label, centre in ((1, (3.0, 3.0)), (0, (-3.0, -3.0))):
        for point in rng.normal(centre, 0.5, size=(per_class, 2)):
            dataset.append((FeatureVector(values=point, names=names), Label(label)))
    return dataset


def overlapping_clusters(seed=1, n=80):
    rng = np.random.default_rng(seed)
    names = ('a', 'b', 'c')
    X = rng.normal(size=(n, 3))
    y = (X @ np.array([1.0, -0.5, 0.25]) + rng.normal(0, 0.7, size=n) > 0).astype(int)
    return [(FeatureVector(values=row, names=names), Label(int(v))) for row, v in zip(X, y)]


class TrainTest(SimpleTestCase):
    """Hinge-loss subgradient trainer"""

    def test_separable_clusters_fit_perfectly(self):
        """Well-separated clusters are classified without error"""
        dataset = separable_clusters()
        model = train(dataset, ClassifierConfig())
        accuracy = np.mean([predict(model, x) == y for x, y in dataset])
        self.assertEqual(accuracy, 1.0)

    def test_single_class_rejected(self):
        """A dataset with all labels 1 is degenerate"""
        dataset = [(x, Label.APPROVE) for x, _ in separable_clusters()]
        with self.assertRaises(DegenerateDataError):
            train(dataset, ClassifierConfig())

    def test_empty_dataset_rejected(self):
        """Training on nothing is a degenerate data error"""
        with self.assertRaises(DegenerateDataError):
            train([], ClassifierConfig())

    def test_dimension_mismatch_rejected(self):
        """Feature vectors of different lengths are rejected"""
        dataset = separable_clusters()
        dataset.append((FeatureVector(values=[1.0], names=['x1']), Label.DENY))
        with self.assertRaises(InvalidInputError):
            train(dataset, ClassifierConfig())

    def test_duplicated_dataset_same_boundary(self):
        """Each point twice gives the same normalized weights"""
        dataset = overlapping_clusters()
        single = train(dataset, ClassifierConfig())
        double = train(dataset + dataset, ClassifierConfig())
        w1 = np.append(single.weights, single.bias)
        w2 = np.append(double.weights, double.bias)
        np.testing.assert_allclose(w1 / np.linalg.norm(w1), w2 / np.linalg.norm(w2), atol=1e-6)

    def test_retraining_is_bit_identical(self):
        """Identical data and seed yield identical models"""
        dataset = overlapping_clusters()
        self.assertEqual(train(dataset, ClassifierConfig()), train(dataset, ClassifierConfig()))

    def test_loss_history_non_increasing(self):
        """Checkpointed objective of the averaged iterate never increases"""
        model = train(overlapping_clusters(), ClassifierConfig(max_iterations=500, checkpoint_every=10))
        history = model.loss_history
        self.assertTrue(all(b <= a + model.config.tolerance for a, b in zip(history, history[1:])))
        X, y, _ = dataset_arrays(overlapping_clusters())
        Xs = model.standardize(X)
        recomputed = hinge_objective(Xs, 2.0 * y - 1.0, np.asarray(model.weights), model.bias, model.config.c)
        self.assertAlmostEqual(recomputed, model.training_loss, places=9)

    def test_objective_better_than_zero_model(self):
        """Training improves on the all-zero hyperplane (objective C)"""
        model = train(overlapping_clusters(), ClassifierConfig())
        self.assertLess(model.training_loss, model.config.c)

    def test_non_default_gamma_warns(self):
        """gamma is kept for the record and flagged when changed"""
        with self.assertLogs('classifier.svm', level='WARNING') as logs:
            train(separable_clusters(), ClassifierConfig(gamma=0.1))
        self.assertIn('gamma', logs.output[0])

    def test_invalid_config(self):
        """A non-positive C is rejected"""
        with self.assertRaises(InvalidInputError):
            ClassifierConfig(c=0)
        with self.assertRaises(InvalidInputError):
            ClassifierConfig(max_iterations=0)


class MarginTest(SimpleTestCase):
    """Raw and normalized hyperplane distance"""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.dataset = overlapping_clusters()
        cls.model = train(cls.dataset, ClassifierConfig())

    def point_on_hyperplane(self):
        """Unscaled point whose standardized image lies on the boundary"""
        w = np.asarray(self.model.weights)
        xs = -self.model.bias * w / np.dot(w, w)
        return xs * np.asarray(self.model.feature_scales) + np.asarray(self.model.feature_means)

    def test_boundary_point(self):
        """A point on the hyperplane has zero margin"""
        m = margin(self.model, self.point_on_hyperplane())
        self.assertAlmostEqual(m.raw, 0.0, places=9)
        self.assertAlmostEqual(m.normalized, 0.0, places=9)

    def test_maximal_point_saturates(self):
        """The training point with maximal |raw| normalizes to +-1"""
        X, _, _ = dataset_arrays(self.dataset)
        raw = raw_margins(self.model, X)
        extreme = X[int(np.argmax(np.abs(raw)))]
        self.assertEqual(abs(margin(self.model, extreme).normalized), 1.0)

    def test_normalized_by_95th_percentile(self):
        """Below the clamp the normalized margin is raw over the 95th percentile of training |raw|"""
        X, _, _ = dataset_arrays(self.dataset)
        raw = raw_margins(self.model, X)
        self.assertAlmostEqual(self.model.q95, float(np.percentile(np.abs(raw), 95)))
        inside = X[int(np.argmin(np.abs(raw)))]
        m = margin(self.model, inside)
        self.assertAlmostEqual(m.normalized, m.raw / self.model.q95)

    def test_sign_agrees_with_prediction(self):
        """sign(normalized) follows the predicted label over the training set"""
        for x, _ in self.dataset:
            m = margin(self.model, x)
            label = predict(self.model, x)
            self.assertLessEqual(abs(m.normalized), 1.0)
            self.assertEqual(label == Label.APPROVE, m.raw > 0)
            if label == Label.APPROVE:
                self.assertGreater(m.normalized, 0)
            else:
                self.assertLessEqual(m.normalized, 0)

    def test_dimension_mismatch(self):
        """A query of the wrong dimension is rejected"""
        with self.assertRaises(InvalidInputError):
            margin(self.model, [1.0])
        with self.assertRaises(InvalidInputError):
            predict(self.model, [1.0, 2.0])

    def test_margin_distance_invariants(self):
        """Normalized margins outside [-1, 1] are rejected"""
        with self.assertRaises(InvalidInputError):
            MarginDistance(raw=1.0, normalized=1.5)
        with self.assertRaises(InvalidInputError):
            MarginDistance(raw=1.0, normalized=-0.5)


class PredictTest(SimpleTestCase):
    """Sign rule with conservative tie-break"""

    def setUp(self):
        self.model = train(separable_clusters(), ClassifierConfig())

    def test_tie_denies(self):
        """A raw margin of exactly zero resolves to deny"""
        w = np.asarray(self.model.weights)
        xs = -self.model.bias * w / np.dot(w, w)
        x = xs * np.asarray(self.model.feature_scales) + np.asarray(self.model.feature_means)
        m = margin(self.model, x)
        expected = Label.APPROVE if m.raw > 0 else Label.DENY
        self.assertEqual(predict(self.model, x), expected)

    def test_positive_margin_approves(self):
        """The sign of the margin decides the label"""
        self.assertEqual(predict(self.model, [3.0, 3.0]), Label.APPROVE)
        self.assertEqual(predict(self.model, [-3.0, -3.0]), Label.DENY)

    def test_separable_test_set_agreement(self):
        """Held-out points from the same clusters agree with their generating labels"""
        held_out = separable_clusters(seed=99)
        self.assertTrue(all(predict(self.model, x) == y for x, y in held_out))


class ClassifierSerializerTest(SimpleTestCase):
    """Model and config JSON"""

    def test_config_defaults(self):
        """An empty config block gives the defaults"""
        self.assertEqual(load_classifier_config({}), ClassifierConfig())

    def test_config_rejects_bad_c(self):
        """A negative C fails config validation"""
        with self.assertRaises(InvalidConfigError):
            load_classifier_config({'c': -1})

    def test_model_export_fields(self):
        """The model export carries weights, scaling, q95 and the config"""
        model = train(separable_clusters(), ClassifierConfig())
        data = dump_trained_classifier(model)
        self.assertEqual(len(data['weights']), 2)
        self.assertEqual(len(data['feature_scaling']), 2)
        self.assertIn('q95', data)
        self.assertEqual(data['config']['gamma'], 0.5)
