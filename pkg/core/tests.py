import math

import numpy as np
from django.test import SimpleTestCase

from .exceptions import InvalidConfigError, InvalidInputError
from .models import (
    FeatureVector, IndividualState, InstitutionState, Label, LedgerEntry,
    ScenarioNwpMatrix, UtilityTable,
)
from .serializers import dump_utility_table, load_utility_table
from .welfare import (
    decision_utility, log_nwp, scenario_nwp_matrix, scenario_payoff, to_positive_utility,
)


def direct_nwp(weights, utilities):
    """Direct-product oracle, only meaningful for small populations"""
    product = 1.0
    for w, u in zip(weights, utilities):
        product *= w * u
    return product


def make_individual(weight=1.0, income=500.0, ident='a-1'):
    return IndividualState(
        id=ident,
        features=FeatureVector(values=[1.0], names=['x']),
        income=income,
        weight=weight,
        group='A',
    )


class DomainTypeTest(SimpleTestCase):
    """Invariants enforced by the core domain types"""

    def test_feature_vector_length_mismatch(self):
        """values and names must have equal length"""
        with self.assertRaises(InvalidInputError):
            FeatureVector(values=[1.0, 2.0], names=['a'])

    def test_feature_vector_non_finite(self):
        """Feature values must be finite"""
        with self.assertRaises(InvalidInputError):
            FeatureVector(values=[math.nan], names=['a'])

    def test_negative_weight_rejected(self):
        """Individual weight must be non-negative"""
        with self.assertRaises(InvalidInputError):
            make_individual(weight=-0.1)

    def test_ledger_epochs_strictly_increasing(self):
        """Ledger epochs must be strictly increasing"""
        entry = LedgerEntry(epoch=1, decision=Label.APPROVE, outcome=Label.APPROVE, payoff=1.0)
        with self.assertRaises(InvalidInputError):
            IndividualState(
                id='x', features=FeatureVector(values=[], names=[]), income=500.0,
                weight=1.0, group='A', outcome_ledger=[entry, entry],
            )

    def test_institution_outstanding_bounds(self):
        """Outstanding loans cannot exceed the budget"""
        with self.assertRaises(InvalidInputError):
            InstitutionState(weight=0.5, budget=100.0, outstanding=150.0)

    def test_label_of(self):
        """Label accepts only 0 and 1"""
        self.assertEqual(Label.of(1), Label.APPROVE)
        self.assertEqual(Label.of(0.0), Label.DENY)
        with self.assertRaises(InvalidInputError):
            Label.of(2)

    def test_utility_table_floor_positive(self):
        """utility_floor must be strictly positive"""
        with self.assertRaises(InvalidInputError):
            UtilityTable(utility_floor=0.0)


class ScenarioPayoffTest(SimpleTestCase):
    """Payoffs behind the four scenarios"""

    def setUp(self):
        self.table = UtilityTable()

    def test_institution_interest(self):
        """Repaid loan earns interest_rate * principal"""
        self.assertAlmostEqual(scenario_payoff('11', 100, self.table, 'institution'), 10.0)

    def test_individual_null_scenario(self):
        """No loan, no default is the zero case"""
        self.assertEqual(scenario_payoff('00', 500, self.table, 'individual'), 0.0)

    def test_institution_full_principal_loss(self):
        """Default loses the whole principal under the default table"""
        self.assertAlmostEqual(scenario_payoff('10', 200, self.table, 'institution'), -200.0)

    def test_individual_payoffs(self):
        """Individual payoffs follow the table fractions"""
        self.assertAlmostEqual(scenario_payoff('11', 100, self.table, 'individual'), 20.0)
        self.assertAlmostEqual(scenario_payoff('10', 100, self.table, 'individual'), -50.0)
        self.assertAlmostEqual(scenario_payoff('01', 100, self.table, 'individual'), -5.0)
        self.assertEqual(scenario_payoff('01', 100, self.table, 'institution'), 0.0)

    def test_non_positive_principal(self):
        """Principal must be positive"""
        with self.assertRaises(InvalidInputError):
            scenario_payoff('11', 0, self.table, 'institution')

    def test_unknown_scenario(self):
        """Scenario codes are restricted to 11/10/01/00"""
        with self.assertRaises(InvalidInputError):
            scenario_payoff('12', 100, self.table, 'institution')


class PositiveUtilityTest(SimpleTestCase):
    """Affine shift plus positive floor"""

    def setUp(self):
        self.table = UtilityTable(payoff_shift=1.0, utility_floor=1e-6)

    def test_shift_only(self):
        """A zero payoff maps to the shift alone"""
        self.assertEqual(to_positive_utility(0, self.table), 1.0)

    def test_floor_engages(self):
        """Large losses hit the utility floor"""
        self.assertEqual(to_positive_utility(-100, self.table), 1e-6)

    def test_affine_region(self):
        """Above the floor the map is payoff plus one"""
        self.assertEqual(to_positive_utility(5, self.table), 6.0)

    def test_non_finite_payoff(self):
        """Infinite payoffs are rejected"""
        with self.assertRaises(InvalidInputError):
            to_positive_utility(math.inf, self.table)

    def test_monotone(self):
        """payoff_a <= payoff_b implies utility_a <= utility_b"""
        payoffs = np.sort(np.random.default_rng(3).uniform(-50, 50, size=500))
        utilities = [to_positive_utility(p, self.table) for p in payoffs]
        self.assertTrue(all(a <= b for a, b in zip(utilities, utilities[1:])))


class LogNwpTest(SimpleTestCase):
    """Log-space Nash Welfare Product"""

    def test_unit(self):
        """One party with unit weight and utility has zero log welfare"""
        self.assertEqual(log_nwp([1], [1]), 0.0)

    def test_small_direct(self):
        """Two parties by hand"""
        self.assertAlmostEqual(log_nwp([0.5, 2], [2, 3]), math.log(6), places=12)

    def test_hundred_agents_match_oracle(self):
        """n=100 seeded society matches ln of the direct product"""
        rng = np.random.default_rng(11)
        w = rng.uniform(0.5, 1.5, size=100)
        u = rng.uniform(0.5, 1.5, size=100)
        self.assertAlmostEqual(log_nwp(w, u), math.log(direct_nwp(w, u)), delta=1e-9)

    def test_oracle_equivalence_random_instances(self):
        """exp(log_nwp) equals the direct product within relative 1e-9 for n <= 200"""
        rng = np.random.default_rng(2024)
        for _ in range(1000):
            n = int(rng.integers(1, 201))
            w = rng.uniform(0.7, 1.3, size=n)
            u = rng.uniform(0.7, 1.3, size=n)
            direct = direct_nwp(w, u)
            self.assertLessEqual(abs(math.exp(log_nwp(w, u)) - direct), 1e-9 * direct)

    def test_permutation_invariant(self):
        """Reordering the parties leaves the log welfare unchanged"""
        rng = np.random.default_rng(5)
        w = rng.uniform(0.1, 1, size=50)
        u = rng.uniform(1, 10, size=50)
        order = rng.permutation(50)
        self.assertAlmostEqual(log_nwp(w, u), log_nwp(w[order], u[order]), places=9)

    def test_weight_scaling_shift(self):
        """Scaling every weight by c shifts log_nwp by n ln c"""
        w = [0.2, 0.4, 0.9]
        u = [3.0, 5.0, 7.0]
        scaled = log_nwp([2.5 * x for x in w], u)
        self.assertAlmostEqual(scaled - log_nwp(w, u), 3 * math.log(2.5), places=12)

    def test_rejects_zero_weight(self):
        """A zero weight is rejected"""
        with self.assertRaises(InvalidInputError):
            log_nwp([0.0, 1.0], [1.0, 1.0])

    def test_rejects_non_positive_utility(self):
        """A non-positive utility is rejected"""
        with self.assertRaises(InvalidInputError):
            log_nwp([1.0], [0.0])

    def test_rejects_length_mismatch(self):
        """Weights and utilities must pair up"""
        with self.assertRaises(InvalidInputError):
            log_nwp([1.0, 1.0], [1.0])


class ScenarioMatrixTest(SimpleTestCase):
    """Scenario NWP matrix and decision utility"""

    def setUp(self):
        self.table = UtilityTable()
        self.individual = make_individual(weight=1.0)
        self.institution = InstitutionState(weight=1.0, budget=10_000.0)

    def expected_entry(self, inst_payoff, ind_payoff):
        shift = self.table.payoff_shift
        return math.log(inst_payoff + shift) + math.log(ind_payoff + shift)

    def test_two_party_society(self):
        """With rest term zero each entry is ln u_inst + ln u_i"""
        m = scenario_nwp_matrix(self.individual, self.institution, 0.0, 100, self.table)
        self.assertAlmostEqual(m.nwp_11, self.expected_entry(10, 20), places=12)
        self.assertAlmostEqual(m.nwp_10, self.expected_entry(-100, -50), places=12)
        self.assertAlmostEqual(m.nwp_01, self.expected_entry(0, -5), places=12)
        self.assertAlmostEqual(m.nwp_00, self.expected_entry(0, 0), places=12)

    def test_rest_shift(self):
        """A rest term shifts all four entries by exactly that amount"""
        base = scenario_nwp_matrix(self.individual, self.institution, 0.0, 100, self.table)
        shifted = scenario_nwp_matrix(self.individual, self.institution, 5.0, 100, self.table)
        for name in ('nwp_11', 'nwp_10', 'nwp_01', 'nwp_00'):
            self.assertAlmostEqual(getattr(shifted, name) - getattr(base, name), 5.0, places=12)

    def test_seeded_society_oracle(self):
        """Entries match a brute-force direct product over a small society"""
        rng = np.random.default_rng(8)
        rest_w = rng.uniform(0.5, 1.0, size=6)
        rest_u = rng.uniform(0.8, 1.2, size=6)
        rest = log_nwp(rest_w, rest_u)
        individual = make_individual(weight=0.7)
        institution = InstitutionState(weight=0.5, budget=10_000.0)
        table = UtilityTable(payoff_shift=1.0)
        m = scenario_nwp_matrix(individual, institution, rest, 1.0, table)
        oracle = direct_nwp(
            list(rest_w) + [0.5, 0.7],
            list(rest_u) + [1.1, 1.2],
        )
        self.assertAlmostEqual(m.nwp_11, math.log(oracle), delta=1e-9)

    def test_decision_utility_arithmetic(self):
        """The decision utility is the difference of the two row deltas"""
        u = decision_utility(ScenarioNwpMatrix(2, 1, 1, 1))
        self.assertEqual((u.delta_nwp_1, u.delta_nwp_0, u.u_decision), (1, 0, 1))

    def test_decision_utility_symmetric(self):
        """Identical rows give zero decision utility"""
        self.assertEqual(decision_utility(ScenarioNwpMatrix(3.5, 1.25, 3.5, 1.25)).u_decision, 0)

    def test_decision_utility_hand_computed(self):
        """Two-party default table: recompute u_decision from the payoffs"""
        m = scenario_nwp_matrix(self.individual, self.institution, 0.0, 100, self.table)
        u = decision_utility(m)
        expected = (
            math.log(1010 * 1020 / (900 * 950))
            - math.log(1000 * 995 / (1000 * 1000))
        )
        self.assertAlmostEqual(u.u_decision, expected, places=12)

    def test_decision_utility_invariant_to_rest_and_weight_scale(self):
        """u_decision ignores rest_log_nwp and a common weight scale"""
        base = decision_utility(scenario_nwp_matrix(self.individual, self.institution, 0.0, 250, self.table))
        scaled = decision_utility(scenario_nwp_matrix(
            make_individual(weight=3.0), InstitutionState(weight=3.0, budget=1.0), 42.0, 250, self.table,
        ))
        self.assertAlmostEqual(base.u_decision, scaled.u_decision, places=9)


class UtilityTableSerializerTest(SimpleTestCase):
    """UtilityTable JSON contract"""

    def test_defaults_with_income_shift(self):
        """An empty block gives the default table with the given shift"""
        table = load_utility_table({}, payoff_shift=1000.0)
        self.assertEqual(table, UtilityTable(payoff_shift=1000.0))

    def test_dump_uses_field_names(self):
        """Export uses the model field names"""
        data = dump_utility_table(UtilityTable())
        self.assertEqual(set(data), {
            'interest_rate', 'principal_loss_fraction', 'individual_gain_repay',
            'individual_loss_default', 'rejection_opportunity_cost', 'payoff_shift', 'utility_floor',
        })
        self.assertEqual(load_utility_table(dict(data)), UtilityTable())

    def test_unknown_key_rejected(self):
        """Unknown keys fail validation"""
        with self.assertRaises(InvalidConfigError):
            load_utility_table({'interest': 0.1})

    def test_negative_fraction_rejected(self):
        """Negative rates fail validation"""
        with self.assertRaises(InvalidConfigError):
            load_utility_table({'interest_rate': -0.1})
