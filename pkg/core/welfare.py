"""
Welfare calculus: scenario payoffs, the non-negative utility map, the
log-space Nash Welfare Product and the decision utility derived from it.

NWP is only ever computed as a sum of logs; a direct product over a
population of a hundred agents under- or overflows.
"""

import math

import numpy as np

from .exceptions import InvalidInputError
from .models import DecisionUtility, Party, Scenario, ScenarioNwpMatrix


def _scenario(value):
    try:
        return value if isinstance(value, Scenario) else Scenario(str(value).zfill(2))
    except ValueError:
        raise InvalidInputError(f"Unknown scenario {value!r}; expected one of 11, 10, 01, 00") from None


def _party(value):
    try:
        return value if isinstance(value, Party) else Party(value)
    except ValueError:
        raise InvalidInputError(f"Unknown party {value!r}") from None


def scenario_payoff(scenario, principal, table, party):
    """Signed payoff of one party under one scenario"""
    scenario = _scenario(scenario)
    party = _party(party)
    if not (math.isfinite(principal) and principal > 0):
        raise InvalidInputError(f"principal must be positive, got {principal}")

    if party is Party.INSTITUTION:
        fractions = {
            Scenario.GIVEN_REPAID: table.interest_rate,
            Scenario.GIVEN_DEFAULTED: -table.principal_loss_fraction,
            Scenario.DENIED_WOULD_REPAY: 0.0,
            Scenario.DENIED_WOULD_DEFAULT: 0.0,
        }
    else:
        fractions = {
            Scenario.GIVEN_REPAID: table.individual_gain_repay,
            Scenario.GIVEN_DEFAULTED: -table.individual_loss_default,
            Scenario.DENIED_WOULD_REPAY: -table.rejection_opportunity_cost,
            Scenario.DENIED_WOULD_DEFAULT: 0.0,
        }
    return fractions[scenario] * principal


def to_positive_utility(payoff, table):
    """max(payoff + shift, floor): strictly positive and monotone in payoff"""
    if not math.isfinite(payoff):
        raise InvalidInputError(f"payoff must be finite, got {payoff}")
    return max(payoff + table.payoff_shift, table.utility_floor)


def log_nwp(weights, utilities):
    """ln of prod(w_i * u_i), accumulated as a sum of logs"""
    w = np.asarray(weights, dtype=float)
    u = np.asarray(utilities, dtype=float)
    if w.shape != u.shape or w.ndim != 1:
        raise InvalidInputError(
            f"weights and utilities must be equal-length vectors, got {w.shape} and {u.shape}"
        )
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise InvalidInputError("all weights must be positive (a zero weight annihilates the NWP)")
    if not np.all(np.isfinite(u)) or np.any(u <= 0):
        raise InvalidInputError("all utilities must be positive")
    return math.fsum(np.log(w)) + math.fsum(np.log(u))


def scenario_nwp_matrix(individual, institution, rest_log_nwp, principal, table):
    """NWP of the society for each scenario of one loan decision.

    rest_log_nwp covers every party except this individual and the institution
    and is held fixed across the four scenarios.
    """
    if not math.isfinite(rest_log_nwp):
        raise InvalidInputError(f"rest_log_nwp must be finite, got {rest_log_nwp}")

    entries = {}
    for scenario in Scenario:
        utilities = [
            to_positive_utility(scenario_payoff(scenario, principal, table, Party.INSTITUTION), table),
            to_positive_utility(scenario_payoff(scenario, principal, table, Party.INDIVIDUAL), table),
        ]
        entries[scenario] = rest_log_nwp + log_nwp([institution.weight, individual.weight], utilities)

    return ScenarioNwpMatrix(
        nwp_11=entries[Scenario.GIVEN_REPAID],
        nwp_10=entries[Scenario.GIVEN_DEFAULTED],
        nwp_01=entries[Scenario.DENIED_WOULD_REPAY],
        nwp_00=entries[Scenario.DENIED_WOULD_DEFAULT],
    )


def decision_utility(matrix):
    """U_decision = (NWP_11 - NWP_10) - (NWP_01 - NWP_00)"""
    matrix.clean()
    delta_1 = matrix.nwp_11 - matrix.nwp_10
    delta_0 = matrix.nwp_01 - matrix.nwp_00
    return DecisionUtility(delta_nwp_1=delta_1, delta_nwp_0=delta_0, u_decision=delta_1 - delta_0)
