import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from mimonoma.allocation import (
    PowerCoefficients,
    RateTargets,
    feasibility_range,
    policy_one_beta,
    policy_two_beta,
    rate_to_threshold,
    snr_coupled_target,
)
from mimonoma.analytics import user1_outage_policy1
from mimonoma.exceptions import ConfigurationError, InfeasibleTargetError

eps_st = st.floats(0.05, 20.0)
rho_st = st.floats(0.5, 1e5)


def test_thresholds():
    np.testing.assert_allclose(rate_to_threshold([1.0, 2.0, 4.0]), [1.0, 3.0, 15.0])


def test_rates_broadcast_and_validate():
    t = RateTargets.broadcast(1.0, [2.0, 2.0, 3.0], 3)
    assert t.r1 == (1.0, 1.0, 1.0) and t.layers == 3
    with pytest.raises(ConfigurationError):
        RateTargets.broadcast(0.0, 1.0, 2)
    with pytest.raises(ConfigurationError):
        RateTargets.broadcast([1.0, 1.0], 1.0, 3)


@pytest.mark.parametrize("rho", [1.0, 10.0, 1e3, 1e5])
def test_multiplier_two_gives_quarter(rho):
    beta = policy_one_beta(1.0, rho, snr_coupled_target(1.0, rho, 2.0))
    assert beta == pytest.approx(0.25, rel=1e-12)


def test_beta_limits():
    lower, _ = feasibility_range(1.0, 10.0)
    assert policy_one_beta(1.0, 10.0, lower * (1 + 1e-9)) == pytest.approx(0.0, abs=1e-6)
    assert policy_one_beta(1.0, 10.0, 1 - 1e-15) == pytest.approx(0.5, abs=1e-2)


@pytest.mark.parametrize("target", [0.05, float(-np.expm1(-0.1)), 1.0, 1.5])
def test_infeasible_targets(target):
    with pytest.raises(InfeasibleTargetError):
        policy_one_beta(1.0, 10.0, target)


def test_feasibility_range_examples():
    assert feasibility_range(1.0, 10.0)[0] == pytest.approx(1 - np.exp(-0.1))
    assert feasibility_range(1.0, 1e12)[0] < 1e-11
    assert feasibility_range(1e-12, 10.0)[0] < 1e-12


def test_multiplier_must_exceed_one():
    with pytest.raises(ConfigurationError):
        snr_coupled_target(1.0, 10.0, 1.0)


@given(eps_st, rho_st, st.floats(1.01, 50.0))
def test_snr_coupled_form_matches_closed_beta(eps, rho, mult):
    # 1 - target underflows relative precision once mult*eps/rho is large
    assume(mult * eps / rho <= 15)
    beta = policy_one_beta(eps, rho, snr_coupled_target(eps, rho, mult))
    assert beta == pytest.approx((1 - 1 / mult) / (1 + eps), rel=1e-7)


@given(eps_st, rho_st, st.floats(0.0, 1.0))
def test_policy_one_closes_the_loop(eps, rho, frac):
    lower, _ = feasibility_range(eps, rho)
    target = lower + frac * (1 - lower)
    assume(lower * (1 + 1e-6) < target < 1 - 1e-9)
    beta = policy_one_beta(eps, rho, target)
    assert 0 < beta < 1 / (1 + eps)
    assert user1_outage_policy1(eps, rho, beta) == pytest.approx(target, rel=1e-8)


def test_policy_two_examples():
    assert policy_two_beta(0.1, 5.0, 1.0, 10.0) == 0.0
    assert policy_two_beta(0.2, 1e9, 1.0, 10.0) == pytest.approx(0.25, rel=1e-8)
    assert policy_two_beta(0.2, 1e-12, 1.0, 10.0) == 0.0
    assert policy_two_beta(0.0, 0.0, 1.0, 10.0) == 0.0


@given(eps_st, rho_st, st.floats(1e-4, 1e4), st.floats(1e-4, 1e4))
def test_policy_two_meets_user1_whenever_possible(eps, rho, z, x):
    beta = policy_two_beta(z, x, eps, rho)
    assert 0 <= beta < 1 / (1 + eps)
    alpha = 1 - beta
    for gain in (z, x):
        if gain >= eps / rho:
            sinr = alpha * gain / (beta * gain + 1 / rho)
            assert sinr >= eps * (1 - 1e-9)


def test_coefficients_complement():
    c = PowerCoefficients(np.array([0.2, 0.3]))
    np.testing.assert_allclose(c.alpha_sq, [0.8, 0.7])
