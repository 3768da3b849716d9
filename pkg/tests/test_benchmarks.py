import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import special

from mimonoma.allocation import PowerCoefficients, RateTargets
from mimonoma.benchmarks import (
    mimo_oma_outcome,
    order_by_user2,
    sa_noma_detection,
    sa_noma_outcome,
    zf_noma_outcome,
    zf_precoder_user1_benchmark,
)
from mimonoma.channel import make_rng, sample_channel, zf_gains_direct
from mimonoma.exceptions import ConfigurationError
from mimonoma.link import user1_zf_decode, user2_sic_chain


def test_ordering_carries_user1_gains():
    g = order_by_user2(np.array([1.0, 5.0, 3.0]), np.array([10.0, 50.0, 30.0]))
    np.testing.assert_array_equal(g.x, [5, 3, 1])
    np.testing.assert_array_equal(g.z, [50, 30, 10])


def test_zf_noma_shares_decision_rule():
    ch = sample_channel(3, 3, make_rng(3), size=500)
    t = RateTargets.broadcast(1.0, 2.0, 3)
    coeffs = PowerCoefficients(np.full(3, 0.25))
    out = zf_noma_outcome(ch, coeffs, t, 100.0)
    gains = order_by_user2(zf_gains_direct(ch.h2), zf_gains_direct(ch.h1))
    np.testing.assert_array_equal(out.user2_ok, user2_sic_chain(gains.x, coeffs, t, 100.0))
    np.testing.assert_array_equal(out.user1_ok, user1_zf_decode(gains.z, coeffs, t, 100.0))
    assert np.all(np.diff(gains.x, axis=-1) <= 0)


def test_benchmarks_need_square_systems():
    ch = sample_channel(4, 3, make_rng(0))
    coeffs = PowerCoefficients(np.full(3, 0.25))
    t = RateTargets.broadcast(1.0, 2.0, 3)
    with pytest.raises(ConfigurationError):
        zf_noma_outcome(ch, coeffs, t, 10.0)
    with pytest.raises(ConfigurationError):
        sa_noma_outcome(ch, coeffs, t, 10.0)


@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_signal_alignment(n, seed):
    ch = sample_channel(n, n, make_rng(seed))
    det = sa_noma_detection(ch)
    np.testing.assert_allclose(det.u1 @ ch.h1, det.u2 @ ch.h2, atol=1e-9)
    # full-rank alignment: the combined detector has orthonormal rows
    u = np.concatenate([det.u1, det.u2], axis=-1)
    np.testing.assert_allclose(u @ u.conj().T, np.eye(n), atol=1e-10)


def test_sa_gains_equal_zf_gains():
    ch = sample_channel(3, 3, make_rng(8), size=1000)
    det = sa_noma_detection(ch)
    np.testing.assert_allclose(det.g2, zf_gains_direct(ch.h2), rtol=1e-8)
    np.testing.assert_allclose(det.g1, zf_gains_direct(ch.h1), rtol=1e-8)
    t = RateTargets.broadcast(1.0, 2.0, 3)
    coeffs = PowerCoefficients(np.full(3, 0.25))
    a, b = sa_noma_outcome(ch, coeffs, t, 100.0), zf_noma_outcome(ch, coeffs, t, 100.0)
    np.testing.assert_array_equal(a.user2_ok, b.user2_ok)


def test_oma_boundary_is_success():
    t = RateTargets((1.0,), (1.0,))
    assert mimo_oma_outcome(np.array([3.0]), t, 1.0).tolist() == [True]
    assert mimo_oma_outcome(np.array([2.99]), t, 1.0).tolist() == [False]


def test_zf_precoder_benchmark_matches_its_law():
    ch = sample_channel(3, 3, make_rng(12), size=200_000)
    t = RateTargets.broadcast(1.0, 1.0, 3)
    rho = 10.0
    p = 1 - zf_precoder_user1_benchmark(ch, t, rho).mean(axis=0)
    ref = special.gammainc(1, 1.0 / rho)
    assert np.all(np.abs(p - ref) < 4 * np.sqrt(ref * (1 - ref) / 200_000))
