import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from mimonoma.channel import (
    ChannelPair,
    build_effective_channel,
    complex_gaussian,
    effective_channel_with_mask,
    make_rng,
    sample_channel,
    zf_gains_direct,
)
from mimonoma.exceptions import ConfigurationError, SingularMatrixError


def test_entries_have_unit_power_and_no_correlation():
    h = complex_gaussian(make_rng(3), (10**6,))
    assert abs(np.mean(np.abs(h) ** 2) - 1.0) < 0.005
    assert abs(h.real.var() - 0.5) < 0.005 and abs(h.imag.var() - 0.5) < 0.005
    pair = complex_gaussian(make_rng(4), (10**5, 2))
    cov = np.mean(pair[:, 0] * np.conj(pair[:, 1]))
    assert abs(cov) < 0.02


def test_real_part_is_gaussian():
    h = complex_gaussian(make_rng(5), (200_000,))
    assert stats.kstest(h.real * np.sqrt(2), "norm").pvalue > 1e-3


def test_streams_are_reproducible_and_distinct():
    a = sample_channel(3, 2, make_rng(11, 0, 1), size=4)
    b = sample_channel(3, 2, make_rng(11, 0, 1), size=4)
    c = sample_channel(3, 2, make_rng(11, 0, 2), size=4)
    np.testing.assert_array_equal(a.h1, b.h1)
    np.testing.assert_array_equal(a.h2, b.h2)
    assert not np.allclose(a.h1, c.h1)


def test_shapes():
    ch = sample_channel(4, 2, make_rng(0), size=7)
    assert ch.h1.shape == ch.h2.shape == (7, 2, 4)
    assert (ch.m, ch.n) == (4, 2)


@pytest.mark.parametrize("m,n", [(2, 3), (3, 0)])
def test_bad_dimensions(m, n):
    with pytest.raises(ConfigurationError):
        sample_channel(m, n, make_rng(0))


def test_scalar_effective_channel():
    ch = ChannelPair(h1=np.array([[3.0 + 0j]]), h2=np.array([[2.0 + 0j]]))
    eff = build_effective_channel(ch)
    np.testing.assert_allclose(eff.v2, [[1.0]])
    np.testing.assert_allclose(eff.x, [4.0])
    np.testing.assert_allclose(eff.z, [9.0])


@given(st.integers(1, 4), st.integers(0, 3), st.integers(0, 2**32 - 1))
def test_effective_channel_against_numpy(n, extra, seed):
    m = n + extra
    ch = sample_channel(m, n, make_rng(seed))
    eff = build_effective_channel(ch)
    # V2 orthonormal, H2 V2 lower triangular with |diag|^2 = x
    np.testing.assert_allclose(eff.v2.conj().T @ eff.v2, np.eye(n), atol=1e-10)
    l2 = ch.h2 @ eff.v2
    assert np.all(np.abs(np.triu(l2, 1)) < 1e-10)
    np.testing.assert_allclose(np.abs(np.diag(l2)) ** 2, eff.x, rtol=1e-10)
    ref_r = np.linalg.qr(ch.h2.conj().T)[1]
    np.testing.assert_allclose(eff.x, np.abs(np.diag(ref_r)) ** 2, rtol=1e-10)
    g = eff.h1v2.conj().T @ eff.h1v2
    np.testing.assert_allclose(eff.z, 1 / np.diag(np.linalg.inv(g)).real, rtol=1e-8)


def test_singular_user2_channel_is_flagged():
    h2 = np.array([[1.0, 1.0], [1.0, 1.0]], dtype=complex)
    ch = ChannelPair(h1=np.eye(2, dtype=complex), h2=h2)
    _, bad = effective_channel_with_mask(ch)
    assert bad
    with pytest.raises(SingularMatrixError):
        build_effective_channel(ch)


def test_layer_gain_moments():
    ch = sample_channel(3, 3, make_rng(21), size=10**6)
    eff = build_effective_channel(ch)
    np.testing.assert_allclose(eff.x.mean(axis=0), [3, 2, 1], rtol=0.01)
    np.testing.assert_allclose(eff.z.mean(axis=0), [1, 1, 1], rtol=0.01)


@pytest.mark.parametrize("m", [3, 5])
def test_layer_gains_follow_gamma_laws(m):
    eff = build_effective_channel(sample_channel(m, 3, make_rng(m), size=100_000))
    for i in range(3):
        assert stats.kstest(eff.x[:, i], stats.gamma(m - i).cdf).pvalue > 1e-4
        assert stats.kstest(eff.z[:, i], stats.expon().cdf).pvalue > 1e-4


def test_zf_gains_examples():
    np.testing.assert_allclose(zf_gains_direct(np.array([[2.0 + 0j]])), [4.0])
    a, b = 1.5, 0.5
    h = np.array([[0, a * 1j], [b, 0]], dtype=complex)
    np.testing.assert_allclose(zf_gains_direct(h), [b**2, a**2])
    with pytest.raises(ConfigurationError):
        zf_gains_direct(np.ones((2, 3), dtype=complex))
