"""Per-realisation decode decisions for both users.

Gains arrive as arrays of shape ``(..., N)``; coefficient and threshold
arrays broadcast against them. A comparison ``SINR >= eps`` is made with a
relative slack of ``DECODE_RTOL`` because policy II constructs SINRs that sit
exactly on the threshold.
"""

from dataclasses import dataclass

import numpy as np

from . import matrixkit as mk
from .allocation import PowerCoefficients, policy_one_beta, policy_two_beta
from .channel import build_effective_channel

DECODE_RTOL = 1e-9


@dataclass(frozen=True)
class DecodeOutcome:
    user1_ok: np.ndarray  # (..., N) bool
    user2_ok: np.ndarray  # (..., N) bool


def meets(sinr, eps):
    return sinr >= eps * (1.0 - DECODE_RTOL)


def nested_sinr(gain, alpha_sq, beta_sq, rho):
    """SINR of the user-1 stream with the user-2 stream as interference."""
    return alpha_sq * gain / (beta_sq * gain + 1.0 / rho)


def layer_successes(x, beta_sq, eps1, eps2, rho):
    """Per-layer (not chained) decode results at user 2: (s_i ok, w_i ok after s_i)."""
    beta_sq = np.asarray(beta_sq, dtype=float)
    s_ok = meets(nested_sinr(x, 1.0 - beta_sq, beta_sq, rho), eps1)
    w_ok = meets(rho * beta_sq * x, eps2)
    return s_ok, s_ok & w_ok


def user2_sic_chain(x, coeffs, targets, rho):
    """User-2 success per layer with the SIC chain honoured.

    Layer ``i`` succeeds only if ``s_m`` and ``w_m`` were both decoded at
    every layer ``m <= i``.
    """
    _, layer_ok = layer_successes(x, coeffs.beta_sq, targets.eps1, targets.eps2, rho)
    return np.logical_and.accumulate(layer_ok, axis=-1)


def user1_zf_decode(z, coeffs, targets, rho):
    sinr = nested_sinr(np.asarray(z, dtype=float), coeffs.alpha_sq, coeffs.beta_sq, rho)
    return meets(sinr, targets.eps1)


def user1_qr_decode(h1, v2, coeffs, targets, rho):
    """Layered QR detection at user 1, decoding from layer N down to 1.

    User 1 never decodes the user-2 streams, so every ``w_j`` interferes;
    an ``s_j`` (j > i) is cancelled only if it was itself decoded.
    """
    r1 = mk.qr_decompose(np.asarray(h1) @ np.asarray(v2)).r
    n = r1.shape[-1]
    gains = np.abs(r1[..., :n, :]) ** 2
    beta_sq = np.broadcast_to(np.asarray(coeffs.beta_sq, dtype=float), gains.shape[:-1])
    alpha_sq = 1.0 - beta_sq
    eps1 = np.broadcast_to(targets.eps1, gains.shape[:-1])
    ok = np.zeros(gains.shape[:-1], dtype=bool)
    for i in range(n - 1, -1, -1):
        upper = gains[..., i, i + 1:]
        residual = beta_sq[..., i + 1:] + alpha_sq[..., i + 1:] * ~ok[..., i + 1:]
        interference = gains[..., i, i] * beta_sq[..., i] + (upper * residual).sum(axis=-1)
        sinr = gains[..., i, i] * alpha_sq[..., i] / (interference + 1.0 / rho)
        ok[..., i] = meets(sinr, eps1[..., i])
    return ok


def allocate_power(config, eff, rho):
    """Coefficients for the configured policy at linear SNR ``rho``."""
    eps1 = config.rates.eps1
    if config.policy == 1:
        target = config.user1_target(rho)
        return PowerCoefficients(np.broadcast_to(policy_one_beta(eps1, rho, target), eff.x.shape))
    return PowerCoefficients(policy_two_beta(eff.z, eff.x, eps1, rho))


def realize_outcome(ch, config, rho, allocator=allocate_power, eff=None):
    """Channel -> precoder -> power allocation -> both users' decode results."""
    if eff is None:
        eff = build_effective_channel(ch)
    coeffs = allocator(config, eff, rho)
    if config.detector_u1 == "qr":
        u1 = user1_qr_decode(ch.h1, eff.v2, coeffs, config.rates, rho)
    else:
        u1 = user1_zf_decode(eff.z, coeffs, config.rates, rho)
    u2 = user2_sic_chain(eff.x, coeffs, config.rates, rho)
    return DecodeOutcome(user1_ok=u1, user2_ok=u2)

