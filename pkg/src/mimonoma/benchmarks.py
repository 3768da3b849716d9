"""Comparison schemes: ZF-NOMA, SA-NOMA, QR-precoded OMA and a user-1 ZF precoder."""

from dataclasses import dataclass

import numpy as np

from . import matrixkit as mk
from .allocation import rate_to_threshold
from .channel import zf_gains_with_mask
from .exceptions import ConfigurationError, SingularMatrixError
from .link import meets, nested_sinr, user1_zf_decode, user2_sic_chain


@dataclass(frozen=True)
class LayerGains:
    x: np.ndarray  # user-2 per-layer gains
    z: np.ndarray  # user-1 per-layer gains


@dataclass(frozen=True)
class BenchmarkOutcome:
    scheme: str
    user2_ok: np.ndarray
    user1_ok: np.ndarray | None = None


def _require_square(ch, scheme):
    if ch.m != ch.n:
        raise ConfigurationError(f"{scheme} needs M == N, got M={ch.m}, N={ch.n}")


def order_by_user2(g2, g1):
    """Sort layers by descending user-2 gain, carrying user-1 gains along."""
    order = np.argsort(-g2, axis=-1, kind="stable")
    return LayerGains(
        x=np.take_along_axis(g2, order, axis=-1),
        z=np.take_along_axis(g1, order, axis=-1),
    )


def zf_noma_gains_with_mask(ch):
    _require_square(ch, "ZF-NOMA")
    g2, bad2 = zf_gains_with_mask(ch.h2)
    g1, bad1 = zf_gains_with_mask(ch.h1)
    return order_by_user2(g2, g1), bad1 | bad2


def zf_noma_outcome(ch, coeffs, targets, rho):
    """Identity precoder, ZF at both receivers, layers ordered by user-2 gain.

    The same per-layer coefficients as the proposed scheme are applied to
    the ordered layers, and user 2 follows the same SIC decision rule.
    """
    gains, bad = zf_noma_gains_with_mask(ch)
    if np.any(bad):
        raise SingularMatrixError("singular channel realisation", mask=bad)
    return BenchmarkOutcome(
        scheme="zf-noma",
        user2_ok=user2_sic_chain(gains.x, coeffs, targets, rho),
        user1_ok=user1_zf_decode(gains.z, coeffs, targets, rho),
    )


@dataclass(frozen=True)
class SaDetection:
    u1: np.ndarray
    u2: np.ndarray
    g1: np.ndarray  # user-1 layer gains, reciprocal of the noise enhancement
    g2: np.ndarray  # user-2 layer gains

    def sinr(self, coeffs, rho):
        """User-2 SINR for stripping ``s_i`` and SNR for its own ``w_i``."""
        return (
            nested_sinr(self.g2, coeffs.alpha_sq, coeffs.beta_sq, rho),
            rho * coeffs.beta_sq * self.g2,
        )


def _noise_gain(u, h):
    """``1 / [(U H)^-1 U U^H (U H)^-H]_ii`` for each layer."""
    inv, bad = mk.inverse_with_mask(u @ h)
    w = inv @ u
    noise = (np.abs(w) ** 2).sum(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        g = 1.0 / noise
    return g, bad | ~np.all(np.isfinite(g) & (g > 0), axis=-1)


def sa_noma_detection_with_mask(ch):
    _require_square(ch, "SA-NOMA")
    n, m = ch.n, ch.m
    stacked = np.concatenate([mk.hermitian(ch.h1), -mk.hermitian(ch.h2)], axis=-1)  # M x 2N
    f = mk.qr_decompose(mk.hermitian(stacked))  # 2N x M
    null = f.q[..., :, m:]  # 2N x (2N - M), spans the null space of `stacked`
    u1 = mk.hermitian(null[..., :n, :])
    u2 = mk.hermitian(null[..., n:, :])
    g1, bad1 = _noise_gain(u1, ch.h1)
    g2, bad2 = _noise_gain(u2, ch.h2)
    bad = bad1 | bad2 | mk.singular_mask(f.r[..., :m, :])
    return SaDetection(u1=u1, u2=u2, g1=g1, g2=g2), bad


def sa_noma_detection(ch):
    """Signal-alignment detection matrices from the null space of ``[H1^H, -H2^H]``.

    After alignment ``U1 H1 == U2 H2``; the returned gains are the
    reciprocal per-layer noise enhancements of the aligned ZF detector.
    """
    det, bad = sa_noma_detection_with_mask(ch)
    if np.any(bad):
        raise SingularMatrixError("rank-deficient alignment", mask=bad)
    return det


def sa_noma_outcome(ch, coeffs, targets, rho):
    det = sa_noma_detection(ch)
    gains = order_by_user2(det.g2, det.g1)
    return BenchmarkOutcome(
        scheme="sa-noma",
        user2_ok=user2_sic_chain(gains.x, coeffs, targets, rho),
        user1_ok=user1_zf_decode(gains.z, coeffs, targets, rho),
    )


def oma_threshold(rates_u2):
    """Gain needed by ``0.5 * log2(1 + rho x) >= R``, times ``rho``."""
    return rate_to_threshold(2.0 * np.asarray(rates_u2, dtype=float))


def mimo_oma_outcome(x, targets, rho):
    """User-2 success per layer when it only gets every other slot."""
    return meets(rho * np.asarray(x, dtype=float), oma_threshold(targets.r2))


def zf_precoder_gains_with_mask(h1):
    """Per-stream gains ``1 / [(H1 H1^H)^-1]_ii`` of a column-normalised ZF precoder."""
    gram = h1 @ mk.hermitian(h1)
    gram = 0.5 * (gram + mk.hermitian(gram))
    inv, bad = mk.inverse_with_mask(gram)
    with np.errstate(divide="ignore", invalid="ignore"):
        g = 1.0 / np.diagonal(inv, axis1=-2, axis2=-1).real
    return g, bad | ~np.all(np.isfinite(g) & (g > 0), axis=-1)


def zf_precoder_user1_benchmark(ch, targets, rho):
    """User-1 decode results when the precoder zero-forces user 1 and user 2 is idle."""
    g, bad = zf_precoder_gains_with_mask(ch.h1)
    if np.any(bad):
        raise SingularMatrixError("singular channel realisation", mask=bad)
    return meets(rho * g, targets.eps1)
