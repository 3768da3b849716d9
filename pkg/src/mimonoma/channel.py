"""Rayleigh channel sampling and the QR-based precoder.

All routines carry an optional leading batch axis so a block of trials is
sampled and processed at once.
"""

from dataclasses import dataclass

import numpy as np

from . import matrixkit as mk
from .exceptions import ConfigurationError, SingularMatrixError


def make_rng(seed, *stream):
    """Counter-based generator for the stream ``(seed, *stream)``.

    The same key always reproduces the same sequence; distinct keys give
    statistically independent streams (Philox keyed via ``SeedSequence``).
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(ss))


def complex_gaussian(rng, shape):
    """CN(0, 1) samples: independent real/imaginary parts of variance 1/2.

    Box-Muller on the uniform stream: modulus sqrt(-ln u1), phase 2*pi*u2.
    Each complex value consumes two consecutive uniforms, so the first
    entries of a large draw coincide with a smaller draw from the same stream.
    """
    u = rng.random(tuple(shape) + (2,))
    radius = np.sqrt(-np.log1p(-u[..., 0]))
    angle = 2.0 * np.pi * u[..., 1]
    return radius * np.exp(1j * angle)


@dataclass(frozen=True)
class ChannelPair:
    h1: np.ndarray  # (..., N, M) user 1
    h2: np.ndarray  # (..., N, M) user 2

    @property
    def n(self):
        return self.h1.shape[-2]

    @property
    def m(self):
        return self.h1.shape[-1]


@dataclass(frozen=True)
class EffectiveChannel:
    v2: np.ndarray  # (..., M, N) precoder
    r2: np.ndarray  # (..., N, N)
    x: np.ndarray   # (..., N) user-2 layer gains |[R2]_ii|^2
    z: np.ndarray   # (..., N) user-1 zero-forcing gains
    h1v2: np.ndarray  # (..., N, N) user-1 effective channel


def sample_channel(m, n, rng, size=None):
    if not (isinstance(m, (int, np.integer)) and isinstance(n, (int, np.integer))):
        raise ConfigurationError("antenna counts must be integers")
    if n < 1 or m < n:
        raise ConfigurationError(f"need M >= N >= 1, got M={m}, N={n}")
    batch = () if size is None else (int(size),)
    h = complex_gaussian(rng, batch + (2, n, m))
    return ChannelPair(h1=h[..., 0, :, :], h2=h[..., 1, :, :])


def effective_channel_with_mask(ch):
    """Vectorised precoder and gains, plus a mask of singular realisations.

    Masked entries of ``x``/``z`` are meaningless and must be resampled.
    """
    n = ch.n
    f = mk.qr_decompose(mk.hermitian(ch.h2))
    v2 = f.q[..., :, :n]
    r2 = f.r[..., :n, :]
    x = np.abs(np.diagonal(r2, axis1=-2, axis2=-1)) ** 2

    h1v2 = ch.h1 @ v2
    gram = mk.hermitian(h1v2) @ h1v2
    # enforce exact Hermitian symmetry lost to rounding in the product
    gram = 0.5 * (gram + mk.hermitian(gram))
    inv, bad = mk.inverse_with_mask(gram)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = 1.0 / np.diagonal(inv, axis1=-2, axis2=-1).real
    bad = bad | (mk.singular_mask(r2)) | ~np.all(np.isfinite(z) & (z > 0), axis=-1)
    return EffectiveChannel(v2=v2, r2=r2, x=x, z=z, h1v2=h1v2), bad


def build_effective_channel(ch):
    """Apply the QR precoder ``P = V2`` and extract the per-layer gains.

    ``V2``/``R2`` come from the full QR of ``H2^H``; ``x_i = |[R2]_ii|^2``
    and ``z_i = 1 / [(V2^H H1^H H1 V2)^-1]_ii``.

    Raises
    ------
    SingularMatrixError
        If any realisation in the batch has a numerically singular Gram
        matrix (or a rank-deficient ``H2``).
    """
    eff, bad = effective_channel_with_mask(ch)
    if np.any(bad):
        raise SingularMatrixError("singular channel realisation", mask=bad)
    return eff


def zf_gains_with_mask(h):
    h = mk.as_matrix(h, "h")
    if h.shape[-1] > h.shape[-2]:
        raise ConfigurationError(
            f"zero-forcing gains need full column rank (N >= M), got {h.shape[-2]}x{h.shape[-1]}"
        )
    gram = mk.hermitian(h) @ h
    gram = 0.5 * (gram + mk.hermitian(gram))
    inv, bad = mk.inverse_with_mask(gram)
    with np.errstate(divide="ignore", invalid="ignore"):
        g = 1.0 / np.diagonal(inv, axis1=-2, axis2=-1).real
    bad = bad | ~np.all(np.isfinite(g) & (g > 0), axis=-1)
    return g, bad


def zf_gains_direct(h):
    """Unordered receive zero-forcing gains ``1 / [(H^H H)^-1]_ii``."""
    g, bad = zf_gains_with_mask(h)
    if np.any(bad):
        raise SingularMatrixError("singular channel realisation", mask=bad)
    return g
