"""Closed-form outage expressions, bounds and diversity-slope fitting.

Layer indices are 1-based in docstrings and 0-based in arrays. Every
per-layer function returns an array with one entry per layer.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import InsufficientDataError

_TAIL_TERMS = 80


def _log_factorial(k):
    k = np.asarray(k)
    table = np.concatenate(([0.0], np.cumsum(np.log(np.arange(1, int(k.max(initial=0)) + 2)))))
    return table[k]


def gamma_ratio(k, t):
    """Regularised lower incomplete gamma ``P(k, t)`` for integer ``k >= 1``.

    Equal to ``1 - exp(-t) * sum_{j<k} t**j / j!``, the CDF at ``t`` of a
    Gamma(k, 1) variable. For ``t < k/2`` the equivalent tail series
    ``exp(-t) * sum_{j>=k} t**j / j!`` is summed instead, which keeps full
    relative precision for tiny probabilities.
    """
    k, t = np.broadcast_arrays(np.asarray(k), np.asarray(t, dtype=float))
    if np.any(k < 1) or np.any(k != np.floor(k)):
        raise ValueError("shape k must be a positive integer")
    if np.any(t < 0) or np.any(np.isnan(t)):
        raise ValueError("argument t must be non-negative")
    k = k.astype(int)
    out = np.empty(t.shape)

    small = t < 0.5 * k
    if np.any(small):
        ks, ts = k[small], t[small]
        with np.errstate(divide="ignore"):
            term = np.exp(ks * np.log(ts) - _log_factorial(ks) - ts)
        total = term.copy()
        for j in range(_TAIL_TERMS):
            term = term * ts / (ks + j + 1)
            total += term
        out[small] = total

    big = ~small
    if np.any(big):
        kb, tb = k[big], t[big]
        term = np.exp(-tb)
        head = term.copy()
        for j in range(1, int(kb.max())):
            term = term * tb / j
            head += np.where(j < kb, term, 0.0)
        out[big] = 1.0 - head
    return out if out.ndim else float(out)


def user1_outage_policy1(eps1, rho, beta_sq):
    """User-1 outage with fixed coefficients: ``1 - exp(-(eps1/rho)/(alpha^2 - beta^2 eps1))``.

    Returns 1 where ``alpha^2 <= beta^2 eps1`` (the SINR can never reach the
    threshold).
    """
    eps1 = np.asarray(eps1, dtype=float)
    margin = 1.0 - np.asarray(beta_sq, dtype=float) * (1.0 + eps1)
    with np.errstate(divide="ignore"):
        val = -np.expm1(-(eps1 / rho) / np.where(margin > 0, margin, 1.0))
    return np.where(margin > 0, val, 1.0)


def user1_outage_policy2(eps1, rho):
    """User-1 outage under instantaneous allocation, identical to single-user ZF."""
    return -np.expm1(-np.asarray(eps1, dtype=float) / rho)


def policy1_thresholds(eps1, eps2, beta_sq, rho):
    """Decode thresholds on ``x_m`` at user 2 under fixed coefficients.

    Returns ``(xi, g, feasible)`` where ``xi`` is the threshold for ``s_m``,
    ``g = max(xi, eps2 / (rho beta^2))`` covers both streams, and
    ``feasible`` is False where ``alpha^2 - beta^2 eps1 <= 0`` or ``beta = 0``.
    """
    eps1 = np.asarray(eps1, dtype=float)
    eps2 = np.asarray(eps2, dtype=float)
    beta_sq = np.asarray(beta_sq, dtype=float)
    margin = 1.0 - beta_sq * (1.0 + eps1)
    feasible = (margin > 0) & (beta_sq > 0)
    safe_margin = np.where(feasible, margin, 1.0)
    safe_beta = np.where(feasible, beta_sq, 1.0)
    xi = np.where(feasible, (eps1 / rho) / safe_margin, np.inf)
    g = np.where(feasible, np.maximum(xi, eps2 / (rho * safe_beta)), np.inf)
    return xi, g, feasible


def _layer_shapes(m_antennas, n_layers):
    return m_antennas - np.arange(n_layers)  # M - m + 1 for m = 1..N


def user2_outage_policy1_exact(m_antennas, eps1, eps2, beta_sq, rho):
    """Exact user-2 outage per layer under policy I.

    ``P_i = sum_{m<=i} P(x_m < g_m) * prod_{n<m} P(x_n >= g_n)`` with
    ``x_m ~ Gamma(M-m+1, 1)``; a layer whose coefficients cannot support
    decoding contributes probability one.
    """
    _, g, feasible = policy1_thresholds(eps1, eps2, beta_sq, rho)
    g = np.atleast_1d(g)
    feasible = np.atleast_1d(feasible)
    shapes = _layer_shapes(m_antennas, g.size)
    p = np.where(feasible, gamma_ratio(shapes, np.where(feasible, g, 0.0)), 1.0)
    survive = np.concatenate(([1.0], np.cumprod(1.0 - p)[:-1]))
    return np.cumsum(p * survive)


def user2_outage_policy1_approx(m_antennas, eps1, eps2, beta_sq, rho, form="dominant"):
    """High-SNR approximation of the policy-I user-2 outage.

    ``form="dominant"`` keeps only the layer's own leading term
    ``g_i**(M-i+1) / (M-i+1)!``; ``form="sum"`` keeps the leading term of
    every layer up to ``i``.
    """
    _, g, _ = policy1_thresholds(eps1, eps2, beta_sq, rho)
    g = np.atleast_1d(g)
    shapes = _layer_shapes(m_antennas, g.size)
    lead = np.exp(shapes * np.log(g) - _log_factorial(shapes))
    if form == "dominant":
        return lead
    if form == "sum":
        return np.cumsum(lead)
    raise ValueError(f"unknown form {form!r}")


@dataclass(frozen=True)
class Policy2Bounds:
    lower: np.ndarray   # (N,)
    upper: np.ndarray   # (N,)
    pieces: np.ndarray  # (N, 6) per-layer upper-bound terms before summing

    PIECE_NAMES = (
        "z<eps1", "x<eps1", "z<eps_joint", "z<eps1", "x<eps_joint", "x<eps1",
    )


def user2_outage_policy2_bounds(m_antennas, eps1, eps2, rho):
    """Lower and upper bounds on user-2 outage under policy II.

    For each layer ``m`` the upper bound adds six probabilities: two from
    the failure to strip ``s_m`` and four from the failure to decode ``w_m``,
    with ``eps_joint = eps1 + eps2 + eps1*eps2``. Layer ``i`` sums pieces over
    ``m <= i`` and is capped at 1. The lower bound is the layer-1 event
    ``z_1 < eps1/rho <= x_1`` which is contained in every layer's outage.
    """
    eps1 = np.atleast_1d(np.asarray(eps1, dtype=float))
    eps2 = np.atleast_1d(np.asarray(eps2, dtype=float))
    shapes = _layer_shapes(m_antennas, eps1.size)
    joint = eps1 + eps2 + eps1 * eps2
    p_z1 = -np.expm1(-eps1 / rho)
    p_zj = -np.expm1(-joint / rho)
    p_x1 = gamma_ratio(shapes, eps1 / rho)
    p_xj = gamma_ratio(shapes, joint / rho)
    pieces = np.stack([p_z1, p_x1, p_zj, p_z1, p_xj, p_x1], axis=1)
    upper = np.minimum(np.cumsum(pieces.sum(axis=1)), 1.0)
    lower_1 = p_z1[0] * (1.0 - gamma_ratio(m_antennas, eps1[0] / rho))
    lower = np.full(eps1.size, lower_1)
    return Policy2Bounds(lower=lower, upper=upper, pieces=pieces)


def oma_outage(m_antennas, rates_u2, rho):
    """User-2 outage of QR-precoded OMA with the half-rate penalty, per layer."""
    rates_u2 = np.atleast_1d(np.asarray(rates_u2, dtype=float))
    shapes = _layer_shapes(m_antennas, rates_u2.size)
    return gamma_ratio(shapes, np.expm1(2.0 * rates_u2 * np.log(2.0)) / rho)


def zf_precoder_outage(m_antennas, n_antennas, eps1, rho):
    """User-1 outage with a per-stream normalised ZF precoder and no user 2."""
    eps1 = np.atleast_1d(np.asarray(eps1, dtype=float))
    return gamma_ratio(np.full(eps1.size, m_antennas - n_antennas + 1), eps1 / rho)


@dataclass(frozen=True)
class AnalyticCurve:
    rho_db: np.ndarray  # (G,)
    values: np.ndarray  # (G, N)


def db_to_linear(db):
    return np.power(10.0, np.asarray(db, dtype=float) / 10.0)


def diversity_slope(rho_db, values, window=(25.0, 40.0)):
    """Negated least-squares slope of log10(outage) against log10(rho).

    Only grid points with ``window[0] <= rho_db <= window[1]`` are used.

    Raises
    ------
    InsufficientDataError
        If fewer than three points fall in the window or any of them has
        zero outage.
    """
    rho_db = np.asarray(rho_db, dtype=float)
    values = np.asarray(values, dtype=float)
    keep = (rho_db >= window[0] - 1e-9) & (rho_db <= window[1] + 1e-9)
    if keep.sum() < 3:
        raise InsufficientDataError(f"need >= 3 points in {window} dB, got {int(keep.sum())}")
    if np.any(values[keep] <= 0) or np.any(~np.isfinite(values[keep])):
        raise InsufficientDataError("zero or non-finite outage inside the fitting window")
    slope, _ = np.polyfit(rho_db[keep] / 10.0, np.log10(values[keep]), 1)
    return float(-slope)
