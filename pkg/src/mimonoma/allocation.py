"""Power split between the superposed streams of the two users.

Only ``beta_sq`` (the share of user 2) is stored; ``alpha_sq = 1 - beta_sq``.
Functions broadcast over numpy arrays.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError, InfeasibleTargetError


def rate_to_threshold(rate):
    """SINR threshold ``2**R - 1`` for a target rate ``R`` in bits/channel use."""
    return np.exp2(np.asarray(rate, dtype=float)) - 1.0


@dataclass(frozen=True)
class RateTargets:
    r1: tuple
    r2: tuple

    def __post_init__(self):
        r1 = tuple(float(r) for r in np.atleast_1d(self.r1))
        r2 = tuple(float(r) for r in np.atleast_1d(self.r2))
        if len(r1) != len(r2):
            raise ConfigurationError("user-1 and user-2 rate lists differ in length")
        for name, rates in (("user-1", r1), ("user-2", r2)):
            if not all(np.isfinite(r) and r > 0 for r in rates):
                raise ConfigurationError(f"{name} rates must be positive, got {rates}")
        object.__setattr__(self, "r1", r1)
        object.__setattr__(self, "r2", r2)

    @classmethod
    def broadcast(cls, r1, r2, n):
        """Expand scalar (or length-1) rates to ``n`` layers."""
        r1 = np.atleast_1d(np.asarray(r1, dtype=float))
        r2 = np.atleast_1d(np.asarray(r2, dtype=float))
        if r1.size == 1:
            r1 = np.repeat(r1, n)
        if r2.size == 1:
            r2 = np.repeat(r2, n)
        if r1.size != n or r2.size != n:
            raise ConfigurationError(f"expected 1 or {n} rates per user")
        return cls(tuple(r1), tuple(r2))

    @property
    def layers(self):
        return len(self.r1)

    @property
    def eps1(self):
        return rate_to_threshold(self.r1)

    @property
    def eps2(self):
        return rate_to_threshold(self.r2)


@dataclass(frozen=True)
class PowerCoefficients:
    beta_sq: np.ndarray

    @property
    def alpha_sq(self):
        return 1.0 - self.beta_sq


def feasibility_range(eps1, rho):
    """Open interval ``(1 - exp(-eps1/rho), 1)`` of admissible policy-I targets."""
    lower = -np.expm1(-np.asarray(eps1, dtype=float) / rho)
    return lower, np.ones_like(lower)


def snr_coupled_target(eps1, rho, multiplier):
    """Target of the form ``1 - exp(-multiplier * eps1 / rho)``, ``multiplier > 1``."""
    if not multiplier > 1:
        raise ConfigurationError(f"target multiplier must exceed 1, got {multiplier}")
    return -np.expm1(-multiplier * np.asarray(eps1, dtype=float) / rho)


def policy_one_beta(eps1, rho, target):
    """User-2 power share meeting a long-term user-1 outage target exactly.

    ``beta^2 = (1 + eps1 / (rho * ln(1 - target))) / (1 + eps1)``, which lies
    in ``(0, 1/(1+eps1))`` whenever the target is feasible.

    Raises
    ------
    InfeasibleTargetError
        If ``target <= 1 - exp(-eps1/rho)`` (only ``beta = 0`` would do) or
        ``target >= 1``.
    """
    eps1 = np.asarray(eps1, dtype=float)
    target = np.asarray(target, dtype=float)
    lower, _ = feasibility_range(eps1, rho)
    if np.any(target >= 1.0) or np.any(~np.isfinite(target)):
        raise InfeasibleTargetError(f"outage target must be below 1, got {target}")
    if np.any(target <= lower):
        raise InfeasibleTargetError(
            f"outage target {target} not above the single-user floor {lower} "
            f"(1 - exp(-eps/rho) at rho={rho})"
        )
    return (1.0 + eps1 / (rho * np.log1p(-target))) / (1.0 + eps1)


def _clamped_share(gain, eps1, rho):
    gain = np.asarray(gain, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        share = (gain - eps1 / rho) / (gain * (1.0 + eps1))
    share = np.where(gain > 0, share, 0.0)
    return np.maximum(share, 0.0)


def policy_two_beta(z, x, eps1, rho):
    """Instantaneous allocation: user 1's rate met whenever the channel allows.

    The z-term meets the user-1 SINR target with equality at user 1; the
    x-term caps the share so user 2 can still strip user 1's stream by SIC.
    A zero gain gives a zero term.
    """
    return np.minimum(_clamped_share(z, eps1, rho), _clamped_share(x, eps1, rho))
