"""Monte Carlo outage estimation over an SNR grid.

Trials are cut into fixed blocks of ``BLOCK_TRIALS``. Block ``b`` at grid
index ``k`` always draws from the stream keyed ``(seed, k, b)``, so counts
depend only on the configuration and never on how blocks are spread over
worker processes.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import analytics as an
from .benchmarks import (
    LayerGains,
    mimo_oma_outcome,
    order_by_user2,
    sa_noma_detection_with_mask,
    zf_noma_gains_with_mask,
)
from .channel import effective_channel_with_mask, make_rng, sample_channel
from .exceptions import SimulationError
from .link import allocate_power, realize_outcome, user1_zf_decode, user2_sic_chain

BLOCK_TRIALS = 1 << 15
MAX_RESAMPLE_FRACTION = 1e-3


@dataclass(frozen=True)
class OutageEstimate:
    failures: int
    trials: int
    resampled_singular: int = 0

    @property
    def p_hat(self):
        return self.failures / self.trials

    @property
    def std_err(self):
        p = self.p_hat
        return float(np.sqrt(p * (1.0 - p) / self.trials))


@dataclass(frozen=True)
class PointResult:
    rho_db: float
    user1: tuple | None  # OutageEstimate per layer, None if undefined for the scheme
    user2: tuple

    def p_hat(self, user):
        est = self.user1 if user == 1 else self.user2
        return np.array([e.p_hat for e in est])

    def std_err(self, user):
        est = self.user1 if user == 1 else self.user2
        return np.array([e.std_err for e in est])


def _prepare(config, ch):
    """Scheme-specific per-trial quantities and the singular-realisation mask."""
    if config.scheme in ("noma", "oma"):
        return effective_channel_with_mask(ch)
    if config.scheme == "zf-noma":
        return zf_noma_gains_with_mask(ch)
    det, bad = sa_noma_detection_with_mask(ch)
    return order_by_user2(det.g2, det.g1), bad


def _sample_valid(config, rng, count):
    """Draw ``count`` channels, redrawing (and counting) singular ones."""
    ch = sample_channel(config.m, config.n, rng, size=count)
    state, bad = _prepare(config, ch)
    resampled = 0
    while np.any(bad):
        idx = np.flatnonzero(bad)
        resampled += idx.size
        if resampled > max(1, MAX_RESAMPLE_FRACTION * count):
            raise SimulationError(
                f"{resampled} singular realisations in a block of {count}; "
                "this points to a numerical defect, not channel statistics"
            )
        fresh = sample_channel(config.m, config.n, rng, size=idx.size)
        h1, h2 = ch.h1.copy(), ch.h2.copy()
        h1[idx], h2[idx] = fresh.h1, fresh.h2
        ch = type(ch)(h1=h1, h2=h2)
        state, bad = _prepare(config, ch)
    return ch, state, resampled


def evaluate_trials(config, ch, state, rho, allocator=allocate_power):
    """Decode results ``(user1_ok or None, user2_ok)`` for prepared trials."""
    if config.scheme == "noma":
        out = realize_outcome(ch, config, rho, allocator=allocator, eff=state)
        return out.user1_ok, out.user2_ok
    if config.scheme == "oma":
        return None, mimo_oma_outcome(state.x, config.rates, rho)
    gains = LayerGains(x=state.x, z=state.z)
    coeffs = allocator(config, gains, rho)
    return (
        user1_zf_decode(gains.z, coeffs, config.rates, rho),
        user2_sic_chain(gains.x, coeffs, config.rates, rho),
    )


def _run_block(task):
    config, rho_index, block_index, count, allocator = task
    rho = float(config.rho_linear[rho_index])
    rng = make_rng(config.seed, rho_index, block_index)
    ch, state, resampled = _sample_valid(config, rng, count)
    u1, u2 = evaluate_trials(config, ch, state, rho, allocator)
    fail1 = None if u1 is None else (~u1).sum(axis=0)
    return fail1, (~u2).sum(axis=0), resampled


def _blocks(trials):
    full, rest = divmod(trials, BLOCK_TRIALS)
    sizes = [BLOCK_TRIALS] * full + ([rest] if rest else [])
    return list(enumerate(sizes))


def run_point(config, rho_index, workers=1, allocator=allocate_power):
    """Estimate per-layer outage for both users at one grid point.

    ``workers > 1`` farms blocks out to processes; the result is identical.
    """
    tasks = [(config, rho_index, b, size, allocator) for b, size in _blocks(config.trials)]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_block, tasks))
    else:
        results = [_run_block(t) for t in tasks]

    resampled = sum(r[2] for r in results)
    if resampled > MAX_RESAMPLE_FRACTION * config.trials and resampled > 1:
        raise SimulationError(f"{resampled} singular realisations out of {config.trials} trials")
    fail2 = sum(r[1] for r in results)
    user2 = tuple(OutageEstimate(int(f), config.trials, resampled) for f in fail2)
    user1 = None
    if results[0][0] is not None:
        fail1 = sum(r[0] for r in results)
        user1 = tuple(OutageEstimate(int(f), config.trials, resampled) for f in fail1)
    return PointResult(rho_db=config.rho_db[rho_index], user1=user1, user2=user2)


@dataclass(frozen=True)
class Overlay:
    """Closed-form values aligned with a simulated curve; ``None`` where absent."""

    analytic: np.ndarray | None = None  # (G, N)
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None


@dataclass(frozen=True)
class SweepResult:
    config: object
    points: tuple  # PointResult per grid entry
    overlays: dict  # user -> Overlay

    def curve(self, user):
        return np.array([p.p_hat(user) for p in self.points])

    def std_err(self, user):
        return np.array([p.std_err(user) for p in self.points])


def analytic_overlays(config):
    """Closed forms matching the configured scheme, policy and detector."""
    eps1, eps2 = config.rates.eps1, config.rates.eps2
    rhos = config.rho_linear
    overlays = {1: Overlay(), 2: Overlay()}
    if config.scheme == "oma":
        overlays.pop(1)
        overlays[2] = Overlay(analytic=np.array([an.oma_outage(config.m, config.rates_u2, r) for r in rhos]))
        return overlays
    if config.scheme != "noma":
        return overlays
    if config.policy == 1:
        betas = [allocate_power(config, LayerGains(np.zeros(config.n), np.zeros(config.n)), r).beta_sq for r in rhos]
        u2 = np.array([an.user2_outage_policy1_exact(config.m, eps1, eps2, b, r) for b, r in zip(betas, rhos)])
        u1 = None
        if config.detector_u1 == "zf":
            u1 = np.array([an.user1_outage_policy1(eps1, r, b) for b, r in zip(betas, rhos)])
        overlays[1] = Overlay(analytic=u1)
        overlays[2] = Overlay(analytic=u2)
    else:
        if config.detector_u1 == "zf":
            overlays[1] = Overlay(analytic=np.array([an.user1_outage_policy2(eps1, r) for r in rhos]))
        bounds = [an.user2_outage_policy2_bounds(config.m, eps1, eps2, r) for r in rhos]
        overlays[2] = Overlay(
            lower=np.array([b.lower for b in bounds]),
            upper=np.array([b.upper for b in bounds]),
        )
    return overlays


def run_sweep(config, workers=1, allocator=allocate_power):
    points = tuple(run_point(config, k, workers=workers, allocator=allocator) for k in range(len(config.rho_db)))
    return SweepResult(config=config, points=points, overlays=analytic_overlays(config))


DIST_STREAM = 1 << 31


def sample_layer_gains(m, n, samples, seed):
    """Independent draws of the per-layer gains ``(x, z)``, each ``(samples, N)``.

    Uses its own stream family so it never overlaps a sweep's streams.
    """
    from .config import SystemConfig

    config = SystemConfig(m=m, n=n, policy=2, trials=samples, seed=seed)
    xs, zs = [], []
    for b, size in _blocks(samples):
        _, eff, _ = _sample_valid(config, make_rng(seed, DIST_STREAM, b), size)
        xs.append(eff.x)
        zs.append(eff.z)
    return np.concatenate(xs), np.concatenate(zs)
