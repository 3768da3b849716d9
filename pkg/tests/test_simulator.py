import numpy as np
import pytest

from mimonoma import simulator as sim
from mimonoma.channel import make_rng
from mimonoma.config import SystemConfig
from mimonoma.exceptions import SimulationError
from mimonoma.link import realize_outcome


def small(**kw):
    base = dict(rho_db=(0.0, 10.0), trials=5000, seed=17)
    base.update(kw)
    return SystemConfig(**base)


def test_single_trial_matches_hand_trace():
    cfg = small(trials=1)
    got = sim.run_point(cfg, 1)
    ch, eff, _ = sim._sample_valid(cfg, make_rng(cfg.seed, 1, 0), 1)
    out = realize_outcome(ch, cfg, 10.0, eff=eff)
    assert [e.failures for e in got.user1] == (~out.user1_ok[0]).astype(int).tolist()
    assert [e.failures for e in got.user2] == (~out.user2_ok[0]).astype(int).tolist()


def test_block_split_and_worker_count_do_not_change_counts():
    cfg = small(trials=sim.BLOCK_TRIALS + 123)
    a = sim.run_point(cfg, 1, workers=1)
    b = sim.run_point(cfg, 1, workers=2)
    assert a == b
    assert all(e.trials == cfg.trials for e in a.user2)


def test_estimate_statistics():
    e = sim.OutageEstimate(failures=25, trials=100)
    assert e.p_hat == 0.25
    assert e.std_err == pytest.approx(np.sqrt(0.25 * 0.75 / 100))


@pytest.mark.parametrize("scheme", ["noma", "zf-noma", "sa-noma", "oma"])
def test_every_scheme_runs(scheme):
    sw = sim.run_sweep(small(scheme=scheme))
    assert len(sw.points) == 2
    curve = sw.curve(2)
    assert curve.shape == (2, 3) and np.all((0 <= curve) & (curve <= 1))
    if scheme == "oma":
        assert sw.points[0].user1 is None and 1 not in sw.overlays


def test_sa_and_zf_noma_agree_on_every_trial():
    a = sim.run_sweep(small(scheme="sa-noma"))
    b = sim.run_sweep(small(scheme="zf-noma"))
    np.testing.assert_array_equal(a.curve(2), b.curve(2))
    np.testing.assert_array_equal(a.curve(1), b.curve(1))


def test_overlays_follow_policy():
    one = sim.analytic_overlays(small())
    assert one[1].analytic.shape == (2, 3) and one[2].analytic.shape == (2, 3)
    two = sim.analytic_overlays(small(policy=2))
    assert two[2].analytic is None and two[2].lower.shape == (2, 3)
    qr = sim.analytic_overlays(small(detector_u1="qr"))
    assert qr[1].analytic is None


def test_excessive_singular_resampling_aborts(monkeypatch):
    def always_bad(config, ch):
        eff, bad = sim.effective_channel_with_mask(ch)
        return eff, np.ones_like(bad)

    monkeypatch.setattr(sim, "_prepare", always_bad)
    with pytest.raises(SimulationError):
        sim.run_point(small(trials=100), 0)


def test_occasional_singular_draws_are_resampled_and_counted(monkeypatch):
    original = sim._prepare
    calls = []

    def flaky(config, ch):
        state, bad = original(config, ch)
        if not calls:
            bad = bad.copy()
            bad[0] = True
        calls.append(1)
        return state, bad

    monkeypatch.setattr(sim, "_prepare", flaky)
    est = sim.run_point(small(trials=2000), 0)
    assert est.user2[0].resampled_singular == 1


def test_layer_gain_sampler_is_deterministic():
    x1, z1 = sim.sample_layer_gains(3, 3, 1000, 5)
    x2, z2 = sim.sample_layer_gains(3, 3, 1000, 5)
    np.testing.assert_array_equal(x1, x2)
    np.testing.assert_array_equal(z1, z2)
    assert x1.shape == z1.shape == (1000, 3)
