"""Cross-checks of simulated outage against closed forms, bounds and slopes.

Each check group returns a list of :class:`Check` rows; a group passes when
all its rows pass. Monte Carlo comparisons against a closed form use the
binomial standard error evaluated at the closed-form probability, so a
point with zero observed failures is still judged against its expected
spread.
"""

from dataclasses import dataclass

import numpy as np

from . import analytics as an
from . import matrixkit as mk
from .allocation import policy_one_beta, snr_coupled_target
from .benchmarks import sa_noma_detection
from .channel import build_effective_channel, complex_gaussian, make_rng, sample_channel, zf_gains_direct
from .config import SystemConfig, db_grid
from .exceptions import InsufficientDataError
from .link import PowerCoefficients, allocate_power, realize_outcome
from .report import curve_csv
from .simulator import run_sweep, sample_layer_gains

SIGMA = 3.0
DEFAULT_SEED = 2016
AUDIT_STREAM = 1 << 30


@dataclass(frozen=True)
class Check:
    criterion: int
    name: str
    expected: object
    observed: object
    tolerance: str
    passed: bool

    def line(self):
        tag = "PASS" if self.passed else "FAIL"
        return (
            f"[{tag}] C{self.criterion} {self.name}: expected {_show(self.expected)}, "
            f"observed {_show(self.observed)}, tolerance {self.tolerance}"
        )


def _show(value):
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".6g")
    return str(value)


def binomial_sigma(p, trials):
    p = np.asarray(p, dtype=float)
    return np.sqrt(p * (1.0 - p) / trials)


def _gl_cdf(k, t, nodes=40):
    """Gamma(k,1) CDF by composite Gauss-Legendre quadrature of its density."""
    if t == 0:
        return 0.0
    xg, wg = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(0.0, t, int(np.ceil(t)) + 2)
    lo, hi = edges[:-1, None], edges[1:, None]
    x = 0.5 * (hi - lo) * xg + 0.5 * (hi + lo)
    log_fact = np.sum(np.log(np.arange(1, k)))
    dens = np.exp((k - 1) * np.log(x) - x - log_fact)
    return float(np.sum(0.5 * (hi - lo) * wg * dens))


def moderate_rate_config(**kw):
    base = dict(m=3, n=3, rates_u1=(1.0,), rates_u2=(2.0,), policy=1, target_multiplier=2.0)
    base.update(kw)
    return SystemConfig(**base)


def high_rate_config(**kw):
    base = dict(m=3, n=3, rates_u1=(1.0,), rates_u2=(4.0,), policy=1, target_multiplier=2.0)
    base.update(kw)
    return SystemConfig(**base)


class Verifier:
    """Runs check groups at a chosen Monte Carlo scale.

    ``allocator`` replaces the power-allocation step of the simulator; it
    exists so a deliberately wrong allocation can demonstrate that the
    checks catch it.
    """

    def __init__(self, trials=1_000_000, seed=DEFAULT_SEED, workers=1, allocator=allocate_power,
                 equivalence_trials=1000, audit_trials=100_000, fuzz_matrices=1000):
        self.trials = trials
        self.seed = seed
        self.workers = workers
        self.allocator = allocator
        self.equivalence_trials = equivalence_trials
        self.audit_trials = audit_trials
        self.fuzz_matrices = fuzz_matrices
        self._sweeps = {}

    def sweep(self, config):
        config = config.replace(trials=self.trials, seed=self.seed)
        if config not in self._sweeps:
            self._sweeps[config] = run_sweep(config, workers=self.workers, allocator=self.allocator)
        return self._sweeps[config]

    def _policy2_sweep(self, m=3):
        grid = db_grid(0, 50, 5) if m == 3 else db_grid(25, 40, 5)
        return self.sweep(moderate_rate_config(m=m, policy=2, rho_db=grid))

    # C1 -----------------------------------------------------------------
    def user1_policy1(self):
        sw = self.sweep(moderate_rate_config(rho_db=(10.0, 20.0, 30.0)))
        checks = []
        for g, point in enumerate(sw.points):
            rho = sw.config.rho_linear[g]
            target = snr_coupled_target(sw.config.rates.eps1, rho, 2.0)
            sigma = binomial_sigma(target, self.trials)
            for i, est in enumerate(point.user1):
                checks.append(Check(
                    1, f"user-1 policy I target, {point.rho_db:g} dB layer {i + 1}",
                    target[i], est.p_hat, f"+-{SIGMA:g} sigma ({SIGMA * sigma[i]:.3g})",
                    abs(est.p_hat - target[i]) <= SIGMA * sigma[i],
                ))
        return checks

    # C2 -----------------------------------------------------------------
    def user1_policy2(self):
        sw = self._policy2_sweep()
        checks = []
        exact = sw.overlays[1].analytic
        for g, point in enumerate(sw.points):
            sigma = binomial_sigma(exact[g], self.trials)
            for i, est in enumerate(point.user1):
                checks.append(Check(
                    2, f"user-1 policy II law, {point.rho_db:g} dB layer {i + 1}",
                    exact[g, i], est.p_hat, f"+-{SIGMA:g} sigma ({SIGMA * sigma[i]:.3g})",
                    abs(est.p_hat - exact[g, i]) <= SIGMA * sigma[i],
                ))
        checks.append(self._policy2_audit())
        return checks

    def _policy2_audit(self):
        """Trial-by-trial: user-1 failure iff ``z_i < eps1 / rho``."""
        config = moderate_rate_config(policy=2)
        rng = make_rng(self.seed, AUDIT_STREAM)
        per_rho = self.audit_trials // 4
        agree = total = 0
        for db in (0.0, 10.0, 20.0, 30.0):
            rho = float(an.db_to_linear(db))
            ch = sample_channel(config.m, config.n, rng, size=per_rho)
            eff = build_effective_channel(ch)
            out = realize_outcome(ch, config, rho, allocator=self.allocator, eff=eff)
            predicted = eff.z >= config.rates.eps1 / rho
            agree += int(np.sum(np.all(out.user1_ok == predicted, axis=-1)))
            total += per_rho
        return Check(2, "per-trial equivalence failure <=> z < eps1/rho", "100%",
                     f"{100.0 * agree / total:.4f}% of {total}", "exact", agree == total)

    # C3 -----------------------------------------------------------------
    def user2_policy1(self):
        sw = self.sweep(moderate_rate_config(rho_db=db_grid(10, 40, 5)))
        c = sw.config
        exact = sw.overlays[2].analytic
        checks = []
        for g, point in enumerate(sw.points):
            sigma = binomial_sigma(exact[g], self.trials)
            for i, est in enumerate(point.user2):
                checks.append(Check(
                    3, f"user-2 policy I exact, {point.rho_db:g} dB layer {i + 1}",
                    exact[g, i], est.p_hat, f"+-{SIGMA:g} sigma ({SIGMA * sigma[i]:.3g})",
                    abs(est.p_hat - exact[g, i]) <= SIGMA * sigma[i],
                ))
        for db in c.rho_db:
            rho = float(an.db_to_linear(db))
            beta = policy_one_beta(c.rates.eps1, rho, c.user1_target(rho))
            _, gth, _ = an.policy1_thresholds(c.rates.eps1, c.rates.eps2, beta, rho)
            ex = an.user2_outage_policy1_exact(c.m, c.rates.eps1, c.rates.eps2, beta, rho)
            ap = an.user2_outage_policy1_approx(c.m, c.rates.eps1, c.rates.eps2, beta, rho)
            for i in range(c.n):
                if gth[i] < 0.05:
                    rel = abs(ap[i] - ex[i]) / ex[i]
                    checks.append(Check(
                        3, f"high-SNR approximation, {db:g} dB layer {i + 1} (g={gth[i]:.3g})",
                        ex[i], ap[i], "15% relative", rel < 0.15,
                    ))
        return checks

    # C4 -----------------------------------------------------------------
    def diversity(self):
        checks = []
        window = (25.0, 40.0)
        c = moderate_rate_config(rho_db=db_grid(25, 40, 5))
        curve = np.array([
            an.user2_outage_policy1_exact(
                c.m, c.rates.eps1, c.rates.eps2,
                policy_one_beta(c.rates.eps1, r, c.user1_target(r)), r)
            for r in c.rho_linear
        ])
        for i in range(c.n):
            slope = an.diversity_slope(c.rho_db, curve[:, i], window)
            checks.append(Check(4, f"user-2 policy I slope layer {i + 1} (M=3, closed form)",
                                c.m - i, slope, "+-0.5", abs(slope - (c.m - i)) <= 0.5))

        sw3 = self._policy2_sweep(3)
        checks += self._sim_slopes(sw3, user=1, label="user-1 policy II", m=3)
        checks += self._sim_slopes(sw3, user=2, label="user-2 policy II", m=3)
        checks += self._sim_slopes(self._policy2_sweep(6), user=2, label="user-2 policy II", m=6)
        return checks

    def _sim_slopes(self, sw, user, label, m):
        out = []
        curve = sw.curve(user)
        for i in range(curve.shape[1]):
            try:
                slope = an.diversity_slope(sw.config.rho_db, curve[:, i], (25.0, 40.0))
            except InsufficientDataError as exc:
                out.append(Check(4, f"{label} slope layer {i + 1} (M={m}, simulated)", 1.0, str(exc), "+-0.3", False))
                continue
            out.append(Check(4, f"{label} slope layer {i + 1} (M={m}, simulated)",
                             1.0, slope, "+-0.3", abs(slope - 1.0) <= 0.3))
        return out

    # C5 -----------------------------------------------------------------
    def bounds(self):
        sw = self._policy2_sweep()
        lo, hi = sw.overlays[2].lower, sw.overlays[2].upper
        checks = []
        for g, point in enumerate(sw.points):
            for i, est in enumerate(point.user2):
                near = min(max(est.p_hat, lo[g, i]), hi[g, i])
                slack = SIGMA * max(est.std_err, float(binomial_sigma(near, est.trials)))
                ok = lo[g, i] - slack <= est.p_hat <= hi[g, i] + slack
                checks.append(Check(
                    5, f"user-2 policy II bounds, {point.rho_db:g} dB layer {i + 1}",
                    f"[{lo[g, i]:.6g}, {hi[g, i]:.6g}]", est.p_hat, f"+-{SIGMA:g} sigma ({slack:.3g})", ok,
                ))
        return checks

    # C6 -----------------------------------------------------------------
    def sa_zf(self):
        rng = make_rng(self.seed, AUDIT_STREAM + 1)
        ch = sample_channel(3, 3, rng, size=self.equivalence_trials)
        rho = 1000.0
        eps1 = np.full(3, 1.0)
        coeffs = PowerCoefficients(policy_one_beta(eps1, rho, snr_coupled_target(eps1, rho, 2.0)))
        det = sa_noma_detection(ch)
        sinr_sa, snr_sa = det.sinr(coeffs, rho)
        g_zf = zf_gains_direct(ch.h2)
        sinr_zf = coeffs.alpha_sq * g_zf / (coeffs.beta_sq * g_zf + 1.0 / rho)
        snr_zf = rho * coeffs.beta_sq * g_zf
        dev_sinr = float(np.max(np.abs(sinr_sa - sinr_zf) / np.abs(sinr_zf)))
        dev_snr = float(np.max(np.abs(snr_sa - snr_zf) / np.abs(snr_zf)))
        align = float(np.max(np.linalg.norm(det.u1 @ ch.h1 - det.u2 @ ch.h2, axis=(-2, -1))))
        n = self.equivalence_trials
        return [
            Check(6, f"SINR_SA vs SINR_ZF max relative deviation ({n} channels)", 0.0, dev_sinr, "< 1e-8", dev_sinr < 1e-8),
            Check(6, f"SNR_SA vs SNR_ZF max relative deviation ({n} channels)", 0.0, dev_snr, "< 1e-8", dev_snr < 1e-8),
            Check(6, "alignment U1 H1 = U2 H2 (Frobenius)", 0.0, align, "< 1e-8", align < 1e-8),
        ]

    # C7 -----------------------------------------------------------------
    def ordering(self):
        checks = []
        pairs = (
            (high_rate_config(rho_db=(30.0,)), high_rate_config(rho_db=(30.0,), scheme="zf-noma"), "ZF-NOMA", "M=N=3"),
            (high_rate_config(m=6, rho_db=(30.0,)), high_rate_config(m=6, rho_db=(30.0,), scheme="oma"), "MIMO-OMA", "M=6 N=3"),
        )
        for mine, other, name, dims in pairs:
            a = self.sweep(mine).points[0].user2
            b = self.sweep(other).points[0].user2
            for i, (ea, eb) in enumerate(zip(a, b)):
                sep = SIGMA * np.hypot(ea.std_err, eb.std_err)
                gap = eb.p_hat - ea.p_hat
                checks.append(Check(
                    7, f"proposed < {name} at 30 dB, {dims} layer {i + 1}",
                    f"{name} {eb.p_hat:.6g} - proposed {ea.p_hat:.6g} > 3 sigma", gap,
                    f"> {sep:.3g}", gap > sep,
                ))
        # closed-form ordering for the OMA comparison, where Monte Carlo lacks events
        c = high_rate_config(m=6, rho_db=(30.0,))
        rho = float(c.rho_linear[0])
        beta = policy_one_beta(c.rates.eps1, rho, c.user1_target(rho))
        noma = an.user2_outage_policy1_exact(c.m, c.rates.eps1, c.rates.eps2, beta, rho)
        oma = an.oma_outage(c.m, c.rates_u2, rho)
        for i in range(c.n):
            checks.append(Check(
                7, f"proposed < MIMO-OMA at 30 dB, M=6 N=3 layer {i + 1} (closed form)",
                f"MIMO-OMA {oma[i]:.4g} > proposed", noma[i], "strict", noma[i] < oma[i],
            ))
        return checks

    # C8 -----------------------------------------------------------------
    def qr_floor(self):
        checks = []
        for det, rule, limit in (("qr", "<", 3.0), ("zf", ">", 50.0)):
            sw = self.sweep(moderate_rate_config(rho_db=(30.0, 50.0), detector_u1=det))
            p30, p50 = sw.points[0].user1[0].p_hat, sw.points[1].user1[0].p_hat
            ratio = p30 / p50 if p50 > 0 else np.inf
            ok = ratio < limit if rule == "<" else ratio > limit
            checks.append(Check(8, f"layer-1 user-1 outage drop 30->50 dB, {det.upper()} detector",
                                f"ratio {rule} {limit:g}", f"{ratio:.4g} ({p30:.4g} -> {p50:.4g})", rule + f" {limit:g}", ok))
        return checks

    # C9 -----------------------------------------------------------------
    def qr_factors(self):
        rng = make_rng(self.seed, AUDIT_STREAM + 2)
        worst = dict(orth=0.0, lower=0.0, imag=0.0, neg=0.0, recon=0.0)
        for _ in range(self.fuzz_matrices):
            rows = int(rng.integers(1, 9))
            cols = int(rng.integers(1, rows + 1))
            a = complex_gaussian(rng, (rows, cols))
            f = mk.qr_decompose(a)
            d = np.diagonal(f.r)
            worst["orth"] = max(worst["orth"], np.linalg.norm(mk.hermitian(f.q) @ f.q - np.eye(rows)))
            worst["lower"] = max(worst["lower"], np.abs(np.tril(f.r, -1)).max(initial=0.0))
            worst["imag"] = max(worst["imag"], np.abs(d.imag).max())
            worst["neg"] = max(worst["neg"], -d.real.min())
            worst["recon"] = max(worst["recon"], np.linalg.norm(f.q @ f.r - a) / np.linalg.norm(a))
        n = self.fuzz_matrices
        return [
            Check(9, f"QR unitarity |Q^H Q - I|_F ({n} matrices)", 0.0, worst["orth"], "<= 1e-10", worst["orth"] <= 1e-10),
            Check(9, "QR strictly upper triangular", 0.0, worst["lower"], "<= 1e-12", worst["lower"] <= 1e-12),
            Check(9, "QR diagonal imaginary part", 0.0, worst["imag"], "<= 1e-12", worst["imag"] <= 1e-12),
            Check(9, "QR diagonal non-negative (max negative part)", 0.0, worst["neg"], "<= 1e-12", worst["neg"] <= 1e-12),
            Check(9, "QR reconstruction relative error", 0.0, worst["recon"], "<= 1e-10", worst["recon"] <= 1e-10),
        ]

    def gamma(self):
        worst = 0.0
        for k in range(1, 11):
            for t in (0.0, 1e-3, 0.05, 0.3, 1.0, 2.5, 5.0, 7.5, 10.0, 15.0, 20.0):
                worst = max(worst, abs(an.gamma_ratio(k, t) - _gl_cdf(k, t)))
        return [Check(9, "gamma_ratio vs quadrature of the Gamma density (k<=10, t<=20)",
                      0.0, worst, "<= 1e-10", worst <= 1e-10)]

    def distributions(self):
        checks = []
        n = 3
        cdfs = {}
        for m in (3, 4, 6):
            x, z = sample_layer_gains(m, n, self.trials, self.seed)
            count = x.shape[0]
            for name, data, theory in (("x", x, m - np.arange(n)), ("z", z, np.ones(n))):
                mean = data.mean(axis=0)
                var = data.var(axis=0, ddof=1)
                c = data - mean
                se_var = np.sqrt(np.maximum((c ** 4).mean(axis=0) - var ** 2, 0) / count)
                se_mean = np.sqrt(var / count)
                for i in range(n):
                    checks.append(Check(9, f"mean of {name}_{i + 1} at M={m}", theory[i], mean[i],
                                        f"+-3 SE ({3 * se_mean[i]:.3g})", abs(mean[i] - theory[i]) <= 3 * se_mean[i]))
                    checks.append(Check(9, f"variance of {name}_{i + 1} at M={m}", theory[i], var[i],
                                        f"+-3 SE ({3 * se_var[i]:.3g})", abs(var[i] - theory[i]) <= 3 * se_var[i]))
            corr = np.corrcoef(x, rowvar=False)
            off = np.abs(corr[~np.eye(n, dtype=bool)]).max()
            checks.append(Check(9, f"max |corr(x_i, x_j)| at M={m}", 0.0, off, "< 0.01", off < 0.01))
            cdfs[m] = z
        deciles = np.quantile(cdfs[3], np.linspace(0.1, 0.9, 9), axis=0)
        for m in (4, 6):
            gap = max(
                np.abs((cdfs[m][:, i, None] <= deciles[None, :, i]).mean(axis=0)
                       - (cdfs[3][:, i, None] <= deciles[None, :, i]).mean(axis=0)).max()
                for i in range(n)
            )
            checks.append(Check(9, f"z CDF gap at deciles, M={m} vs M=3", 0.0, gap, "< 0.01", gap < 0.01))
        return checks

    # C10 ----------------------------------------------------------------
    def reproducibility(self):
        config = moderate_rate_config(policy=2, rho_db=(0.0, 10.0, 20.0), trials=70_000, seed=self.seed)
        first = curve_csv(run_sweep(config, allocator=self.allocator), 2)
        again = curve_csv(run_sweep(config, allocator=self.allocator), 2)
        parallel = curve_csv(run_sweep(config, workers=2, allocator=self.allocator), 2)
        return [
            Check(10, "same seed + config -> byte-identical CSV", "identical",
                  "identical" if first == again else "differs", "exact", first == again),
            Check(10, "1 vs 2 workers -> byte-identical CSV", "identical",
                  "identical" if first == parallel else "differs", "exact", first == parallel),
        ]


GROUPS = {
    "user1-policy1": Verifier.user1_policy1,
    "user1-policy2": Verifier.user1_policy2,
    "user2-policy1": Verifier.user2_policy1,
    "diversity": Verifier.diversity,
    "bounds": Verifier.bounds,
    "sa-zf": Verifier.sa_zf,
    "ordering": Verifier.ordering,
    "qr-floor": Verifier.qr_floor,
    "qr": Verifier.qr_factors,
    "gamma": Verifier.gamma,
    "distributions": Verifier.distributions,
    "reproducibility": Verifier.reproducibility,
}


def run_checks(verifier, groups=None):
    """Yield ``(group, checks)`` for the selected groups in a fixed order."""
    for name in groups or GROUPS:
        if name not in GROUPS:
            raise KeyError(f"unknown check group {name!r}; choose from {', '.join(GROUPS)}")
        yield name, GROUPS[name](verifier)


def wrong_beta_allocator(config, eff, rho):
    """Negative control: drops the ``1 + eps`` normalisation from policy-I beta."""
    coeffs = allocate_power(config, eff, rho)
    if config.policy != 1:
        return coeffs
    eps1 = config.rates.eps1
    return PowerCoefficients(np.minimum(coeffs.beta_sq * (1.0 + eps1), 1.0 - 1e-12))


FAULTS = {"wrong-beta": wrong_beta_allocator}
