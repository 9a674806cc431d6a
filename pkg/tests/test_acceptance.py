"""Acceptance criteria, one PASS/FAIL line each.

Criteria are implemented as stated, tolerances included.  Where a stated
reference value does not correspond to the stated configuration, the
criterion is left to fail and a supplementary check (suffix ``s``) records
the configuration that does reproduce the printed number.
"""

import math
import time

import numpy as np
import pytest
from scipy import stats

from tempered_extrema.cost_models import mc_vs_mlmc_threshold, phi, stick_exp_sum, stick_integral
from tempered_extrema.estimators import level_statistics, mc_fixed, mlmc_estimate
from tempered_extrema.model import PRESET_VAR_EXPONENT, preset
from tempered_extrema.payoffs import PayoffSpec
from tempered_extrema.rng import RandomStream
from tempered_extrema.sb_core import sample_chi_n, sample_sticks
from tempered_extrema.stable import StableTriplet, sample_stable_increment

BARRIER = PayoffSpec("up_and_out_call", s0=100.0, strike=95.0, barrier=102.0)
UI = PayoffSpec("ulcer_integrand")
SUP = PayoffSpec("lipschitz_sup")


def ui_with_se(rep):
    """Ulcer index and its standard error through the square-root map."""
    ui = 100.0 * math.sqrt(rep.estimate)
    return ui, 50.0 * rep.standard_error / math.sqrt(rep.estimate)


def test_criterion_01_table_constants(report):
    t0 = time.perf_counter()
    devs = {k: abs(preset(k).derived.var_exponent - v) / v for k, v in PRESET_VAR_EXPONENT.items()}
    dt = time.perf_counter() - t0
    ok = max(devs.values()) <= 5e-3 and dt < 1.0
    assert report("1", ok, f"max rel dev {max(devs.values()):.2e} (<= 5e-3), {dt:.3f}s")


def test_criterion_02_threshold(report):
    t0 = time.perf_counter()
    a, b = mc_vs_mlmc_threshold(1.5), mc_vs_mlmc_threshold(2.0)
    dt = time.perf_counter() - t0
    ok = f"{a:.3g}" == "0.0915" and f"{b:.3g}" == "5.06e-05" and dt < 1.0
    assert report("2", ok, f"eps*(3/2)={a:.4g}, eps*(2)={b:.4g}, {dt:.3f}s")


def test_criterion_03_phi(report):
    v = phi(1.0)
    assert report("3", round(v, 5) == 0.58496, f"phi(1)={v:.6f}")


def test_criterion_04_barrier(report):
    m = preset("usdjpy_v2", T=90 / 365)
    t0 = time.perf_counter()
    rep = mc_fixed(m, BARRIER, 15, 100_000, seed=4)
    dt = time.perf_counter() - t0
    z = (rep.estimate - 0.4626) / rep.standard_error
    ok = abs(z) <= 3 and dt < 60
    assert report("4", ok, f"estimate {rep.estimate:.4f} +- {rep.standard_error:.4f}, "
                           f"target 0.4626, z={z:+.1f}, {dt:.1f}s")


def test_criterion_04s_barrier_figure_horizons(report):
    # the 0.4626 curve is reproduced at 180 days; 90 days gives the CLT figure's 1.113
    late = mc_fixed(preset("usdjpy_v2", T=180 / 365), BARRIER, 15, 100_000, seed=41)
    early = mc_fixed(preset("usdjpy_v2", T=90 / 365), BARRIER, 15, 100_000, seed=42)
    z1 = (late.estimate - 0.4626) / late.standard_error
    z2 = (early.estimate - 1.113) / early.standard_error
    ok = abs(z1) <= 3 and abs(z2) <= 3
    assert report("4s", ok, f"T=180/365: {late.estimate:.4f} vs 0.4626 (z={z1:+.1f}); "
                            f"T=90/365: {early.estimate:.4f} vs 1.113 (z={z2:+.1f})")


@pytest.fixture(scope="module")
def mcd_ui_14d():
    t0 = time.perf_counter()
    rep = mc_fixed(preset("mcd", T=14 / 365), UI, 12, 1_000_000, seed=5)
    return rep, time.perf_counter() - t0


def test_criterion_05_ulcer_index(report, mcd_ui_14d):
    rep, dt = mcd_ui_14d
    ui, se = ui_with_se(rep)
    z = (ui - 3.688) / se
    ok = abs(z) <= 3 and dt < 300
    assert report("5", ok, f"MCD UI {ui:.4f} +- {se:.4f}, target 3.688, z={z:+.1f}, {dt:.1f}s")


def test_criterion_05s_ulcer_index_by_preset(report, mcd_ui_14d):
    # 3.688 is the BIX curve; the MCD curve ends at 4.318
    ui_m, se_m = ui_with_se(mcd_ui_14d[0])
    ui_b, se_b = ui_with_se(mc_fixed(preset("bix", T=14 / 365), UI, 12, 1_000_000, seed=51))
    z_m, z_b = (ui_m - 4.318) / se_m, (ui_b - 3.688) / se_b
    ok = abs(z_m) <= 3 and abs(z_b) <= 3
    assert report("5s", ok, f"MCD {ui_m:.4f} vs 4.318 (z={z_m:+.1f}); BIX {ui_b:.4f} vs 3.688 (z={z_b:+.1f})")


def test_criterion_06_weight_martingale(report):
    parts, ok = [], True
    for sid, name in enumerate(("usdjpy_v1", "usdjpy_v2")):
        m = preset(name, T=30 / 365)
        w = sample_chi_n(m, 8, RandomStream(6, sid), 1_000_000).weight
        n = len(w)
        z1 = (w.mean() - 1.0) / (w.std(ddof=1) / math.sqrt(n))
        w2 = w * w
        target = math.exp(m.derived.var_exponent * m.T)
        z2 = (w2.mean() - target) / (w2.std(ddof=1) / math.sqrt(n))
        ok &= abs(z1) <= 4 and abs(z2) <= 4
        parts.append(f"{name}: z(E Y)={z1:+.2f}, z(E Y^2)={z2:+.2f}")
    assert report("6", ok, "; ".join(parts))


def _slope(ks, values):
    return float(np.polyfit(ks, np.log(values), 1)[0])


def test_criterion_07_mlmc_decay(report):
    bound = -math.log(1.25)
    t0 = time.perf_counter()
    ks = np.arange(3, 13)
    sup_stats = level_statistics(preset("usdjpy_v2", T=30 / 365), SUP, 12, 100_000, seed=7)
    v_sup = [sup_stats[k - 1].variance(0) for k in ks]
    bar_stats = level_statistics(preset("usdjpy_v2", T=90 / 365), BARRIER, 12, 100_000, seed=71)
    v_bar = [bar_stats[k - 1].variance(0) for k in ks]
    b_bar = [abs(bar_stats[k - 1].mean[0]) for k in ks]
    s1, s2, s3 = _slope(ks, v_sup), _slope(ks, v_bar), _slope(ks, b_bar)
    dt = time.perf_counter() - t0
    ok = s1 <= bound and s2 < 0 and s3 <= bound and dt < 600
    assert report("7", ok, f"sup var slope {s1:.3f}; barrier var slope {s2:.3f}, bias slope {s3:.3f} "
                           f"(bound {bound:.3f}), {dt:.1f}s")


def test_criterion_08_stick_sandwich(report):
    ok = True
    for c in (0.5, 2.0, 10.0):
        integral = stick_integral(c)
        for n in (1, 5, 20):
            gap = n + integral - stick_exp_sum(c, n)
            ok &= -1e-12 <= gap <= 2.0**-n * integral + 1e-12
    s = sample_sticks(1.0, 3, RandomStream(8), 1_000_000)
    x = np.exp(2.0 * s.lengths).sum(axis=1)
    z = (x.mean() - stick_exp_sum(2.0, 3)) / (x.std(ddof=1) / 1000)
    ok &= abs(z) <= 4
    assert report("8", ok, f"sandwich on 9 grid points, MC c=2 n=3 z={z:+.2f}")


@pytest.mark.slow
def test_criterion_09_clt_coverage(report):
    m = preset("usdjpy_v2", T=30 / 365)
    t0 = time.perf_counter()
    ref = mc_fixed(m, SUP, 25, 10_000_000, seed=90)
    hits = 0
    for r in range(200):
        rep = mlmc_estimate(m, SUP, 0.05, seed=1000 + r)
        hits += rep.ci_low <= ref.estimate <= rep.ci_high
    freq = hits / 200
    dt = time.perf_counter() - t0
    ok = 0.90 <= freq <= 0.99 and dt < 1800
    assert report("9", ok, f"coverage {freq:.3f} of reference {ref.estimate:.6f} "
                           f"(+- {ref.standard_error:.1e}), {dt:.0f}s")


def test_criterion_10_control_variates(report):
    mcd = mc_fixed(preset("mcd", T=28 / 365), UI, 12, 1_000_000, seed=10, control_variates=True)
    r_mcd = mcd.level_variances[0] / mcd.uncontrolled_variances[0]
    sox = mc_fixed(preset("sox", T=28 / 365), UI, 12, 1_000_000, seed=11, control_variates=True)
    r_sox = sox.level_variances[0] / sox.uncontrolled_variances[0]
    ok = r_mcd <= 1.0 and r_mcd <= 0.5 and r_sox <= 1.0 and r_sox <= 0.15
    assert report("10", ok, f"variance ratio MCD {r_mcd:.3f} (<= 0.5), SOX {r_sox:.3f} (<= 0.15)")


def test_criterion_11_stable_sampler(report):
    x = sample_stable_increment(StableTriplet(1 / math.pi, 1 / math.pi, 1.0), 1.0, RandomStream(12), 1_000_000)
    ks = stats.kstest(x, "cauchy").statistic
    t = StableTriplet(0.7, 0.3, 1.4, -(0.3 - 0.7) / (1 - 1.4))
    a = sample_stable_increment(t, 0.1, RandomStream(13), 50_000) / 0.1 ** (1 / 1.4)
    b = sample_stable_increment(t, 1.0, RandomStream(14), 50_000)
    p = stats.ks_2samp(a, b).pvalue
    assert report("11", ks < 0.002 and p > 0.001, f"Cauchy KS {ks:.5f} (< 0.002), self-similarity p={p:.3f}")


def test_criterion_12_determinism(report):
    m = preset("usdjpy_v2", T=90 / 365)
    est = [mc_fixed(m, BARRIER, 10, 200_000, seed=12, chunk_size=8192, workers=w).estimate for w in (1, 4, 8)]
    assert report("12", est[0] == est[1] == est[2], f"estimates for 1/4/8 workers: {est}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v", "-s"]))
