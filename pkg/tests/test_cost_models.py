import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tempered_extrema.cost_models import (
    gamma_big,
    mc_vs_mlmc_threshold,
    phi,
    sb_vs_tsb,
    sbg_boundary_T,
    sbg_constants,
    sbg_vs_tsb,
    stick_exp_gap,
    stick_exp_sum,
    stick_integral,
)
from tempered_extrema.model import TemperedStableModel, preset
from tempered_extrema.quadrature import integrate_adaptive
from tempered_extrema.rng import RandomStream
from tempered_extrema.sb_core import sample_sticks


def symmetric(alpha, rho=1.0, lam=1.0):
    return TemperedStableModel(c_plus=1.0, c_minus=rho, alpha_plus=alpha, alpha_minus=alpha,
                               lambda_plus=lam, lambda_minus=lam)


def test_stick_sum_without_exponent():
    assert stick_exp_sum(0.0, 7) == 7.0


@pytest.mark.parametrize("c", [0.5, 2.0, 10.0])
@pytest.mark.parametrize("n", [1, 5, 20])
def test_stick_sandwich(c, n):
    integral = stick_integral(c)
    gap = n + integral - stick_exp_sum(c, n)
    assert -1e-12 <= gap <= 2.0**-n * integral + 1e-12
    assert stick_exp_gap(c, n) == pytest.approx(gap, rel=1e-9, abs=1e-12)


def test_stick_integral_against_quadrature():
    for c in (0.5, 2.0, 10.0, 60.0):
        q = integrate_adaptive(lambda x: math.expm1(c * x) / x, 0.0, 1.0, 1e-13)
        assert stick_integral(c) == pytest.approx(q, rel=1e-12)


def test_stick_sum_monte_carlo():
    s = sample_sticks(1.0, 3, RandomStream(21), 1_000_000)
    x = np.exp(2.0 * s.lengths).sum(axis=1)
    assert abs(x.mean() - stick_exp_sum(2.0, 3)) < 4 * x.std(ddof=1) / 1000


def test_stick_series_guards():
    with pytest.raises(OverflowError):
        stick_integral(701.0)
    with pytest.raises(ValueError):
        stick_integral(-1.0)


def test_gamma_big_limits():
    m = TemperedStableModel(sigma2=0.01, lambda_plus=1.0)
    assert gamma_big(m) == 0.0
    v1 = preset("usdjpy_v1")
    d = v1.derived
    T = 1e-6
    assert gamma_big(v1, T) / ((d.gamma_plus + d.gamma_minus) * T) == pytest.approx(1.0, rel=1e-4)
    assert math.isinf(gamma_big(preset("mcd")))


def test_gamma_big_report_v1():
    # the integral form is only asymptotically equivalent; both must be finite and positive
    v1 = preset("usdjpy_v1")
    gp, gm = v1.derived.gamma_plus, v1.derived.gamma_minus
    q = integrate_adaptive(lambda x: (math.expm1(gp * x) + math.expm1(gm * x)) / x, 0.0, 1.0)
    g = gamma_big(v1, 1.0)
    assert q > 0 and g > 0
    print(f"Gamma_lambda(1) = {g:.6g}, integral form = {q:.6g}")


def test_phi_values():
    assert phi(1.0) == pytest.approx(math.log2(1.5))
    assert round(phi(1.0), 5) == 0.58496
    assert phi(0.0) == 0.0
    assert phi(0.5) == pytest.approx(math.log2(4 / 3))
    with pytest.raises(ValueError):
        phi(1.5)


@pytest.mark.parametrize("alpha", [0.2, 0.5, 0.58, 0.59, 0.8])
def test_symmetric_sb_region(alpha):
    v = sb_vs_tsb(symmetric(alpha))
    assert v.criterion_values["rho"] == 1.0
    assert (v.preferred == "SB") == (alpha <= 0.58496)


def test_one_sided_prefers_tsb():
    m = TemperedStableModel(c_plus=1.0, alpha_plus=0.3, lambda_plus=2.0)
    v = sb_vs_tsb(m)
    assert v.criterion_values["rho"] == 0.0 and v.preferred == "TSB"


def test_sb_inapplicable_for_infinite_variation():
    v = sb_vs_tsb(symmetric(1.2))
    assert v.preferred == "TSB" and v.criterion_values["sb_applicable"] is False
    assert v.to_dict()["infinite"] == ["gamma_plus", "gamma_minus", "gamma_max"]


@pytest.mark.filterwarnings("ignore:drift b=")
@given(st.floats(0.01, 0.99), st.floats(0.0, 1.0))
def test_sb_verdict_matches_phi_rule(alpha, rho):
    v = sb_vs_tsb(symmetric(alpha, rho))
    assert (v.preferred == "SB") == (alpha <= phi(rho))


def test_sbg_constants_positive():
    for b in (0.2, 0.9, 1.0, 1.4):
        r, c1, c2 = sbg_constants(b)
        assert r > 0 and c1 > 1 and c2 > 0


def test_sbg_prefers_tsb_for_large_beta_star():
    m = preset("usdjpy_v2")
    assert m.derived.beta_star >= 1
    assert sbg_vs_tsb(m, T=1.0, epsilon=1e-4).preferred == "TSB"


def test_sbg_prefers_tsb_for_short_horizon():
    assert sbg_vs_tsb(preset("usdjpy_v1"), T=1e-8).preferred == "TSB"


def test_sbg_boundary_spot_value_and_shape():
    v1 = preset("usdjpy_v1")
    assert 1.5 <= sbg_boundary_T(v1.with_(alpha_plus=0.5, alpha_minus=0.5)) <= 2.5
    alphas = np.arange(0.1, 0.96, 0.05)
    bounds = [sbg_boundary_T(v1.with_(alpha_plus=a, alpha_minus=a)) for a in alphas]
    assert all(np.diff(bounds) > 0)


def test_threshold_values():
    assert f"{mc_vs_mlmc_threshold(1.5):.3g}" == "0.0915"
    assert f"{mc_vs_mlmc_threshold(2.0):.3g}" == "5.06e-05"
    assert mc_vs_mlmc_threshold(preset("usdjpy_v1")) == mc_vs_mlmc_threshold(1.5)
    with pytest.raises(ValueError):
        mc_vs_mlmc_threshold(1.0)


@given(st.floats(math.sqrt(2), 2.0), st.integers(1, 200))
def test_threshold_series_terms_non_negative(eta, k):
    assert k * (2.0**-k - eta ** (-2.0 * k)) >= -1e-15
