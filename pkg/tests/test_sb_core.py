import math

import numpy as np
import pytest

from tempered_extrema.model import TemperedStableModel, preset
from tempered_extrema.payoffs import PayoffSpec, evaluate
from tempered_extrema.quadrature import levy_khintchine_exponent
from tempered_extrema.rng import RandomStream
from tempered_extrema.sb_core import (
    assemble_chi,
    couple_levels,
    draw_increments,
    sample_chi_n,
    sample_sticks,
    sticks_from_uniforms,
)


def within(x, target, k=4.0):
    x = np.asarray(x)
    return abs(x.mean() - target) <= k * x.std(ddof=1) / math.sqrt(len(x))


def test_injected_single_stick():
    s = sticks_from_uniforms(2.0, np.array([0.25]))
    assert s.lengths[0] == pytest.approx(1.5)
    assert s.remainder == pytest.approx(0.5)


def test_stick_means():
    T, n = 1.7, 6
    s = sample_sticks(T, n, RandomStream(1), 1_000_000)
    for k in range(n):
        assert within(s.lengths[:, k], T * 2.0 ** -(k + 1))
    assert within(s.remainder, T * 2.0**-n)
    np.testing.assert_allclose(s.lengths.sum(axis=1) + s.remainder, T, rtol=1e-14)


def test_assemble_by_hand():
    # one stick of length 0.6 with increment -0.2, remainder 0.4 with +0.5
    x, sup, tau = assemble_chi(np.array([[0.6, 0.4]]), np.array([[-0.2, 0.5]]))
    assert (x[0], sup[0], tau[0]) == pytest.approx((0.3, 0.5, 0.4))


def test_weight_is_unit_mean():
    m = preset("usdjpy_v1", T=30 / 365)
    s = sample_chi_n(m, 8, RandomStream(3), 1_000_000)
    assert within(s.weight, 1.0)


def test_brownian_supremum_mean():
    sigma, T = 0.3, 2.0
    m = TemperedStableModel(sigma2=sigma**2, lambda_plus=1.0, T=T)
    s = sample_chi_n(m, 25, RandomStream(4), 400_000)
    assert np.all(s.log_weight == 0.0)
    assert within(s.sup, sigma * math.sqrt(T) * math.sqrt(2 / math.pi))
    # argmax time of Brownian motion is arcsine distributed with mean T/2
    assert within(s.tau, T / 2)


@pytest.mark.parametrize("name", ["usdjpy_v1", "usdjpy_v2", "mcd"])
def test_weighted_characteristic_function(name):
    m = preset(name, T=30 / 365)
    s = sample_chi_n(m, 5, RandomStream(5), 400_000)
    for u in (2.0, 15.0):
        z = np.exp(1j * u * s.x_T) * s.weight
        expected = np.exp(m.T * levy_khintchine_exponent(m, u))
        assert within(z.real, expected.real)
        assert within(z.imag, expected.imag)


def test_supremum_bounds():
    m = preset("bix", T=0.1)
    s = sample_chi_n(m, 7, RandomStream(6), 20_000)
    assert np.all(s.sup >= np.maximum(s.x_T, 0.0))
    assert np.all((s.tau >= 0) & (s.tau <= m.T * (1 + 1e-12)))
    assert np.allclose(s.log_weight, -m.lambda_plus * s.y_plus + m.lambda_minus * s.y_minus
                       - m.derived.mu_lambda * m.T)


@pytest.mark.parametrize("name", ["usdjpy_v1", "sox"])
def test_coupling_shares_terminal_value_and_weight(name):
    m = preset(name, T=0.1)
    pair = couple_levels(m, 6, RandomStream(7), 50_000)
    assert np.array_equal(pair.chi_curr.x_T, pair.chi_prev.x_T)
    assert np.array_equal(pair.chi_curr.log_weight, pair.chi_prev.log_weight)
    assert (pair.chi_prev.level, pair.chi_curr.level) == (5, 6)
    for c in (pair.chi_prev, pair.chi_curr):
        assert np.all(c.sup >= np.maximum(c.x_T, 0.0))


def test_coupled_marginal_matches_direct_level():
    # chi_{k-1} from the coupling has the law of a direct chi_{k-1}
    m = preset("usdjpy_v2", T=30 / 365)
    prev = couple_levels(m, 4, RandomStream(8), 300_000).chi_prev
    direct = sample_chi_n(m, 3, RandomStream(9), 300_000)
    a, b = prev.sup * prev.weight, direct.sup * direct.weight
    se = math.sqrt(a.var() / len(a) + b.var() / len(b))
    assert abs(a.mean() - b.mean()) < 4 * se


def test_level_variances_decay():
    m = preset("usdjpy_v2", T=30 / 365)
    g = PayoffSpec("lipschitz_sup")
    ks = np.arange(2, 11)
    logv = []
    for k in ks:
        p = couple_levels(m, int(k), RandomStream(10, int(k)), 20_000)
        d = (evaluate(g, p.chi_curr.x_T, p.chi_curr.sup, p.chi_curr.tau)
             - evaluate(g, p.chi_prev.x_T, p.chi_prev.sup, p.chi_prev.tau)) * p.chi_curr.weight
        logv.append(math.log(np.mean(d**2)))
    assert np.polyfit(ks, logv, 1)[0] <= -math.log(1.25)


def test_batch_prefix_is_stable():
    m = preset("mcd", T=0.05)
    one = sample_chi_n(m, 4, RandomStream(11))
    many = sample_chi_n(m, 4, RandomStream(11), 5)
    assert one.x_T == many.x_T[0] and one.sup == many.sup[0]
    again = sample_chi_n(m, 4, RandomStream(11), 5)
    assert np.array_equal(many.rows(), again.rows())


def test_one_sided_component_is_zero():
    m = TemperedStableModel(c_plus=0.5, alpha_plus=0.7, lambda_plus=2.0, T=0.5)
    inc = draw_increments(m, 3, RandomStream(12), 100)
    assert np.all(inc.xi_minus == 0.0)
    # the positive-jump part is a subordinator shifted by the compensator drift -c/(1-alpha)
    assert np.all(inc.xi_plus + 0.5 / 0.3 * inc.lengths > 0.0)


def test_rows_layout():
    s = sample_chi_n(preset("bix", T=0.1), 3, RandomStream(13), 4)
    r = s.rows()
    assert r.shape == (4, 7)
    assert np.all(r[:, 6] == 3)
    np.testing.assert_array_equal(r[:, 5], s.log_weight)


def test_level_guard():
    with pytest.raises(ValueError):
        couple_levels(preset("bix"), 1, RandomStream(0))
    with pytest.raises(ValueError):
        sample_chi_n(preset("bix"), 0, RandomStream(0))
