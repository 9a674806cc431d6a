import math

import mpmath
import numpy as np
import pytest
from scipy import stats

from tempered_extrema.rng import RandomStream
from tempered_extrema.special_fn import DomainError
from tempered_extrema.stable import (
    StableTriplet,
    angle_needs_redraw,
    marginal_from_triplet,
    sample_stable_increment,
    stable_from_uniforms,
    zolotarev_a,
)


def test_marginal_symmetric_cauchy_branch():
    m = marginal_from_triplet(StableTriplet(1.0, 1.0, 1.0, 0.0))
    assert (m.theta, m.mu) == (0.0, 0.0)
    assert m.varsigma == pytest.approx(math.pi)


def test_marginal_one_sided():
    m = marginal_from_triplet(StableTriplet(1.0, 0.0, 0.5, 0.0))
    assert m.theta == 1.0
    assert m.mu == pytest.approx(-2.0)
    # -Gamma(-1/2) cos(pi/4) with Gamma(-1/2) = -2 sqrt(pi)
    assert m.varsigma == pytest.approx(2 * math.sqrt(math.pi) * math.cos(math.pi / 4), rel=1e-14)
    assert m.varsigma == pytest.approx(2.5066, abs=1e-4)


@pytest.mark.parametrize("alpha", [0.4, 0.9, 1.3, 1.8])
def test_marginal_symmetric_drift_passthrough(alpha):
    m = marginal_from_triplet(StableTriplet(0.7, 0.7, alpha, 5.0))
    assert m.mu == pytest.approx(5.0, rel=1e-15)
    assert m.theta == 0.0


def _zolotarev_mp(a, r, u, theta):
    mp = mpmath.mp
    with mp.workdps(40):
        a, r, u, theta = map(mpmath.mpf, (a, r, u, theta))
        lead = (1 + (theta * mpmath.tan(mpmath.pi * a / 2)) ** 2) ** (1 / (2 * a))
        val = lead * mpmath.sin(a * (r + u)) * mpmath.cos(a * r + (a - 1) * u) ** ((1 - a) / a)
        return float(val / mpmath.cos(u) ** (1 / a))


@pytest.mark.parametrize("a,theta,u", [(0.5, 1.0, 0.0), (1.5, -0.3, 0.7), (0.8, 0.4, -1.2), (1.9, 0.9, 1.4)])
def test_zolotarev_against_high_precision(a, theta, u):
    r = math.atan(theta * math.tan(math.pi * a / 2)) / a
    got = zolotarev_a(a, r, u, theta)
    assert got == pytest.approx(_zolotarev_mp(a, r, u, theta), rel=1e-12)
    if (a, u) == (0.5, 0.0):
        assert got > 0


def test_zolotarev_vanishes_at_origin_when_symmetric():
    assert zolotarev_a(1.3, 0.0, 0.0, 0.0) == 0.0


def test_zolotarev_rejects_boundary_angle():
    with pytest.raises(DomainError):
        zolotarev_a(1.3, 0.0, math.pi / 2, 0.0)


def test_angle_redraw_flag():
    assert angle_needs_redraw(np.array([1e-17, 0.5, 1 - 1e-16])).tolist() == [True, False, True]


def test_cms_cauchy_closed_form():
    # alpha = 1, theta = 0: varsigma t tan(U) + mu t
    m = marginal_from_triplet(StableTriplet(1 / math.pi, 1 / math.pi, 1.0))
    v = np.array([0.1, 0.4, 0.77])
    got = stable_from_uniforms(m, 1.0, v, np.full(3, 0.3))
    np.testing.assert_allclose(got, np.tan(math.pi * (v - 0.5)), rtol=1e-13)


def test_cauchy_ks():
    x = sample_stable_increment(StableTriplet(1 / math.pi, 1 / math.pi, 1.0), 1.0, RandomStream(42), 200_000)
    assert stats.kstest(x, "cauchy").pvalue > 1e-3


def test_self_similarity():
    t = StableTriplet(0.7, 0.3, 1.4, -(0.3 - 0.7) / (1 - 1.4))
    assert marginal_from_triplet(t).mu == pytest.approx(0.0, abs=1e-15)
    a = sample_stable_increment(t, 0.1, RandomStream(1), 50_000) / 0.1 ** (1 / 1.4)
    b = sample_stable_increment(t, 1.0, RandomStream(2), 50_000)
    assert stats.ks_2samp(a, b).pvalue > 1e-3


def test_one_sided_laplace_transform():
    # c_- = 0, alpha = 1/2, b such that mu = 0: E e^{-sZ_t} = exp(t c Gamma(-a) s^a)
    c, a, t = 1.0, 0.5, 0.3
    trip = StableTriplet(c, 0.0, a, c / (1 - a))
    z = sample_stable_increment(trip, t, RandomStream(3), 400_000)
    assert z.min() > 0
    for s in (0.5, 2.0, 8.0):
        e = np.exp(-s * z)
        expected = math.exp(t * c * math.gamma(-a) * s**a)
        assert abs(e.mean() - expected) < 4 * e.std() / math.sqrt(len(e))


@pytest.mark.parametrize("alpha,cp,cm", [(0.7, 1.0, 0.4), (1.6, 0.3, 0.9)])
def test_agrees_with_scipy_levy_stable(alpha, cp, cm):
    t = StableTriplet(cp, cm, alpha, 0.2)
    m = marginal_from_triplet(t)
    ours = sample_stable_increment(t, 1.0, RandomStream(5), 20_000)
    ref = stats.levy_stable.rvs(alpha, m.theta, loc=m.mu, scale=m.varsigma ** (1 / alpha),
                                size=20_000, random_state=np.random.default_rng(9))
    assert stats.ks_2samp(ours, ref).pvalue > 1e-3


def test_scalar_and_vector_shapes():
    t = StableTriplet(1.0, 1.0, 1.2)
    assert isinstance(sample_stable_increment(t, 1.0, RandomStream(0)), float)
    assert sample_stable_increment(t, 1.0, RandomStream(0), 7).shape == (7,)
    with pytest.raises(DomainError):
        sample_stable_increment(t, 0.0, RandomStream(0))
