"""Exact sampling of stable increments by the Chambers-Mallows-Stuck method.

The Lévy measure is ``c_+ x^{-a-1} dx`` on ``(0, inf)`` and
``c_- |x|^{-a-1} dx`` on ``(-inf, 0)``; ``b`` is the drift relative to the
cutoff ``1_{(-1, 1)}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rng import RandomStream, open_uniform
from .special_fn import EULER_GAMMA, DomainError

__all__ = [
    "StableTriplet",
    "StableMarginal",
    "marginal_from_triplet",
    "zolotarev_a",
    "stable_from_uniforms",
    "angle_needs_redraw",
    "sample_stable_increment",
]

_HALF_PI = 0.5 * math.pi
_ANGLE_GUARD = 1e-12


@dataclass(frozen=True)
class StableTriplet:
    c_plus: float
    c_minus: float
    alpha: float
    b: float = 0.0

    def __post_init__(self):
        if self.c_plus < 0 or self.c_minus < 0:
            raise DomainError("tail intensities must be non-negative")
        if self.c_plus + self.c_minus <= 0:
            raise DomainError("c_plus + c_minus must be positive")
        if not 0.0 < self.alpha < 2.0:
            raise DomainError(f"alpha must lie in (0, 2), got {self.alpha}")


@dataclass(frozen=True)
class StableMarginal:
    """CMS parameters: ``Z_t`` has skew ``theta``, scale ``(varsigma t)^(1/alpha)``
    and location ``mu t``."""

    alpha: float
    theta: float
    mu: float
    varsigma: float

    @property
    def delta(self) -> float:
        """Angle shift ``arctan(theta tan(pi alpha / 2)) / alpha`` (alpha != 1)."""
        a = self.alpha
        return math.atan(self.theta * math.tan(_HALF_PI * a)) / a


def marginal_from_triplet(t: StableTriplet) -> StableMarginal:
    cp, cm, a = t.c_plus, t.c_minus, t.alpha
    total = cp + cm
    theta = (cp - cm) / total
    if a == 1.0:
        mu = t.b + (1.0 - EULER_GAMMA) * (cp - cm)
        varsigma = _HALF_PI * total
    else:
        mu = t.b + (cm - cp) / (1.0 - a)
        varsigma = -total * math.gamma(-a) * math.cos(_HALF_PI * a)
    return StableMarginal(alpha=a, theta=theta, mu=mu, varsigma=varsigma)


def zolotarev_a(a, r, u, theta):
    """Zolotarev's function ``A_{a,r}(u)``; vectorised over ``u``."""
    u = np.asarray(u, dtype=float)
    if np.any(np.abs(u) >= _HALF_PI):
        raise DomainError("u must lie strictly inside (-pi/2, pi/2)")
    lead = (1.0 + (theta * math.tan(_HALF_PI * a)) ** 2) ** (0.5 / a)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        out = (
            lead
            * np.sin(a * (r + u))
            * np.cos(a * r + (a - 1.0) * u) ** (1.0 / a - 1.0)
            / np.cos(u) ** (1.0 / a)
        )
    return out if out.ndim else float(out)


def stable_from_uniforms(m: StableMarginal, t, v_angle, v_exp) -> np.ndarray:
    """CMS transform of open uniforms ``v_angle``, ``v_exp`` over horizons ``t``.

    ``U = pi (v_angle - 1/2)`` and ``E = -log(1 - v_exp)``.  The caller is
    responsible for ``|U| < pi/2 - 1e-12`` (see :func:`angle_needs_redraw`).
    """
    t = np.asarray(t, dtype=float)
    u = math.pi * (np.asarray(v_angle, dtype=float) - 0.5)
    e = -np.log1p(-np.asarray(v_exp, dtype=float))
    a, theta = m.alpha, m.theta
    st = m.varsigma * t
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        if a == 1.0:
            cu = np.cos(u)
            core = (_HALF_PI + theta * u) * np.tan(u)
            if theta != 0.0:
                core = core - theta * np.log(math.pi * e * cu / (st * (math.pi + 2.0 * theta * u)))
            return (2.0 / math.pi) * st * core + m.mu * t
        r = m.delta
        lead = (1.0 + (theta * math.tan(_HALF_PI * a)) ** 2) ** (0.5 / a)
        zol = (
            lead
            * np.sin(a * (r + u))
            * np.cos(a * r + (a - 1.0) * u) ** (1.0 / a - 1.0)
            / np.cos(u) ** (1.0 / a)
        )
        return st ** (1.0 / a) * zol * e ** (1.0 - 1.0 / a) + m.mu * t


def angle_needs_redraw(v_angle) -> np.ndarray:
    """True where ``pi (v - 1/2)`` lies within 1e-12 of ``+-pi/2``."""
    u = math.pi * (np.asarray(v_angle, dtype=float) - 0.5)
    return np.abs(u) >= _HALF_PI - _ANGLE_GUARD


def sample_stable_increment(
    t: StableTriplet, horizon: float, rng: RandomStream, size=None
):
    """Exact draw(s) of ``Z_horizon`` for the triplet ``(0, nu, b)``.

    Consumes two uniforms per variate (angle, then exponential), plus
    replacements for the probability-zero event of an angle at ``+-pi/2``.
    """
    if horizon <= 0:
        raise DomainError("horizon must be positive")
    m = marginal_from_triplet(t)
    shape = () if size is None else size
    v = rng.uniform_open((*np.atleast_1d(shape), 2) if size is not None else (2,))
    va, ve = v[..., 0], v[..., 1]
    bad = angle_needs_redraw(va)
    while np.any(bad):
        va = np.where(bad, rng.uniform_open(np.shape(va)), va)
        bad = angle_needs_redraw(va)
    out = stable_from_uniforms(m, horizon, va, ve)
    return float(out) if size is None else out
