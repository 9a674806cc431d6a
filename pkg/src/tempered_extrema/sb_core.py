"""Tempered stick-breaking sampler.

Draws of ``chi_n = (X_T, sup X, argmax time)`` are generated under the
un-tempered law, where every stick increment splits into a spectrally
positive stable part, a spectrally negative stable part and a Gaussian part
with drift ``b``.  The Radon-Nikodym weight ``exp(log_weight)`` turns
expectations into expectations under the tempered law.

Stream layout: a batch of ``size`` draws at level ``n`` consumes one block
of ``size * (n + 1) * 6`` uniforms, sample-major.  Row ``k`` (0-based) of a
sample holds ``(U_k, angle+, exp+, angle-, exp-, normal)`` for stick
``k + 1``; the last row belongs to the remainder and its first slot is
unused.  Every slot is consumed whether or not the component is present, so
alignment does not depend on the parameters.  Angles falling within 1e-12 of
``+-pi/2`` are replaced afterwards with fresh draws in array order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .model import TemperedStableModel
from .rng import RandomStream
from .stable import StableTriplet, angle_needs_redraw, marginal_from_triplet, stable_from_uniforms

__all__ = [
    "SLOTS",
    "StickSequence",
    "Increments",
    "ExtremaSample",
    "LevelPair",
    "sample_sticks",
    "sticks_from_uniforms",
    "draw_increments",
    "assemble_chi",
    "sample_chi_n",
    "couple_levels",
]

SLOTS = 6


@dataclass
class StickSequence:
    """Stick lengths ``l_1..l_n`` (last axis) and the remainder ``L_n``."""

    lengths: np.ndarray
    remainder: np.ndarray
    T: float


@dataclass
class Increments:
    """Per-interval increments; column ``n`` of each array is the remainder."""

    lengths: np.ndarray
    xi_plus: np.ndarray
    xi_minus: np.ndarray
    gauss: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.xi_plus + self.xi_minus + self.gauss

    @property
    def n(self) -> int:
        return self.lengths.shape[-1] - 1


@dataclass
class ExtremaSample:
    """Draws of ``chi_n`` with the one-sided jump totals and the log-weight.

    Fields are arrays of equal length (floats for a single draw).
    """

    x_T: np.ndarray
    sup: np.ndarray
    tau: np.ndarray
    y_plus: np.ndarray
    y_minus: np.ndarray
    log_weight: np.ndarray
    level: int

    @property
    def weight(self) -> np.ndarray:
        return np.exp(self.log_weight)

    def __len__(self) -> int:
        return int(np.size(self.x_T))

    def item(self, i: int) -> "ExtremaSample":
        return ExtremaSample(
            float(self.x_T[i]), float(self.sup[i]), float(self.tau[i]),
            float(self.y_plus[i]), float(self.y_minus[i]), float(self.log_weight[i]),
            self.level,
        )

    def rows(self):
        """Columns in the order used by the CSV dump."""
        return np.column_stack(
            [self.x_T, self.sup, self.tau, self.y_plus, self.y_minus, self.log_weight,
             np.full(len(self), self.level, dtype=float)]
        )


@dataclass
class LevelPair:
    """Coupled draws of ``chi_{k-1}`` and ``chi_k`` sharing one weight."""

    chi_prev: ExtremaSample
    chi_curr: ExtremaSample
    k: int

    @property
    def log_weight(self) -> np.ndarray:
        return self.chi_curr.log_weight


def sticks_from_uniforms(T: float, u: np.ndarray) -> StickSequence:
    """Stick-breaking on ``[0, T]`` from open uniforms ``u[..., k]``."""
    u = np.asarray(u, dtype=float)
    big = T * np.cumprod(u, axis=-1)  # L_1..L_n
    prev = np.concatenate([np.full(u.shape[:-1] + (1,), float(T)), big[..., :-1]], axis=-1)
    return StickSequence(lengths=prev - big, remainder=big[..., -1], T=float(T))


def sample_sticks(T: float, n: int, rng: RandomStream, size: int | None = None) -> StickSequence:
    """Stick-breaking lengths ``l_1..l_n`` and remainder ``L_n`` on ``[0, T]``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    shape = (n,) if size is None else (size, n)
    return sticks_from_uniforms(T, rng.uniform_open(shape))


def _uniform_block(rng: RandomStream, size: int, n: int) -> np.ndarray:
    v = rng.uniform_open((size, n + 1, SLOTS))
    for slot in (1, 3):
        bad = angle_needs_redraw(v[:, :, slot])
        while np.any(bad):
            idx = np.nonzero(bad)
            v[idx[0], idx[1], slot] = rng.uniform_open(len(idx[0]))
            bad = angle_needs_redraw(v[:, :, slot])
    return v


def draw_increments(m: TemperedStableModel, n: int, rng: RandomStream, size: int) -> Increments:
    """Sticks and un-tempered increments for ``size`` samples at level ``n``."""
    if n < 1:
        raise ValueError("n must be at least 1 (level 0 has no remainder split)")
    v = _uniform_block(rng, size, n)
    sticks = sticks_from_uniforms(m.T, v[:, :n, 0])
    lengths = np.concatenate([sticks.lengths, sticks.remainder[:, None]], axis=1)

    def one_sided(c_plus, c_minus, alpha, ia, ie):
        if c_plus + c_minus == 0:
            return np.zeros_like(lengths)
        marg = marginal_from_triplet(StableTriplet(c_plus, c_minus, alpha, 0.0))
        return stable_from_uniforms(marg, lengths, v[:, :, ia], v[:, :, ie])

    xi_plus = one_sided(m.c_plus, 0.0, m.alpha_plus, 1, 2)
    xi_minus = one_sided(0.0, m.c_minus, m.alpha_minus, 3, 4)
    gauss = lengths * m.derived.b
    if m.sigma2 > 0:
        gauss = gauss + m.sigma * np.sqrt(lengths) * ndtri(v[:, :, 5])
    return Increments(lengths=lengths, xi_plus=xi_plus, xi_minus=xi_minus, gauss=gauss)


def assemble_chi(lengths: np.ndarray, increments: np.ndarray):
    """``chi_n`` from interval lengths and increments (remainder in the last column).

    Contributions are added remainder first, then from the shortest stick
    to the longest, so that merging the last stick into the remainder leaves
    ``x_T`` bit-identical.
    """
    lengths = np.atleast_2d(lengths)
    inc = np.atleast_2d(increments)
    x = np.zeros(inc.shape[0])
    sup = np.zeros(inc.shape[0])
    tau = np.zeros(inc.shape[0])
    for j in range(inc.shape[1] - 1, -1, -1):
        col = inc[:, j]
        pos = col > 0
        x = x + col
        sup = sup + np.where(pos, col, 0.0)
        tau = tau + np.where(pos, lengths[:, j], 0.0)
    return x, sup, tau


def _ordered_sum(a: np.ndarray) -> np.ndarray:
    out = np.zeros(a.shape[0])
    for j in range(a.shape[1] - 1, -1, -1):
        out = out + a[:, j]
    return out


def _weights(m: TemperedStableModel, inc: Increments):
    y_plus = _ordered_sum(inc.xi_plus)
    y_minus = _ordered_sum(inc.xi_minus)
    logw = -m.lambda_plus * y_plus + m.lambda_minus * y_minus - m.derived.mu_lambda * m.T
    return y_plus, y_minus, logw


def _merge_last(a: np.ndarray) -> np.ndarray:
    # absorb stick n into the remainder interval
    return np.concatenate([a[:, :-2], (a[:, -1] + a[:, -2])[:, None]], axis=1)


def _squeeze(s: ExtremaSample, size) -> ExtremaSample:
    return s.item(0) if size is None else s


def sample_chi_n(
    m: TemperedStableModel, n: int, rng: RandomStream, size: int | None = None
) -> ExtremaSample:
    """Draws of ``chi_n`` under the un-tempered law with their weights."""
    inc = draw_increments(m, n, rng, 1 if size is None else size)
    x, sup, tau = assemble_chi(inc.lengths, inc.total)
    yp, ym, logw = _weights(m, inc)
    return _squeeze(ExtremaSample(x, sup, tau, yp, ym, logw, n), size)


def couple_levels(
    m: TemperedStableModel, k: int, rng: RandomStream, size: int | None = None
) -> LevelPair:
    """Coupled ``(chi_{k-1}, chi_k)``; level ``k - 1`` reuses the level-``k`` draws."""
    if k < 2:
        raise ValueError("coupled levels need k >= 2")
    inc = draw_increments(m, k, rng, 1 if size is None else size)
    yp, ym, logw = _weights(m, inc)
    total = inc.total
    x1, s1, t1 = assemble_chi(inc.lengths, total)
    x0, s0, t0 = assemble_chi(_merge_last(inc.lengths), _merge_last(total))
    curr = ExtremaSample(x1, s1, t1, yp, ym, logw, k)
    prev = ExtremaSample(x0, s0, t0, yp, ym, logw, k - 1)
    return LevelPair(_squeeze(prev, size), _squeeze(curr, size), k)
