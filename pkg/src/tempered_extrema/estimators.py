"""MC and MLMC estimators on top of the tempered stick-breaking sampler.

Every sample contributes the 4-vector ``(zeta * Y, Y, Y_+, Y_-)`` where
``Y = exp(log_weight)`` is the tempering weight and ``Y_+`` / ``Y_-`` are the
one-sided exponential martingales used as control variates.  Samples are
drawn in fixed-size chunks; chunk ``j`` of level ``k`` uses the substream
``seed -> k -> j`` and the per-chunk moments are merged in chunk order, so
results do not depend on the number of worker threads.
"""

from __future__ import annotations

import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np
from scipy.special import ndtri

from .model import TemperedStableModel
from .payoffs import PayoffClass, PayoffSpec, evaluate, payoff_class
from .rng import RandomStream
from .sb_core import couple_levels, sample_chi_n
from .special_fn import c_const

__all__ = [
    "BiasPolicy",
    "RunningMoments",
    "EstimateReport",
    "MLMCPlan",
    "clt_ci",
    "rate_for_class",
    "choose_levels",
    "extrapolate_levels",
    "control_variate_weights",
    "controlled_variance",
    "mc_fixed",
    "mc_estimate",
    "mlmc_fixed",
    "mlmc_plan",
    "mlmc_estimate",
    "level_statistics",
    "pilot_size",
    "DEFAULT_CHUNK",
]

DEFAULT_CHUNK = 1 << 15
DEFAULT_MARGIN = 0.1


class BiasPolicy(str, Enum):
    CLT_RATE = "clt_rate"
    BIAS_EXTRAPOLATION = "bias_extrapolation"


# --------------------------------------------------------------------------
# moments


class RunningMoments:
    """Count, mean vector and scatter matrix of a stream of d-vectors.

    Merging follows the pairwise update of Chan, Golub and LeVeque.
    """

    __slots__ = ("count", "mean", "scatter")

    def __init__(self, dim: int = 4):
        self.count = 0
        self.mean = np.zeros(dim)
        self.scatter = np.zeros((dim, dim))

    @classmethod
    def from_array(cls, x: np.ndarray) -> "RunningMoments":
        x = np.atleast_2d(np.asarray(x, dtype=float))
        rm = cls(x.shape[1])
        if x.shape[0] == 0:
            return rm
        rm.count = x.shape[0]
        rm.mean = x.mean(axis=0)
        d = x - rm.mean
        rm.scatter = d.T @ d
        return rm

    def copy(self) -> "RunningMoments":
        out = RunningMoments(len(self.mean))
        out.count = self.count
        out.mean = self.mean.copy()
        out.scatter = self.scatter.copy()
        return out

    def merge(self, other: "RunningMoments") -> "RunningMoments":
        """Moments of the concatenation (returns a new object)."""
        if other.count == 0:
            return self.copy()
        if self.count == 0:
            return other.copy()
        n = self.count + other.count
        delta = other.mean - self.mean
        out = RunningMoments(len(self.mean))
        out.count = n
        out.mean = self.mean + delta * (other.count / n)
        out.scatter = self.scatter + other.scatter + np.outer(delta, delta) * (self.count * other.count / n)
        return out

    def update(self, x: np.ndarray) -> "RunningMoments":
        return self.merge(RunningMoments.from_array(x))

    @property
    def cov(self) -> np.ndarray:
        if self.count < 2:
            return np.zeros_like(self.scatter)
        return self.scatter / (self.count - 1)

    def variance(self, i: int = 0) -> float:
        return max(float(self.cov[i, i]), 0.0)


def _merge_all(parts) -> RunningMoments:
    total = None
    for p in parts:
        total = p if total is None else total.merge(p)
    return total


# --------------------------------------------------------------------------
# CI, rates and level selection


def _z(level: float) -> float:
    if not 0.0 < level < 1.0:
        raise ValueError("confidence level must lie in (0, 1)")
    return float(ndtri(0.5 * (1.0 + level)))


def clt_ci(estimate: float, variance_of_estimator: float, level: float = 0.95) -> tuple[float, float]:
    """Normal-approximation interval ``estimate +- z sqrt(variance)``."""
    if variance_of_estimator < 0:
        raise ValueError("variance must be non-negative")
    half = _z(level) * math.sqrt(variance_of_estimator)
    return estimate - half, estimate + half


def rate_for_class(cls: str, model: TemperedStableModel, eta_g: float | None = None) -> float:
    """Geometric bias rate ``eta_g`` of the strong error for a payoff class."""
    if eta_g is not None:
        if eta_g <= 1.0:
            raise ValueError("eta_g must exceed 1")
        return float(eta_g)
    d = model.derived
    if cls == PayoffClass.LIPSCHITZ:
        return d.eta(1.0)
    if cls == PayoffClass.BARRIER_1:
        gamma = 1.0  # tempered stable laws have bounded densities
        return 2.0 ** (gamma / (gamma + d.alpha_star))
    if cls == PayoffClass.BARRIER_2:
        return math.exp(1.0 / math.e)
    raise ValueError(f"payoff class {cls!r} has no known rate; pass eta_g explicitly")


def extrapolate_levels(level_means: dict[int, float], epsilon: float, n_max: int = 200) -> int:
    """Smallest ``n`` whose geometrically extrapolated bias is at most ``epsilon / sqrt 2``.

    ``level_means`` maps ``k >= 2`` to the pilot mean of ``D_k``.  The fit is
    ``log |mean D_k| = a + b k``; the bias after level ``n`` is the tail
    ``sum_{k > n} e^{a + b k}``.
    """
    ks = np.array(sorted(k for k, v in level_means.items() if v != 0.0), dtype=float)
    if len(ks) < 2:
        raise ValueError("need at least two non-zero pilot level means")
    y = np.log([abs(level_means[int(k)]) for k in ks])
    slope, intercept = np.polyfit(ks, y, 1)
    if slope >= 0:
        raise ValueError("pilot level means do not decay; cannot extrapolate the bias")
    q = math.exp(slope)
    target = epsilon / math.sqrt(2.0)
    for n in range(1, n_max + 1):
        tail = math.exp(intercept + slope * (n + 1)) / (1.0 - q)
        if tail <= target:
            return n
    raise ValueError("extrapolated bias does not reach the target within n_max levels")


def choose_levels(
    policy: BiasPolicy | str,
    epsilon: float,
    payoff_cls: str,
    model: TemperedStableModel,
    *,
    margin: float = DEFAULT_MARGIN,
    eta_g: float | None = None,
    level_means: dict[int, float] | None = None,
) -> int:
    """Number of levels ``n(epsilon)``.

    ``CLT_RATE`` returns ``ceil(c0 log(1/epsilon))`` with
    ``c0 = (1 + margin) / log eta_g``; ``BIAS_EXTRAPOLATION`` needs the pilot
    ``level_means`` and calls :func:`extrapolate_levels`.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    policy = BiasPolicy(policy)
    if policy is BiasPolicy.CLT_RATE:
        eta = rate_for_class(payoff_cls, model, eta_g)
        c0 = (1.0 + margin) / math.log(eta)
        return max(1, math.ceil(c0 * math.log(1.0 / epsilon)))
    if level_means is None:
        raise ValueError("BIAS_EXTRAPOLATION needs pilot level means")
    return extrapolate_levels(level_means, epsilon)


# --------------------------------------------------------------------------
# control variates


def control_variate_weights(moments: RunningMoments, *, paper_diagonal: bool = False) -> tuple[float, float, float]:
    """Variance-minimising ``(w0, w_plus, w_minus)`` for the three martingale controls.

    Solves ``Sigma w = c`` with ``Sigma`` the covariance of the controls and
    ``c`` their covariance with ``zeta * Y``.  ``paper_diagonal=True`` doubles
    the diagonal of ``Sigma`` instead.  Controls with zero sample variance
    are dropped; a singular remainder yields zero weights and a warning.
    """
    cov = moments.cov
    sigma = cov[1:, 1:].copy()
    c = cov[0, 1:].copy()
    if paper_diagonal:
        sigma[np.diag_indices(3)] *= 2.0
    scale = np.sqrt(np.maximum(np.diag(cov)[1:], 0.0))
    active = scale > 1e-300
    w = np.zeros(3)
    if not np.any(active):
        return (0.0, 0.0, 0.0)
    idx = np.nonzero(active)[0]
    sub = sigma[np.ix_(idx, idx)]
    # solve in correlation scale for conditioning
    d = scale[idx]
    corr = sub / np.outer(d, d)
    if np.linalg.cond(corr) > 1e12:
        warnings.warn("control-variate system is singular; using zero weights", RuntimeWarning, stacklevel=2)
        return (0.0, 0.0, 0.0)
    w[idx] = np.linalg.solve(corr, c[idx] / d) / d
    return tuple(float(v) for v in w)


def controlled_variance(moments: RunningMoments, w) -> float:
    """Sample variance of ``zeta Y - w . (controls - 1)``."""
    a = np.array([1.0, -w[0], -w[1], -w[2]])
    return max(float(a @ moments.cov @ a), 0.0)


def _controlled_mean(moments: RunningMoments, w) -> float:
    m = moments.mean
    return float(m[0] - w[0] * (m[1] - 1.0) - w[1] * (m[2] - 1.0) - w[2] * (m[3] - 1.0))


# --------------------------------------------------------------------------
# sampling kernels


def _control_constants(model: TemperedStableModel) -> tuple[float, float]:
    # compensators for the one-sided tempering (lambda_+, 0) and (0, lambda_-)
    mu_p = model.c_plus * c_const(model.alpha_plus, model.lambda_plus) if model.c_plus > 0 else 0.0
    mu_m = model.c_minus * c_const(model.alpha_minus, model.lambda_minus) if model.c_minus > 0 else 0.0
    return mu_p, mu_m


def _vectors(model, zeta, sample, mu_pm) -> np.ndarray:
    lw = sample.log_weight
    w = np.exp(lw)
    up = np.exp(-model.lambda_plus * sample.y_plus - mu_pm[0] * model.T)
    um = np.exp(model.lambda_minus * sample.y_minus - mu_pm[1] * model.T)
    zw = np.where(zeta == 0.0, 0.0, zeta * w)
    return np.column_stack([zw, w, up, um])


def _level_chunk(model, payoff, level, stream, size, mu_pm) -> RunningMoments:
    if level == 1:
        s = sample_chi_n(model, 1, stream, size)
        zeta = evaluate(payoff, s.x_T, s.sup, s.tau)
        return RunningMoments.from_array(_vectors(model, zeta, s, mu_pm))
    pair = couple_levels(model, level, stream, size)
    a, b = pair.chi_prev, pair.chi_curr
    zeta = evaluate(payoff, b.x_T, b.sup, b.tau) - evaluate(payoff, a.x_T, a.sup, a.tau)
    return RunningMoments.from_array(_vectors(model, zeta, b, mu_pm))


def _mc_chunk(model, payoff, n, stream, size, mu_pm) -> RunningMoments:
    s = sample_chi_n(model, n, stream, size)
    zeta = evaluate(payoff, s.x_T, s.sup, s.tau)
    return RunningMoments.from_array(_vectors(model, zeta, s, mu_pm))


def _chunk_sizes(start: int, total: int, chunk: int):
    # resuming after a partial chunk moves to a fresh substream
    j = -(-start // chunk)
    pos = start
    while pos < total:
        size = min(chunk, total - pos)
        yield j, size
        pos += size
        j += 1


class _Runner:
    """Runs chunk jobs on a thread pool and merges results in chunk order."""

    def __init__(self, workers: int = 1):
        self.workers = max(1, int(workers))

    def run(self, fn, jobs) -> RunningMoments | None:
        jobs = list(jobs)
        if not jobs:
            return None
        if self.workers == 1 or len(jobs) == 1:
            parts = [fn(*job) for job in jobs]
        else:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                parts = list(pool.map(lambda job: fn(*job), jobs))
        return _merge_all(parts)


# --------------------------------------------------------------------------
# reports


@dataclass
class EstimateReport:
    estimate: float
    ci_low: float
    ci_high: float
    epsilon: float | None
    n: int
    samples_per_level: list[int]
    level_variances: list[float]
    level_means: list[float]
    total_cost_units: int
    control_variate_weights: list | tuple | None = None
    seed: int | None = None
    estimator: str = "mc"
    confidence_level: float = 0.95
    estimator_variance: float = 0.0
    uncontrolled_variances: list[float] | None = None
    chunk_size: int = DEFAULT_CHUNK
    policy: str | None = None
    notes: list[str] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def standard_error(self) -> float:
        return math.sqrt(self.estimator_variance)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _report(
    estimator, level_moments, n, epsilon, seed, confidence, cv, paper_diagonal, chunk, policy, cost_of_level
) -> EstimateReport:
    means, variances, raw_vars, weights, samples = [], [], [], [], []
    for rm in level_moments:
        raw_vars.append(rm.variance(0))
        if cv:
            w = control_variate_weights(rm, paper_diagonal=paper_diagonal)
            weights.append(w)
            means.append(_controlled_mean(rm, w))
            variances.append(controlled_variance(rm, w))
        else:
            means.append(float(rm.mean[0]))
            variances.append(rm.variance(0))
        samples.append(int(rm.count))
    est = math.fsum(means)
    var = math.fsum(v / s for v, s in zip(variances, samples))
    lo, hi = clt_ci(est, var, confidence)
    cost = sum(s * cost_of_level(i) for i, s in enumerate(samples))
    notes = []
    if cv:
        notes.append("control-variate weights fitted in-sample on the estimation samples")
    return EstimateReport(
        estimate=est,
        ci_low=lo,
        ci_high=hi,
        epsilon=epsilon,
        n=n,
        samples_per_level=samples,
        level_variances=variances,
        level_means=means,
        total_cost_units=int(cost),
        control_variate_weights=(weights[0] if estimator == "mc" else weights) if cv else None,
        seed=seed,
        estimator=estimator,
        confidence_level=confidence,
        estimator_variance=var,
        uncontrolled_variances=raw_vars,
        chunk_size=chunk,
        policy=policy,
        notes=notes,
    )


def _stream(seed) -> RandomStream:
    return seed if isinstance(seed, RandomStream) else RandomStream(int(seed))


def _seed_of(seed) -> int:
    return seed.master_seed if isinstance(seed, RandomStream) else int(seed)


def pilot_size(epsilon: float) -> int:
    """Pilot sample count ``max(10^4, ceil(1/epsilon))``."""
    return max(10_000, math.ceil(1.0 / epsilon))


# --------------------------------------------------------------------------
# MC


def _mc_run(model, payoff, n, N, stream, chunk, workers, start=0, prior=None):
    mu_pm = _control_constants(model)
    jobs = [(model, payoff, n, stream.derive(j), size, mu_pm) for j, size in _chunk_sizes(start, N, chunk)]
    got = _Runner(workers).run(_mc_chunk, jobs)
    if prior is None:
        return got
    return prior if got is None else prior.merge(got)


def mc_fixed(
    model: TemperedStableModel,
    payoff: PayoffSpec,
    n: int,
    N: int,
    seed=0,
    *,
    confidence: float = 0.95,
    control_variates: bool = False,
    paper_diagonal: bool = False,
    chunk_size: int = DEFAULT_CHUNK,
    workers: int = 1,
) -> EstimateReport:
    """Plain MC estimate of ``E g(chi_n)`` with explicit ``n`` and ``N``."""
    if n < 1 or N < 2:
        raise ValueError("need n >= 1 and N >= 2")
    payoff.validate_horizon(model.T)
    stream = _stream(seed)
    rm = _mc_run(model, payoff, n, N, stream, chunk_size, workers)
    return _report("mc", [rm], n, None, _seed_of(seed), confidence, control_variates,
                   paper_diagonal, chunk_size, None, lambda i: n + 1)


def mc_estimate(
    model: TemperedStableModel,
    payoff: PayoffSpec,
    epsilon: float,
    policy: BiasPolicy | str = BiasPolicy.CLT_RATE,
    seed=0,
    *,
    confidence: float = 0.95,
    control_variates: bool = False,
    paper_diagonal: bool = False,
    chunk_size: int = DEFAULT_CHUNK,
    workers: int = 1,
    margin: float = DEFAULT_MARGIN,
    eta_g: float | None = None,
    n: int | None = None,
    pilot_levels: int = 8,
) -> EstimateReport:
    """epsilon-accurate MC: choose ``n``, run a pilot, then ``N = ceil(2 V / epsilon^2)``."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    payoff.validate_horizon(model.T)
    stream = _stream(seed)
    policy = BiasPolicy(policy)
    if n is None:
        means = None
        if policy is BiasPolicy.BIAS_EXTRAPOLATION:
            means = _pilot_level_means(model, payoff, pilot_levels, epsilon, stream, chunk_size, workers)
        n = choose_levels(policy, epsilon, payoff_class(payoff), model, margin=margin,
                          eta_g=eta_g, level_means=means)
    n0 = pilot_size(epsilon)
    pilot = _mc_run(model, payoff, n, n0, stream, chunk_size, workers)
    if control_variates:
        v_hat = controlled_variance(pilot, control_variate_weights(pilot, paper_diagonal=paper_diagonal))
    else:
        v_hat = pilot.variance(0)
    if v_hat == 0.0:
        warnings.warn("pilot variance is zero; using the pilot size", RuntimeWarning, stacklevel=2)
    N = max(n0, math.ceil(2.0 * v_hat / epsilon**2))
    rm = _mc_run(model, payoff, n, N, stream, chunk_size, workers, start=n0, prior=pilot)
    rep = _report("mc", [rm], n, epsilon, _seed_of(seed), confidence, control_variates,
                  paper_diagonal, chunk_size, policy.value, lambda i: n + 1)
    rep.extra["pilot_variance"] = v_hat
    return rep


# --------------------------------------------------------------------------
# MLMC


def _level_run(model, payoff, level, N, stream, chunk, workers, start=0, prior=None):
    mu_pm = _control_constants(model)
    sub = stream.derive(level)
    jobs = [(model, payoff, level, sub.derive(j), size, mu_pm) for j, size in _chunk_sizes(start, N, chunk)]
    got = _Runner(workers).run(_level_chunk, jobs)
    if prior is None:
        return got
    return prior if got is None else prior.merge(got)


def _pilot_level_means(model, payoff, kmax, epsilon, stream, chunk, workers) -> dict[int, float]:
    n0 = pilot_size(epsilon)
    pilot_stream = stream.derive(0x5EED)
    return {
        k: float(_level_run(model, payoff, k, n0, pilot_stream, chunk, workers).mean[0])
        for k in range(2, kmax + 1)
    }


def level_statistics(
    model: TemperedStableModel,
    payoff: PayoffSpec,
    n_max: int,
    N: int,
    seed=0,
    *,
    chunk_size: int = DEFAULT_CHUNK,
    workers: int = 1,
) -> list[RunningMoments]:
    """Moments of the level quantities ``D_1 = g(chi_1)`` and ``D_k``, ``k = 2..n_max``."""
    stream = _stream(seed)
    return [_level_run(model, payoff, k, N, stream, chunk_size, workers) for k in range(1, n_max + 1)]


def mlmc_allocation(variances, epsilon: float) -> list[int]:
    """``N_k = ceil(2 eps^-2 sqrt(V_k / k) sum_j sqrt(j V_j))``, at least 1."""
    v = np.maximum(np.asarray(variances, dtype=float), 0.0)
    k = np.arange(1, len(v) + 1, dtype=float)
    total = float(np.sum(np.sqrt(k * v)))
    return [max(1, math.ceil(2.0 / epsilon**2 * math.sqrt(vk / kk) * total)) for vk, kk in zip(v, k)]


@dataclass
class MLMCPlan:
    n: int
    pilot_size: int
    pilot_variances: list[float]
    samples_per_level: list[int]
    pilot: list = field(repr=False, default_factory=list)


def mlmc_plan(
    model: TemperedStableModel,
    payoff: PayoffSpec,
    epsilon: float,
    policy: BiasPolicy | str = BiasPolicy.CLT_RATE,
    seed=0,
    *,
    control_variates: bool = False,
    paper_diagonal: bool = False,
    chunk_size: int = DEFAULT_CHUNK,
    workers: int = 1,
    margin: float = DEFAULT_MARGIN,
    eta_g: float | None = None,
    n: int | None = None,
    pilot_levels: int = 8,
) -> MLMCPlan:
    """Levels and sample counts from the pilot run, without the main run.

    Final counts are the allocation of :func:`mlmc_allocation`, floored at
    the pilot size because pilot samples are reused.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    payoff.validate_horizon(model.T)
    stream = _stream(seed)
    policy = BiasPolicy(policy)
    if n is None:
        means = None
        if policy is BiasPolicy.BIAS_EXTRAPOLATION:
            means = _pilot_level_means(model, payoff, pilot_levels, epsilon, stream, chunk_size, workers)
        n = choose_levels(policy, epsilon, payoff_class(payoff), model, margin=margin,
                          eta_g=eta_g, level_means=means)
    n0 = pilot_size(epsilon)
    pilot = [_level_run(model, payoff, k, n0, stream, chunk_size, workers) for k in range(1, n + 1)]
    if control_variates:
        v = [controlled_variance(rm, control_variate_weights(rm, paper_diagonal=paper_diagonal)) for rm in pilot]
    else:
        v = [rm.variance(0) for rm in pilot]
    if all(x == 0.0 for x in v):
        warnings.warn("all pilot level variances are zero", RuntimeWarning, stacklevel=2)
    alloc = mlmc_allocation(v, epsilon)
    return MLMCPlan(n=n, pilot_size=n0, pilot_variances=v,
                    samples_per_level=[max(a, n0) for a in alloc], pilot=pilot)


def mlmc_estimate(
    model: TemperedStableModel,
    payoff: PayoffSpec,
    epsilon: float,
    policy: BiasPolicy | str = BiasPolicy.CLT_RATE,
    seed=0,
    *,
    confidence: float = 0.95,
    control_variates: bool = False,
    paper_diagonal: bool = False,
    chunk_size: int = DEFAULT_CHUNK,
    workers: int = 1,
    margin: float = DEFAULT_MARGIN,
    eta_g: float | None = None,
    n: int | None = None,
    pilot_levels: int = 8,
) -> EstimateReport:
    """epsilon-accurate MLMC estimate with the pilot-based allocation."""
    plan = mlmc_plan(model, payoff, epsilon, policy, seed, control_variates=control_variates,
                     paper_diagonal=paper_diagonal, chunk_size=chunk_size, workers=workers,
                     margin=margin, eta_g=eta_g, n=n, pilot_levels=pilot_levels)
    stream = _stream(seed)
    moments = [
        _level_run(model, payoff, k, Nk, stream, chunk_size, workers, start=plan.pilot_size, prior=rm)
        for k, (Nk, rm) in enumerate(zip(plan.samples_per_level, plan.pilot), start=1)
    ]
    rep = _report("mlmc", moments, plan.n, epsilon, _seed_of(seed), confidence, control_variates,
                  paper_diagonal, chunk_size, BiasPolicy(policy).value, lambda i: i + 2)
    rep.extra["pilot_variances"] = plan.pilot_variances
    rep.extra["planned_samples"] = plan.samples_per_level
    return rep


def mlmc_fixed(
    model: TemperedStableModel,
    payoff: PayoffSpec,
    samples_per_level: list[int],
    seed=0,
    *,
    confidence: float = 0.95,
    control_variates: bool = False,
    paper_diagonal: bool = False,
    chunk_size: int = DEFAULT_CHUNK,
    workers: int = 1,
) -> EstimateReport:
    """MLMC estimate with explicit per-level sample counts ``N_1..N_n``."""
    payoff.validate_horizon(model.T)
    stream = _stream(seed)
    moments = [
        _level_run(model, payoff, k, Nk, stream, chunk_size, workers)
        for k, Nk in enumerate(samples_per_level, start=1)
    ]
    return _report("mlmc", moments, len(samples_per_level), None, _seed_of(seed), confidence,
                   control_variates, paper_diagonal, chunk_size, None, lambda i: i + 2)
