"""Cost formulas for choosing between TSB, SB and SBG sampling, and between MC and MLMC."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .model import TemperedStableModel, default_delta, derive_gamma_pm

__all__ = [
    "ComparisonVerdict",
    "stick_exp_sum",
    "stick_integral",
    "stick_exp_gap",
    "gamma_big",
    "phi",
    "sb_vs_tsb",
    "sbg_constants",
    "sbg_vs_tsb",
    "sbg_boundary_T",
    "mc_vs_mlmc_threshold",
]

_C_MAX = 700.0
_TAIL = 1e-16


@dataclass
class ComparisonVerdict:
    preferred: str
    criterion_values: dict = field(default_factory=dict)
    regime: str = "fixed_eps_T"

    def to_dict(self) -> dict:
        vals = {k: (None if isinstance(v, float) and math.isinf(v) else v) for k, v in self.criterion_values.items()}
        inf_keys = [k for k, v in self.criterion_values.items() if isinstance(v, float) and math.isinf(v)]
        return {"preferred": self.preferred, "criterion_values": vals, "infinite": inf_keys, "regime": self.regime}


def _series(c: float, weight) -> float:
    """``sum_{j >= 1} c^j / j! * weight(j)`` with ``0 <= weight <= 1/j``."""
    if c < 0:
        raise ValueError("c must be non-negative")
    if c > _C_MAX:
        raise OverflowError(f"c={c} exceeds {_C_MAX}; the series overflows double precision")
    if c == 0:
        return 0.0
    terms = []
    log_c = math.log(c)
    j = 1
    while True:
        t = math.exp(j * log_c - math.lgamma(j + 1)) * weight(j)
        terms.append(t)
        # past the peak the ratio of successive c^j/j! terms is below c/(j+1) < 1
        if j > c and t <= _TAIL * math.fsum(terms) * (1.0 - c / (j + 1)):
            break
        j += 1
    return math.fsum(terms)


def stick_integral(c: float) -> float:
    """``int_0^1 (e^{cx} - 1) / x dx = sum_{j>=1} c^j / (j! j)``."""
    return _series(c, lambda j: 1.0 / j)


def stick_exp_sum(c: float, n: int) -> float:
    """``sum_{k=1}^n E[e^{c l_k}]`` for stick-breaking on ``[0, 1]``.

    Uses ``E[l_k^j] = (1 + j)^{-k}``, so the sum equals
    ``n + sum_j c^j / (j! j) (1 - (1 + j)^{-n})``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    return n + _series(c, lambda j: -math.expm1(-n * math.log1p(j)) / j)


def stick_exp_gap(c: float, n: int) -> float:
    """``n + int_0^1 (e^{cx}-1)/x dx - stick_exp_sum(c, n)``, summed directly."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return _series(c, lambda j: math.exp(-n * math.log1p(j)) / j)


def gamma_big(m: TemperedStableModel, T: float | None = None) -> float:
    """``Gamma_lambda(T) = sum_s gamma_s T / (1 + (gamma_s T)^2) e^{gamma_s T}``; ``inf`` if any gamma is."""
    T = m.T if T is None else T
    if T <= 0:
        raise ValueError("T must be positive")
    total = 0.0
    for g in derive_gamma_pm(m):
        if math.isinf(g):
            return math.inf
        x = g * T
        total += x / (1.0 + x * x) * math.exp(x)
    return total


def phi(rho: float) -> float:
    """``log2(1 + rho / (1 + rho))`` on ``[0, 1]``."""
    if math.isnan(rho) or not 0.0 <= rho <= 1.0:
        raise ValueError("rho must lie in [0, 1]")
    return math.log2(1.0 + rho / (1.0 + rho))


def _active_alphas(m: TemperedStableModel):
    return [a for c, a in ((m.c_plus, m.alpha_plus), (m.c_minus, m.alpha_minus)) if c > 0]


def sb_vs_tsb(m: TemperedStableModel) -> ComparisonVerdict:
    """Large-horizon choice: TSB iff ``mu_{2 lambda} - 2 mu_lambda < max(gamma_+, gamma_-)``."""
    d = m.derived
    gmax = max(d.gamma_plus, d.gamma_minus)
    vals = {
        "var_exponent": d.var_exponent,
        "gamma_plus": d.gamma_plus,
        "gamma_minus": d.gamma_minus,
        "gamma_max": gmax,
    }
    if any(a >= 1.0 for a in _active_alphas(m)):
        vals["sb_applicable"] = False
        return ComparisonVerdict("TSB", vals, "large_T")
    vals["sb_applicable"] = True
    alphas = _active_alphas(m)
    if alphas and all(a == alphas[0] for a in alphas):
        # an absent side has c = 0 and contributes 0 to rho
        a = alphas[0]
        sides = [m.c_plus * m.lambda_plus**a, m.c_minus * m.lambda_minus**a]
        rho = min(sides) / max(sides) if max(sides) > 0 else 0.0
        vals["rho"] = rho
        vals["phi_rho"] = phi(rho)
        vals["alpha_le_phi"] = a <= phi(rho)
    preferred = "TSB" if d.var_exponent < gmax else "SB"
    return ComparisonVerdict(preferred, vals, "large_T")


def sbg_constants(beta_star: float) -> tuple[float, float, float]:
    """``(r, C1, C2)`` of the SBG cost bound at index ``beta_*``."""
    b = beta_star
    if b == 1.0:
        r = 2.0
        c2 = (math.e / 2.0) ** 2
    else:
        r = (2.0 / abs(b - 1.0)) * math.log1p(abs(b - 1.0) / b)
        c2 = math.exp(r * b) / (-math.expm1(r * (b - 1.0))) ** 2
    c1 = math.exp(r * b) / (-math.expm1(r * (b / 2.0 - 1.0))) ** 2
    return r, c1, c2


def _sbg_sides(m: TemperedStableModel, T: float, epsilon: float):
    d = m.derived
    bs = d.beta_star
    r, c1, c2 = sbg_constants(bs)
    log_lhs = math.log1p(T) + d.var_exponent * T
    if bs < 1.0:
        rhs = c1 + c2 * T
    elif bs == 1.0:
        rhs = c1 + c2 * T * math.log(1.0 / epsilon) ** 2
    else:
        rhs = c1 + c2 * T * epsilon ** (-2.0 * (bs - 1.0))
    return log_lhs, math.log(rhs), r, c1, c2


def sbg_vs_tsb(m: TemperedStableModel, T: float | None = None, epsilon: float = 1e-2) -> ComparisonVerdict:
    """Fixed-(epsilon, T) choice between TSB and SBG via the cost bounds."""
    T = m.T if T is None else T
    if T <= 0 or epsilon <= 0:
        raise ValueError("T and epsilon must be positive")
    log_lhs, log_rhs, r, c1, c2 = _sbg_sides(m, T, epsilon)
    vals = {"beta_star": m.derived.beta_star, "r": r, "C1": c1, "C2": c2, "log_lhs": log_lhs,
            "log_rhs": log_rhs, "T": T, "epsilon": epsilon}
    return ComparisonVerdict("TSB" if log_lhs < log_rhs else "SBG", vals, "fixed_eps_T")


def sbg_boundary_T(m: TemperedStableModel, epsilon: float = 1e-2, t_max: float = 1e3) -> float:
    """Largest horizon at which TSB still wins against SBG (bisection); ``inf`` if beyond ``t_max``."""
    def wins(T):
        lhs, rhs, *_ = _sbg_sides(m, T, epsilon)
        return lhs < rhs

    if wins(t_max):
        return math.inf
    lo, hi = 0.0, t_max
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if wins(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def mc_vs_mlmc_threshold(eta1: float | TemperedStableModel) -> float:
    """``epsilon*`` below which MLMC beats MC for Lipschitz payoffs.

    Solves ``log(1/eps) = log(eta1) (sum_k sqrt(k (2^-k - eta1^-2k)))^2``.
    Accepts ``eta1`` directly or a model (uses its ``eta_1``).
    """
    if isinstance(eta1, TemperedStableModel):
        eta1 = eta1.derived.eta(1.0)
    if not 1.0 < eta1 <= 2.0:
        raise ValueError("eta1 must lie in (1, 2]")
    terms = []
    k = 1
    while True:
        inner = 2.0**-k - eta1 ** (-2.0 * k)
        t = math.sqrt(k * max(inner, 0.0))
        terms.append(t)
        # terms decay like sqrt(k) 2^{-k/2}
        if k > 10 and t < 1e-12 * math.fsum(terms) * (1.0 - 2.0**-0.5):
            break
        k += 1
    s = math.fsum(terms)
    return math.exp(-math.log(eta1) * s * s)


def default_beta_star(alpha: float) -> float:
    return alpha + default_delta(alpha)
