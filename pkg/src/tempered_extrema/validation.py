"""Self-check suite behind ``tempered-extrema validate``.

Each check returns ``(passed, detail)``.  Statistical checks use 4-sigma or
p > 0.001 thresholds so that a fresh build passes for any seed with high
probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import stats

from . import cost_models, model as model_mod, special_fn
from .quadrature import b_oracle, c_oracle, integrate_adaptive
from .rng import RandomStream
from .sb_core import sample_chi_n
from .stable import StableTriplet, sample_stable_increment

__all__ = ["CheckResult", "CHECKS", "run_checks"]


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


def check_b_const(seed: int):
    worst = 0.0
    for a in (0.3, 0.66, 1.0, 1.5, 1.9):
        for r in (0.1, 1.0, 7.0):
            q = b_oracle(a, r)
            worst = max(worst, _rel(special_fn.b_const(a, r), q))
    return worst < 1e-8, f"max rel err {worst:.2e}"


def check_c_const(seed: int):
    worst = 0.0
    for a in (0.3, 0.66, 1.0, 1.5, 1.9):
        for r in (0.1, 1.0, 7.0):
            q = c_oracle(a, r)
            worst = max(worst, _rel(special_fn.c_const(a, r), q))
    return worst < 1e-8, f"max rel err {worst:.2e}"


def check_gamma_recurrence(seed: int):
    worst = 0.0
    for a in (-1.7, -1.2, -0.5, 0.3, 0.9, 1.4):
        for r in (0.05, 1.0, 12.0):
            lhs = a * special_fn.upper_inc_gamma(a, r)
            rhs = special_fn.upper_inc_gamma(a + 1.0, r) - r**a * math.exp(-r)
            worst = max(worst, _rel(lhs, rhs))
    return worst < 1e-10, f"max rel err {worst:.2e}"


def check_e1(seed: int):
    q = integrate_adaptive(lambda x: math.exp(-x) / x, 0.5, math.inf, 1e-13)
    err = _rel(special_fn.exp_integral_e1(0.5), q)
    return err < 1e-12, f"rel err {err:.2e}"


def check_cauchy_ks(seed: int):
    n = 100_000
    x = sample_stable_increment(StableTriplet(1 / math.pi, 1 / math.pi, 1.0), 1.0, RandomStream(seed, 11), n)
    ks = stats.kstest(x, "cauchy")
    return ks.pvalue > 1e-3, f"KS={ks.statistic:.4f} p={ks.pvalue:.3g}"


def check_self_similarity(seed: int):
    n = 50_000
    # b chosen so that the CMS location vanishes
    t = StableTriplet(0.7, 0.3, 1.4, -(0.3 - 0.7) / (1 - 1.4))
    a = sample_stable_increment(t, 0.1, RandomStream(seed, 12), n) / 0.1 ** (1 / 1.4)
    b = sample_stable_increment(t, 1.0, RandomStream(seed, 13), n)
    p = stats.ks_2samp(a, b).pvalue
    return p > 1e-3, f"p={p:.3g}"


def check_weight_martingale(seed: int):
    out = []
    ok = True
    for name in ("usdjpy_v1", "usdjpy_v2"):
        m = model_mod.preset(name, T=30 / 365)
        w = sample_chi_n(m, 8, RandomStream(seed, 14), 200_000).weight
        z = (w.mean() - 1.0) / (w.std(ddof=1) / math.sqrt(len(w)))
        ok &= abs(z) < 4.0
        out.append(f"{name} z={z:+.2f}")
    return ok, ", ".join(out)


def check_asymp_cost(seed: int):
    ok = True
    for c in (0.5, 2.0, 10.0):
        integral = cost_models.stick_integral(c)
        for n in (1, 5, 20):
            gap = cost_models.stick_exp_gap(c, n)
            direct = n + integral - cost_models.stick_exp_sum(c, n)
            ok &= -1e-12 <= gap <= 2.0**-n * integral + 1e-12
            ok &= abs(gap - direct) <= 1e-9 * max(1.0, integral)
    return ok, "sandwich for c in {0.5, 2, 10}, n in {1, 5, 20}"


def check_threshold(seed: int):
    a = cost_models.mc_vs_mlmc_threshold(1.5)
    b = cost_models.mc_vs_mlmc_threshold(2.0)
    ok = f"{a:.3g}" == "0.0915" and f"{b:.3g}" == "5.06e-05"
    return ok, f"eps*(1.5)={a:.4g}, eps*(2)={b:.4g}"


def check_table_constants(seed: int):
    worst = 0.0
    for name, printed in model_mod.PRESET_VAR_EXPONENT.items():
        worst = max(worst, _rel(model_mod.preset(name).derived.var_exponent, printed))
    return worst < 5e-3, f"max rel dev {worst:.2e}"


def check_phi(seed: int):
    v = cost_models.phi(1.0)
    return round(v, 5) == 0.58496, f"phi(1)={v:.6f}"


CHECKS: dict[str, Callable[[int], tuple[bool, str]]] = {
    "b_const_quadrature": check_b_const,
    "c_const_quadrature": check_c_const,
    "upper_gamma_recurrence": check_gamma_recurrence,
    "e1_quadrature": check_e1,
    "stable_cauchy_ks": check_cauchy_ks,
    "stable_self_similarity": check_self_similarity,
    "weight_martingale": check_weight_martingale,
    "asymp_cost_sandwich": check_asymp_cost,
    "mc_mlmc_threshold": check_threshold,
    "table_constants": check_table_constants,
    "phi_anchor": check_phi,
}


def run_checks(seed: int = 0, names=None) -> list[CheckResult]:
    results = []
    for name, fn in CHECKS.items():
        if names and name not in names:
            continue
        try:
            passed, detail = fn(seed)
        except Exception as exc:  # a crashing check is a failing check
            passed, detail = False, f"error: {exc!r}"
        results.append(CheckResult(name, bool(passed), detail))
    return results
