"""Numerical integration oracles for validating the closed forms.

Two independent strategies are offered: ``"quadpack"`` wraps
:func:`scipy.integrate.quad`, ``"gauss"`` is a self-contained adaptive
Gauss-Legendre bisection.  Both accept a power-singularity hint ``power``
meaning ``f(x) ~ (x - a)^(-power)`` near the left endpoint, which is removed
by the substitution ``x = a + u^(1/(1 - power))``.
"""

from __future__ import annotations

import math
import warnings
from typing import Callable

import numpy as np
from scipy import integrate

__all__ = [
    "QuadratureError",
    "integrate_adaptive",
    "b_oracle",
    "c_oracle",
    "gamma_pm_oracle",
    "upper_gamma_oracle",
    "drift_correction_oracle",
    "levy_khintchine_exponent",
]

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)
_GL_COARSE_NODES, _GL_COARSE_WEIGHTS = np.polynomial.legendre.leggauss(10)


class QuadratureError(ArithmeticError):
    """Raised when the adaptive refinement fails to reach the tolerance."""


def _desingularize(
    f: Callable[[float], float], a: float, b: float, power: float
) -> tuple[Callable[[float], float], float, float]:
    if power == 0.0:
        return f, a, b
    if not 0.0 <= power < 1.0:
        raise ValueError("power must lie in [0, 1)")
    k = 1.0 / (1.0 - power)

    def g(u: float) -> float:
        if u <= 0.0:
            return 0.0 if power > 0 else f(a)
        return f(a + u**k) * k * u ** (k - 1.0)

    upper = math.inf if math.isinf(b) else (b - a) ** (1.0 / k)
    return g, 0.0, upper


def _to_finite(
    f: Callable[[float], float], a: float, b: float
) -> tuple[Callable[[float], float], float, float]:
    if not math.isinf(b):
        return f, a, b

    # x = a + t / (1 - t), t in [0, 1)
    def g(t: float) -> float:
        if t >= 1.0:
            return 0.0
        s = 1.0 - t
        return f(a + t / s) / (s * s)

    return g, 0.0, 1.0


def _gl(f: Callable[[float], float], lo: float, hi: float, nodes, weights) -> float:
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    return half * sum(w * f(mid + half * x) for x, w in zip(nodes, weights))


def _gauss_adaptive(f, a: float, b: float, tol: float, max_depth: int = 60) -> float:
    total = 0.0
    stack = [(a, b, 0)]
    budget = 200_000
    while stack:
        lo, hi, depth = stack.pop()
        fine = _gl(f, lo, hi, _GL_NODES, _GL_WEIGHTS)
        coarse = _gl(f, lo, hi, _GL_COARSE_NODES, _GL_COARSE_WEIGHTS)
        budget -= 1
        if budget <= 0:
            raise QuadratureError("gauss: subdivision budget exhausted")
        err = abs(fine - coarse)
        if err <= tol * max(abs(fine), 1e-300) or err < 1e-300 or (hi - lo) < 1e-15 * max(1.0, abs(lo)):
            total += fine
            continue
        if depth >= max_depth:
            raise QuadratureError("gauss: maximum refinement depth reached")
        mid = 0.5 * (lo + hi)
        stack.append((lo, mid, depth + 1))
        stack.append((mid, hi, depth + 1))
    return total


def integrate_adaptive(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = 1e-12,
    *,
    power: float = 0.0,
    method: str = "quadpack",
    points: tuple[float, ...] = (),
) -> float:
    """Integrate ``f`` over ``(a, b)``; ``b`` may be ``inf``.

    ``points`` splits the range at interior breakpoints (given in the
    original variable), which helps where the integrand has a kink such as
    the indicator at ``x = 1`` in the Lévy compensator.
    """
    if b < a:
        raise ValueError("require a <= b")
    if a == b:
        return 0.0
    cuts = [p for p in sorted(points) if a < p < b]
    if cuts:
        edges = [a, *cuts, b]
        parts = [
            integrate_adaptive(f, lo, hi, tol, power=power if i == 0 else 0.0, method=method)
            for i, (lo, hi) in enumerate(zip(edges[:-1], edges[1:]))
        ]
        return math.fsum(parts)

    g, lo, hi = _desingularize(f, a, b, power)
    if method == "quadpack":
        value, err = integrate.quad(g, lo, hi, epsabs=0.0, epsrel=tol, limit=500)
        if not math.isfinite(value) or err > max(100 * tol * abs(value), 1e-300):
            raise QuadratureError(f"quadpack did not converge (err={err:.3g})")
        return float(value)
    if method == "gauss":
        h, lo, hi = _to_finite(g, lo, hi)
        return _gauss_adaptive(h, lo, hi, tol)
    raise ValueError(f"unknown method {method!r}")


# --------------------------------------------------------------------------
# oracles for the Lévy-measure integrals


def b_oracle(a: float, r: float, method: str = "quadpack", tol: float = 1e-12) -> float:
    """``int_0^1 (e^{-rx} - 1) x^{-a} dx`` by quadrature."""
    return integrate_adaptive(lambda x: math.expm1(-r * x) * x ** (-a), 0.0, 1.0, tol,
                              power=max(a - 1.0, 0.0), method=method)


def _tail_exp(a: float, r: float, method: str, tol: float) -> float:
    # int_1^inf e^{-rx} x^{-a-1} dx
    return integrate_adaptive(lambda x: math.exp(-r * x) * x ** (-a - 1.0), 1.0, math.inf, tol, method=method)


def _exp_m1_p(y: float) -> float:
    # e^{-y} - 1 + y without cancellation for small y
    if abs(y) < 0.1:
        term, total, j = y * y / 2.0, 0.0, 2
        while abs(term) > 1e-18 * abs(total) or total == 0.0:
            total += term
            j += 1
            term *= -y / j
        return total
    return math.expm1(-y) + y


def c_oracle(a: float, r: float, method: str = "quadpack", tol: float = 1e-12) -> float:
    """``int_0^inf (e^{-rx} - 1 + rx 1_{x<1}) x^{-a-1} dx`` by quadrature.

    The slowly decaying piece ``-int_1^inf x^{-a-1} dx = -1/a`` is exact.
    """
    head = integrate_adaptive(lambda x: _exp_m1_p(r * x) * x ** (-a - 1.0), 0.0, 1.0, tol,
                              power=max(a - 1.0, 0.0), method=method)
    return head + _tail_exp(a, r, method, tol) - 1.0 / a


def gamma_pm_oracle(c: float, a: float, lam: float, method: str = "quadpack", tol: float = 1e-12) -> float:
    """``c int_0^inf (1 - e^{-lam x}) x^{-a-1} dx`` for ``a < 1``."""
    head = integrate_adaptive(lambda x: -math.expm1(-lam * x) * x ** (-a - 1.0), 0.0, 1.0, tol,
                              power=a, method=method)
    return c * (head + 1.0 / a - _tail_exp(a, lam, method, tol))


def upper_gamma_oracle(a: float, r: float, method: str = "quadpack", tol: float = 1e-12) -> float:
    """``int_r^inf e^{-x} x^{a-1} dx``."""
    return integrate_adaptive(lambda x: math.exp(-x) * x ** (a - 1.0), r, math.inf, tol, method=method)


def drift_correction_oracle(c: float, a: float, lam: float, tol: float = 1e-12) -> float:
    """``c int_0^1 x (e^{-lam x} - 1) x^{-a-1} dx``, one side of ``b_lambda - b``."""
    return c * b_oracle(a, lam, tol=tol)


def _side_exponent(u: float, c: float, a: float, lam: float) -> complex:
    # int_0^inf (e^{iux} - 1 - iux 1_{x<1}) c e^{-lam x} x^{-a-1} dx
    if c == 0:
        return 0j
    dens = lambda x: c * math.exp(-lam * x) * x ** (-a - 1.0)  # noqa: E731
    k = 1.0 / (1.0 - max(a - 1.0, 0.0))

    def head_re(v):
        x = v**k
        return (math.cos(u * x) - 1.0) * dens(x) * k * v ** (k - 1.0) if v > 0 else 0.0

    def head_im(v):
        x = v**k
        return (math.sin(u * x) - u * x) * dens(x) * k * v ** (k - 1.0) if v > 0 else 0.0

    with warnings.catch_warnings():
        # the oscillatory pieces hit roundoff near 1e-12; 1e-9 is ample for an oracle
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return _side_parts(u, dens, head_re, head_im)


def _side_parts(u, dens, head_re, head_im) -> complex:
    re = integrate.quad(head_re, 0.0, 1.0, epsabs=1e-14, epsrel=1e-12, limit=500)[0]
    im = integrate.quad(head_im, 0.0, 1.0, epsabs=1e-14, epsrel=1e-12, limit=500)[0]
    if u != 0:
        re += integrate.quad(dens, 1.0, math.inf, weight="cos", wvar=u, epsabs=1e-14, limlst=200)[0]
        im += integrate.quad(dens, 1.0, math.inf, weight="sin", wvar=u, epsabs=1e-14, limlst=200)[0]
    else:
        re += integrate.quad(dens, 1.0, math.inf, epsabs=1e-14, epsrel=1e-12)[0]
    re -= integrate.quad(dens, 1.0, math.inf, epsabs=1e-14, epsrel=1e-12)[0]
    return complex(re, im)


def levy_khintchine_exponent(model, u: float) -> complex:
    """``psi(u)`` with ``E_lambda e^{iuX_t} = e^{t psi(u)}`` under the tempered triplet."""
    psi = complex(-0.5 * model.sigma2 * u * u, u * model.b_lambda)
    psi += _side_exponent(u, model.c_plus, model.alpha_plus, model.lambda_plus)
    neg = _side_exponent(-u, model.c_minus, model.alpha_minus, model.lambda_minus)
    return psi + neg
