"""Incomplete gamma functions, the exponential integral and the constants
B_{a,r}, C_{a,r} used to turn the tempered drift into the stable one and to
compute the compensator of the importance weight.

All functions take and return Python floats.  NaN arguments raise
:class:`DomainError` instead of propagating.
"""

from __future__ import annotations

import math

__all__ = [
    "DomainError",
    "EULER_GAMMA",
    "lower_inc_gamma",
    "upper_inc_gamma",
    "exp_integral_e1",
    "b_const",
    "c_const",
]

EULER_GAMMA = 0.57721566490153286060651209008240243

_EPS = 1e-16
_FPMIN = 1e-300
_MAX_ITER = 10_000


class DomainError(ValueError):
    """Argument outside the domain of a special function."""


def _check_finite(**kwargs: float) -> None:
    for name, value in kwargs.items():
        if math.isnan(value):
            raise DomainError(f"{name} is NaN")


def _gamma_series(a: float, r: float) -> float:
    # gamma(a, r) = r^a e^{-r} sum_n r^n / (a (a+1) ... (a+n)), a > 0
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= r / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    else:
        raise ArithmeticError("incomplete gamma series did not converge")
    return total * math.exp(-r + a * math.log(r))


def _gamma_cf(a: float, r: float) -> float:
    # Gamma(a, r) by the modified Lentz continued fraction; valid for r > a - 1
    b = r + 1.0 - a
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    else:
        raise ArithmeticError("incomplete gamma continued fraction did not converge")
    return math.exp(-r + a * math.log(r)) * h


def lower_inc_gamma(a: float, r: float) -> float:
    """Lower incomplete gamma ``gamma(a, r) = int_0^r e^{-x} x^{a-1} dx``.

    Uses the power series for ``r < a + 1`` and ``Gamma(a) - Gamma(a, r)``
    with the continued fraction otherwise.  ``r = inf`` returns ``Gamma(a)``.
    """
    _check_finite(a=a, r=r)
    if a <= 0:
        raise DomainError(f"lower_inc_gamma requires a > 0, got a={a}")
    if r < 0:
        raise DomainError(f"lower_inc_gamma requires r >= 0, got r={r}")
    if r == 0:
        return 0.0
    if math.isinf(r):
        return math.gamma(a)
    if r < a + 1.0:
        return _gamma_series(a, r)
    return math.gamma(a) - _gamma_cf(a, r)


def upper_inc_gamma(a: float, r: float) -> float:
    """Upper incomplete gamma ``Gamma(a, r) = int_r^inf e^{-x} x^{a-1} dx``.

    Negative non-integer ``a`` is reached by the downward recurrence
    ``Gamma(a, r) = (Gamma(a + 1, r) - r^a e^{-r}) / a`` starting from the
    fractional part in (0, 1).
    """
    _check_finite(a=a, r=r)
    if a <= 0 and a == math.floor(a):
        raise DomainError(f"upper_inc_gamma undefined at non-positive integer a={a}")
    if r < 0 or (r == 0 and a <= 0):
        raise DomainError(f"upper_inc_gamma requires r > 0 for a={a}, got r={r}")
    if math.isinf(r):
        return 0.0
    if a > 0:
        if r == 0:
            return math.gamma(a)
        if r < a + 1.0:
            return math.gamma(a) - _gamma_series(a, r)
        return _gamma_cf(a, r)

    steps = math.ceil(-a)
    base = a + steps  # in (0, 1)
    value = upper_inc_gamma(base, r)
    log_r = math.log(r)
    for j in range(1, steps + 1):
        s = base - j
        value = (value - math.exp(s * log_r - r)) / s
    return value


def exp_integral_e1(r: float) -> float:
    """Exponential integral ``E1(r) = int_r^inf e^{-x} / x dx`` for ``r > 0``."""
    _check_finite(r=r)
    if r <= 0:
        raise DomainError(f"exp_integral_e1 requires r > 0, got r={r}")
    if math.isinf(r):
        return 0.0
    if r <= 1.0:
        # -gamma - ln r - sum_{n>=1} (-r)^n / (n n!)
        total = 0.0
        fact_term = 1.0
        for n in range(1, _MAX_ITER):
            fact_term *= -r / n
            term = fact_term / n
            total += term
            if abs(term) < _EPS * max(abs(total), 1e-300):
                break
        return -EULER_GAMMA - math.log(r) - total

    b = r + 1.0
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -float(i * i)
        b += 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    else:
        raise ArithmeticError("E1 continued fraction did not converge")
    return h * math.exp(-r)


def _check_index(a: float, r: float) -> None:
    _check_finite(a=a, r=r)
    if not 0.0 < a < 2.0:
        raise DomainError(f"index a must lie in (0, 2), got {a}")
    if r < 0:
        raise DomainError(f"rate r must be non-negative, got {r}")


def b_const(a: float, r: float) -> float:
    """``B_{a,r} = int_0^1 (e^{-rx} - 1) x^{-a} dx`` in closed form."""
    _check_index(a, r)
    if r == 0:
        return 0.0
    if a == 1.0:
        return -EULER_GAMMA - math.log(r) - exp_integral_e1(r)
    return (math.expm1(-r) + r ** (a - 1.0) * lower_inc_gamma(2.0 - a, r)) / (1.0 - a)


def _upper_gamma_minus_one(r: float) -> float:
    # Gamma(-1, r) = e^{-r}/r - E1(r)
    return math.exp(-r) / r - exp_integral_e1(r)


def c_const(a: float, r: float, *, general: bool = False) -> float:
    """``C_{a,r} = int_0^inf (e^{-rx} - 1 + rx 1_{(0,1)}(x)) x^{-a-1} dx``.

    For ``a != 1`` this equals ``r^a Gamma(-a) + r / (1 - a)`` on all of
    (0, 2): the compensated integral over (0, inf) is ``r^a Gamma(-a)`` and
    the indicator contributes ``r / (1 - a)``.  Near ``a = 1`` the two terms
    cancel, so there the incomplete-gamma expression is used; ``general=True``
    forces it everywhere.
    """
    _check_index(a, r)
    if r == 0:
        return 0.0
    if a == 1.0 and not general:
        return r * (math.log(r) + EULER_GAMMA - 1.0)
    if not general and (abs(a - 1.0) > 0.05 or r < 1e-150):
        return r ** a * math.gamma(-a) + r / (1.0 - a)
    tail = _upper_gamma_minus_one(r) if a == 1.0 else upper_inc_gamma(-a, r)
    return -(math.exp(-r) + r * (1.0 + b_const(a, r))) / a + r ** a * tail
