"""Tempered stable model: parameters, drift and compensator constants, indices."""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field, fields

from .special_fn import b_const, c_const

__all__ = [
    "ModelValidationError",
    "DerivedConstants",
    "TemperedStableModel",
    "derive_b",
    "derive_mu",
    "derive_gamma_pm",
    "derive_indices",
    "default_delta",
    "PRESETS",
    "PRESET_VAR_EXPONENT",
    "eta_p",
    "preset",
]

_B_ZERO_TOL = 1e-12
_ALPHA_DEFAULT = 0.5


class ModelValidationError(ValueError):
    """A model parameter violates a standing assumption."""


@dataclass(frozen=True)
class DerivedConstants:
    b: float
    mu_lambda: float
    mu_2lambda: float
    var_exponent: float
    gamma_plus: float
    gamma_minus: float
    beta: float
    beta_star: float
    alpha_idx: float
    alpha_star: float
    delta_choice: float

    def eta(self, p: float) -> float:
        """Geometric rate ``eta_p`` of the L^p error of chi_n."""
        return eta_p(p, self.alpha_idx, self.alpha_star)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class TemperedStableModel:
    """Lévy triplet ``(sigma2, nu_lambda, b_lambda)`` on the horizon ``[0, T]``.

    ``nu_lambda(dx) = c_+ e^{-lambda_+ x} x^{-alpha_+ - 1}`` on ``x > 0`` and
    ``c_- e^{-lambda_- |x|} |x|^{-alpha_- - 1}`` on ``x < 0``.  ``delta``
    is the enlargement used for ``beta_*``; ``None`` selects the default.
    """

    sigma2: float = 0.0
    c_plus: float = 0.0
    c_minus: float = 0.0
    alpha_plus: float = _ALPHA_DEFAULT
    alpha_minus: float = _ALPHA_DEFAULT
    lambda_plus: float = 0.0
    lambda_minus: float = 0.0
    b_lambda: float = 0.0
    T: float = 1.0
    delta: float | None = None
    derived: DerivedConstants = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for f in fields(self):
            if f.name in ("derived", "delta"):
                continue
            v = getattr(self, f.name)
            if not isinstance(v, (int, float)) or math.isnan(v) or math.isinf(v):
                raise ModelValidationError(f"{f.name} must be a finite real, got {v!r}")
            object.__setattr__(self, f.name, float(v))
        if self.sigma2 < 0:
            raise ModelValidationError("sigma2 must be non-negative")
        if self.c_plus < 0 or self.c_minus < 0:
            raise ModelValidationError("c_plus and c_minus must be non-negative")
        if self.lambda_plus < 0 or self.lambda_minus < 0:
            raise ModelValidationError("lambda_plus and lambda_minus must be non-negative")
        if self.lambda_plus == 0 and self.lambda_minus == 0:
            raise ModelValidationError(
                "standing assumption violated: (lambda_plus, lambda_minus) must differ from the origin"
            )
        if self.c_plus + self.c_minus <= 0 and self.sigma2 <= 0:
            raise ModelValidationError("need c_plus + c_minus > 0 or sigma2 > 0")
        if self.T <= 0:
            raise ModelValidationError("horizon T must be positive")
        for side in ("plus", "minus"):
            c = getattr(self, f"c_{side}")
            name = f"alpha_{side}"
            if c == 0:
                object.__setattr__(self, name, _ALPHA_DEFAULT)
            elif not 0.0 < getattr(self, name) < 2.0:
                raise ModelValidationError(f"{name} must lie in (0, 2)")
        object.__setattr__(self, "derived", _derive_all(self))

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    def with_(self, **changes) -> "TemperedStableModel":
        """Copy with some parameters replaced."""
        params = self.to_dict()
        params.update(changes)
        return TemperedStableModel(**params)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name != "derived"}


def derive_b(m: TemperedStableModel) -> float:
    """Drift of the un-tempered process relative to the cutoff on (-1, 1)."""
    b = m.b_lambda
    if m.c_plus > 0:
        b -= m.c_plus * b_const(m.alpha_plus, m.lambda_plus)
    if m.c_minus > 0:
        b += m.c_minus * b_const(m.alpha_minus, m.lambda_minus)
    return b


def derive_mu(m: TemperedStableModel, scale: float = 1.0) -> float:
    """Compensator ``mu_{scale * lambda}`` making the weight a unit-mean martingale."""
    if scale < 0:
        raise ModelValidationError("scale must be non-negative")
    mu = 0.0
    if m.c_plus > 0:
        mu += m.c_plus * c_const(m.alpha_plus, scale * m.lambda_plus)
    if m.c_minus > 0:
        mu += m.c_minus * c_const(m.alpha_minus, scale * m.lambda_minus)
    return mu


def _gamma_side(c: float, a: float, lam: float) -> float:
    if c == 0 or lam == 0:
        return 0.0
    if a >= 1.0:
        return math.inf
    return -c * lam**a * math.gamma(-a)


def derive_gamma_pm(m: TemperedStableModel, scale: float = 1.0) -> tuple[float, float]:
    """Rejection-rate constants ``(gamma_+, gamma_-)`` at tempering ``scale * lambda``.

    Infinite-variation sides return ``math.inf``.
    """
    return (
        _gamma_side(m.c_plus, m.alpha_plus, scale * m.lambda_plus),
        _gamma_side(m.c_minus, m.alpha_minus, scale * m.lambda_minus),
    )


def _beta(m: TemperedStableModel) -> float:
    active = [a for c, a in ((m.c_plus, m.alpha_plus), (m.c_minus, m.alpha_minus)) if c > 0]
    return max(active) if active else 0.0


def default_delta(beta: float) -> float:
    d = min(0.01, (2.0 - beta) / 2.0)
    if beta < 1.0:
        d = min(d, (1.0 - beta) / 2.0)
    return d


def eta_p(p: float, alpha_idx: float, alpha_star: float) -> float:
    if p > alpha_idx:
        return 2.0
    return 1.0 + p / alpha_star


def derive_indices(m: TemperedStableModel, delta: float | None = None, b: float | None = None) -> dict:
    """Indices ``beta``, ``beta_*``, ``alpha``, ``alpha_*`` and the chosen ``delta``."""
    beta = _beta(m)
    if delta is None:
        delta = default_delta(beta)
    if not 0.0 < delta < 2.0 - beta:
        raise ModelValidationError(f"delta must lie in (0, {2.0 - beta}), got {delta}")
    if beta < 1.0 and beta + delta >= 1.0:
        raise ModelValidationError("beta + delta must stay below 1 when beta < 1")
    # I_0^beta is infinite on the beta-attaining side of a stable measure
    beta_star = beta + delta
    if b is None:
        b = derive_b(m)
    finite_variation = all(
        a < 1.0 for c, a in ((m.c_plus, m.alpha_plus), (m.c_minus, m.alpha_minus)) if c > 0
    )
    if m.sigma2 > 0:
        alpha = 2.0
    elif finite_variation and abs(b) > _B_ZERO_TOL:
        alpha = 1.0
    else:
        if finite_variation and b != 0.0:
            warnings.warn(
                f"drift b={b:.3e} is within {_B_ZERO_TOL} of zero; treated as zero for the alpha index",
                RuntimeWarning,
                stacklevel=2,
            )
        alpha = beta
    alpha_star = alpha + (beta_star - beta) * (alpha == beta)
    return {
        "beta": beta,
        "beta_star": beta_star,
        "alpha_idx": alpha,
        "alpha_star": alpha_star,
        "delta_choice": delta,
    }


def _derive_all(m: TemperedStableModel) -> DerivedConstants:
    b = derive_b(m)
    mu1 = derive_mu(m, 1.0)
    mu2 = derive_mu(m, 2.0)
    gp, gm = derive_gamma_pm(m)
    return DerivedConstants(
        b=b,
        mu_lambda=mu1,
        mu_2lambda=mu2,
        var_exponent=mu2 - 2.0 * mu1,
        gamma_plus=gp,
        gamma_minus=gm,
        **derive_indices(m, m.delta, b),
    )


# Rows of the calibrated parameter table; b_lambda = 0 as in the experiments.
PRESETS: dict[str, dict] = {
    "usdjpy_v1": dict(sigma2=0.0007**2, alpha_plus=0.66, alpha_minus=0.66, c_plus=0.1305,
                      c_minus=0.0615, lambda_plus=6.5022, lambda_minus=3.0888),
    "usdjpy_v2": dict(sigma2=0.0001**2, alpha_plus=1.5, alpha_minus=1.5, c_plus=0.0069,
                      c_minus=0.0063, lambda_plus=1.932, lambda_minus=0.4087),
    "mcd": dict(sigma2=0.0, alpha_plus=1.50683, alpha_minus=1.50683, c_plus=0.08,
                c_minus=0.08, lambda_plus=25.4, lambda_minus=25.4),
    "bix": dict(sigma2=0.0, alpha_plus=1.2341, alpha_minus=1.2341, c_plus=0.32,
                c_minus=0.32, lambda_plus=37.42, lambda_minus=47.76),
    "sox": dict(sigma2=0.0, alpha_plus=1.3814, alpha_minus=1.3814, c_plus=0.44,
                c_minus=0.44, lambda_plus=34.73, lambda_minus=34.76),
}

# Printed values of mu_{2 lambda} - 2 mu_lambda for each preset.
PRESET_VAR_EXPONENT = {
    "usdjpy_v1": 0.9658,
    "usdjpy_v2": 0.0395,
    "mcd": 41.47,
    "bix": 96.6,
    "sox": 196.81,
}


def preset(name: str, T: float = 1.0, **overrides) -> TemperedStableModel:
    """Model for a named preset on horizon ``T``."""
    try:
        params = dict(PRESETS[name])
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    params.update(overrides)
    return TemperedStableModel(T=T, **params)
