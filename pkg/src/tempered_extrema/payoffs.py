"""Payoffs ``g(chi)`` of the extrema triple under the exponential model ``S = S0 e^X``."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "PAYOFF_KINDS",
    "PayoffClass",
    "PayoffSpec",
    "evaluate",
    "ulcer_index",
    "payoff_class",
]

PAYOFF_KINDS = (
    "up_and_out_call",
    "ulcer_integrand",
    "modified_ulcer_integrand",
    "lipschitz_sup",
    "custom",
)


class PayoffClass:
    """Regularity classes with distinct strong-error rates."""

    LIPSCHITZ = "lipschitz"
    BARRIER_1 = "barrier1"
    BARRIER_2 = "barrier2"
    UNKNOWN = "unknown"


_CLASS_OF_KIND = {
    "up_and_out_call": PayoffClass.BARRIER_1,
    "ulcer_integrand": PayoffClass.LIPSCHITZ,
    "modified_ulcer_integrand": PayoffClass.BARRIER_2,
    "lipschitz_sup": PayoffClass.LIPSCHITZ,
    "custom": PayoffClass.UNKNOWN,
}


@dataclass(frozen=True)
class PayoffSpec:
    """Payoff description.

    ``tau_cut`` is the cutoff ``s`` of the modified ulcer integrand.
    ``func`` is the pure callable ``(x_T, sup, tau) -> value`` of a custom
    payoff, evaluated on arrays.
    """

    kind: str
    s0: float = 100.0
    strike: float | None = None
    barrier: float | None = None
    tau_cut: float | None = None
    func: Callable | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in PAYOFF_KINDS:
            raise ValueError(f"unknown payoff kind {self.kind!r}")
        if self.s0 <= 0:
            raise ValueError("s0 must be positive")
        if self.kind == "up_and_out_call":
            if self.strike is None or self.barrier is None:
                raise ValueError("up_and_out_call needs strike and barrier")
            if self.strike <= 0 or self.barrier <= 0:
                raise ValueError("strike and barrier must be positive")
        if self.kind == "modified_ulcer_integrand":
            if self.tau_cut is None or self.tau_cut <= 0:
                raise ValueError("modified_ulcer_integrand needs a positive tau_cut")
        if self.kind == "custom" and self.func is None:
            raise ValueError("custom payoff needs func")

    def validate_horizon(self, T: float) -> None:
        if self.kind == "modified_ulcer_integrand" and not self.tau_cut < T:
            raise ValueError(f"tau_cut must lie in (0, T={T})")

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "s0": self.s0}
        for k in ("strike", "barrier", "tau_cut"):
            if getattr(self, k) is not None:
                out[k] = getattr(self, k)
        return out


def payoff_class(spec: PayoffSpec) -> str:
    return _CLASS_OF_KIND[spec.kind]


def evaluate(spec: PayoffSpec, x_T, sup, tau):
    """``g(chi)`` evaluated elementwise."""
    x_T = np.asarray(x_T, dtype=float)
    sup = np.asarray(sup, dtype=float)
    tau = np.asarray(tau, dtype=float)
    kind = spec.kind
    if kind == "up_and_out_call":
        # huge jumps overflow exp to inf; those paths are knocked out anyway
        with np.errstate(over="ignore", invalid="ignore"):
            alive = spec.s0 * np.exp(sup) <= spec.barrier
            out = np.where(alive, np.maximum(spec.s0 * np.exp(x_T) - spec.strike, 0.0), 0.0)
    elif kind == "ulcer_integrand":
        out = np.expm1(x_T - sup) ** 2
    elif kind == "modified_ulcer_integrand":
        out = np.where(tau < spec.tau_cut, np.expm1(x_T - sup) ** 2, 0.0)
    elif kind == "lipschitz_sup":
        out = sup.copy()
    else:
        out = np.asarray(spec.func(x_T, sup, tau), dtype=float)
    return out if out.ndim else float(out)


def ulcer_index(expectation: float) -> float:
    """``100 * sqrt(E g)`` for the (modified) ulcer integrand."""
    if math.isnan(expectation) or expectation < 0:
        raise ValueError("ulcer index needs a non-negative expectation")
    return 100.0 * math.sqrt(expectation)
