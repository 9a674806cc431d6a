"""Command-line interface: ``tempered-extrema {estimate,mlmc,convergence,compare,sample,validate}``.

A run is described by a YAML (or JSON) file with ``model``, ``payoff`` and
``run`` sections; flags override the file.  Example::

    model:
      preset: usdjpy_v2
      T: 0.2465753
    payoff:
      kind: up_and_out_call
      strike: 95
      barrier: 102
    run:
      estimator: mc
      n: 15
      N: 100000
      seed: 7
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from . import cost_models
from .estimators import (
    BiasPolicy,
    EstimateReport,
    level_statistics,
    mc_estimate,
    mc_fixed,
    mlmc_estimate,
    mlmc_fixed,
    rate_for_class,
)
from .model import PRESETS, ModelValidationError, TemperedStableModel
from .payoffs import PayoffClass, PayoffSpec, payoff_class
from .rng import RandomStream
from .sb_core import sample_chi_n
from .validation import run_checks

__all__ = ["RunConfig", "ConfigError", "load_config", "main"]

_UI_KINDS = ("ulcer_integrand", "modified_ulcer_integrand")
_RUN_KEYS = ("estimator", "epsilon", "n", "N", "samples_per_level", "confidence_level",
             "control_variates", "seed", "threads", "policy")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    model: TemperedStableModel
    payoff: PayoffSpec
    estimator: str = "mc"
    epsilon: float | None = None
    n: int | None = None
    N: int | None = None
    samples_per_level: list[int] | None = None
    confidence_level: float = 0.95
    control_variates: bool = False
    seed: int = 0
    threads: int | None = None
    policy: str = BiasPolicy.CLT_RATE.value
    out: str | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.estimator not in ("mc", "mlmc"):
            raise ConfigError(f"estimator must be 'mc' or 'mlmc', got {self.estimator!r}")
        if not 0.0 < self.confidence_level < 1.0:
            raise ConfigError("confidence_level must lie in (0, 1)")
        BiasPolicy(self.policy)
        self.payoff.validate_horizon(self.model.T)

    def check_budget(self) -> None:
        """Exactly one of ``epsilon`` and an explicit sample budget."""
        explicit = self.N is not None or self.samples_per_level is not None
        if (self.epsilon is None) == (not explicit):
            raise ConfigError("give exactly one of epsilon or an explicit (n, N) budget")
        if self.epsilon is not None and not self.epsilon > 0:
            raise ConfigError("epsilon must be positive")
        if explicit and self.estimator == "mc" and (self.n is None or self.N is None):
            raise ConfigError("explicit MC needs both n and N")

    @property
    def workers(self) -> int:
        return self.threads or os.cpu_count() or 1

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        data = dict(data or {})
        unknown = set(data) - {"model", "payoff", "run", "output"}
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        mdata = dict(data.get("model") or {})
        name = mdata.pop("preset", None)
        params = {}
        if name is not None:
            if name not in PRESETS:
                raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
            params.update(PRESETS[name])
        params.update(mdata)
        try:
            model = TemperedStableModel(**params)
        except TypeError as exc:
            raise ConfigError(f"bad model section: {exc}") from None
        pdata = dict(data.get("payoff") or {"kind": "lipschitz_sup"})
        try:
            payoff = PayoffSpec(**pdata)
        except TypeError as exc:
            raise ConfigError(f"bad payoff section: {exc}") from None
        run = dict(data.get("run") or {})
        bad = set(run) - set(_RUN_KEYS)
        if bad:
            raise ConfigError(f"unknown run keys: {sorted(bad)}")
        out = (data.get("output") or {}).get("out")
        return cls(model=model, payoff=payoff, out=out, **run)

    def to_dict(self) -> dict:
        model = self.model.to_dict()
        if model.get("delta") is None:
            model.pop("delta", None)
        run = {k: getattr(self, k) for k in _RUN_KEYS if getattr(self, k) is not None}
        out = {"model": model, "payoff": self.payoff.to_dict(), "run": run}
        if self.out:
            out["output"] = {"out": self.out}
        return out

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)


def load_config(path: str | Path) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    if str(path).endswith(".json"):
        return json.loads(text)
    return yaml.safe_load(text) or {}


def _merge_flags(data: dict, args) -> dict:
    data = {k: dict(v) if isinstance(v, dict) else v for k, v in data.items()}
    model = data.setdefault("model", {})
    payoff = data.setdefault("payoff", {})
    run = data.setdefault("run", {})
    if args.preset:
        model["preset"] = args.preset
    if args.T is not None:
        model["T"] = args.T
    if args.payoff:
        if payoff.get("kind") != args.payoff:
            payoff.clear()
        payoff["kind"] = args.payoff
    for flag, key in (("strike", "strike"), ("barrier", "barrier"), ("s0", "s0"), ("tau_cut", "tau_cut")):
        if getattr(args, flag) is not None:
            payoff[key] = getattr(args, flag)
    payoff.setdefault("kind", "lipschitz_sup")
    for key in ("seed", "threads", "epsilon", "n", "N", "policy"):
        if getattr(args, key, None) is not None:
            run[key] = getattr(args, key)
    if getattr(args, "epsilon", None) is not None:
        run.pop("N", None)
        run.pop("samples_per_level", None)
    elif getattr(args, "N", None) is not None:
        run.pop("epsilon", None)
    if getattr(args, "estimator", None):
        run["estimator"] = args.estimator
    if getattr(args, "control_variates", False):
        run["control_variates"] = True
    if getattr(args, "confidence", None) is not None:
        run["confidence_level"] = args.confidence
    if args.out:
        data.setdefault("output", {})["out"] = args.out
    return data


def _config(args, **force) -> RunConfig:
    data = load_config(args.config) if args.config else {}
    cfg = RunConfig.from_dict(_merge_flags(data, args))
    return replace(cfg, **force) if force else cfg


# --------------------------------------------------------------------------
# commands


def run_estimate(cfg: RunConfig) -> EstimateReport:
    cfg.check_budget()
    common = dict(confidence=cfg.confidence_level, control_variates=cfg.control_variates,
                  workers=cfg.workers)
    if cfg.estimator == "mc":
        if cfg.epsilon is None:
            rep = mc_fixed(cfg.model, cfg.payoff, cfg.n, cfg.N, cfg.seed, **common)
        else:
            rep = mc_estimate(cfg.model, cfg.payoff, cfg.epsilon, cfg.policy, cfg.seed, n=cfg.n, **common)
    else:
        if cfg.epsilon is None:
            spl = cfg.samples_per_level or [cfg.N] * (cfg.n or 1)
            rep = mlmc_fixed(cfg.model, cfg.payoff, spl, cfg.seed, **common)
        else:
            rep = mlmc_estimate(cfg.model, cfg.payoff, cfg.epsilon, cfg.policy, cfg.seed, n=cfg.n, **common)
    rep.extra["model"] = cfg.model.to_dict()
    rep.extra["derived"] = cfg.model.derived.to_dict()
    rep.extra["payoff"] = cfg.payoff.to_dict()
    if cfg.payoff.kind in _UI_KINDS:
        rep.extra["ulcer_index"] = ulcer_summary(rep)
    return rep


def ulcer_summary(rep: EstimateReport) -> dict:
    """Ulcer index ``100 sqrt(E g)`` with the CI mapped through the square root."""
    est = max(rep.estimate, 0.0)
    ui = 100.0 * math.sqrt(est)
    se = 50.0 * rep.standard_error / math.sqrt(est) if est > 0 else math.inf
    return {
        "value": ui,
        "ci_low": 100.0 * math.sqrt(max(rep.ci_low, 0.0)),
        "ci_high": 100.0 * math.sqrt(max(rep.ci_high, 0.0)),
        "standard_error": se,
    }


def _rates(cfg: RunConfig) -> tuple[float, float]:
    """Geometric per-level rates ``(bias, variance)`` predicted for the payoff class."""
    cls = payoff_class(cfg.payoff)
    bias = rate_for_class(cls, cfg.model)
    var = cfg.model.derived.eta(2.0) if cls == PayoffClass.LIPSCHITZ else bias
    return bias, var


def convergence_rows(cfg: RunConfig, n_max: int, N: int) -> list[dict]:
    if n_max < 2:
        raise ConfigError("convergence needs n_max >= 2")
    stats = level_statistics(cfg.model, cfg.payoff, n_max, N, cfg.seed, workers=cfg.workers)
    try:
        bias_rate, var_rate = _rates(cfg)
    except ValueError:
        bias_rate = var_rate = math.nan
    m2, v2 = abs(float(stats[1].mean[0])), stats[1].variance(0)
    rows = []
    for k, rm in enumerate(stats, start=1):
        rows.append({
            "level": k,
            "mean": float(rm.mean[0]),
            "abs_mean": abs(float(rm.mean[0])),
            "variance": rm.variance(0),
            "samples": rm.count,
            "cost": rm.count * (k + 1),
            "predicted_abs_mean": m2 * bias_rate ** -(k - 2) if k >= 2 else math.nan,
            "predicted_variance": v2 * var_rate ** -(k - 2) if k >= 2 else math.nan,
        })
    return rows


def _frange(spec: str) -> list[float]:
    lo, hi, step = (float(x) for x in spec.split(":"))
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + i * step, 12) for i in range(n)]


def compare_report(cfg: RunConfig, epsilon: float) -> dict:
    return {
        "sb_vs_tsb": cost_models.sb_vs_tsb(cfg.model).to_dict(),
        "sbg_vs_tsb": cost_models.sbg_vs_tsb(cfg.model, cfg.model.T, epsilon).to_dict(),
        "sbg_boundary_T": _finite(cost_models.sbg_boundary_T(cfg.model, epsilon)),
        "model": cfg.model.to_dict(),
        "derived": cfg.model.derived.to_dict(),
    }


def _finite(x: float):
    return None if math.isinf(x) else x


def sb_grid(alphas, rhos) -> list[dict]:
    """Large-horizon SB/TSB regions for symmetric-index models."""
    rows = []
    for a in alphas:
        for rho in rhos:
            p = cost_models.phi(rho)
            rows.append({"alpha": a, "rho": rho, "phi_rho": p, "preferred": "SB" if a <= p else "TSB"})
    return rows


def sbg_grid(cfg: RunConfig, alphas, epsilon: float) -> list[dict]:
    """SBG/TSB boundary horizon as the common index of the model is swept."""
    rows = []
    for a in alphas:
        m = cfg.model.with_(alpha_plus=a, alpha_minus=a)
        rows.append({"alpha": a, "beta_star": m.derived.beta_star,
                     "var_exponent": m.derived.var_exponent,
                     "boundary_T": _finite(cost_models.sbg_boundary_T(m, epsilon))})
    return rows


def _write_csv(rows: list[dict], path) -> None:
    if not rows:
        return
    fh = open(path, "w", newline="", encoding="utf-8") if path else sys.stdout
    try:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(v) for k, v in r.items()})
    finally:
        if path:
            fh.close()


def _fmt(v):
    if v is None:
        return ""
    return repr(v) if isinstance(v, float) else v


def _emit_json(obj, path) -> None:
    text = json.dumps(obj, indent=2, default=_json_default)
    if path:
        Path(path).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o).__name__}")


def cmd_estimate(args, estimator=None) -> int:
    cfg = _config(args)
    if estimator:
        cfg = replace(cfg, estimator=estimator)
    rep = run_estimate(cfg)
    _emit_json(rep.to_dict(), cfg.out)
    return 0


def cmd_convergence(args) -> int:
    cfg = _config(args)
    N = args.N or 100_000
    rows = convergence_rows(cfg, args.n_max, N)
    _write_csv(rows, cfg.out)
    return 0


def cmd_compare(args) -> int:
    cfg = _config(args)
    _emit_json(compare_report(cfg, args.epsilon or 1e-2), cfg.out)
    if args.sb_grid:
        _write_csv(sb_grid(_frange(args.alpha_grid), _frange(args.rho_grid)), args.sb_grid)
    if args.sbg_grid:
        _write_csv(sbg_grid(cfg, _frange(args.alpha_grid), args.epsilon or 1e-2), args.sbg_grid)
    return 0


def cmd_sample(args) -> int:
    cfg = _config(args)
    s = sample_chi_n(cfg.model, args.n or 10, RandomStream(cfg.seed), size=args.N or 1000)
    cols = ["x_T", "sup", "tau", "y_plus", "y_minus", "log_weight", "level"]
    rows = [dict(zip(cols, [*map(float, r[:-1]), int(r[-1])])) for r in s.rows()]
    _write_csv(rows, cfg.out)
    return 0


def cmd_validate(args) -> int:
    results = run_checks(args.seed or 0)
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<{width}}  {r.detail}")
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 1 if failed else 0


# --------------------------------------------------------------------------
# argument parsing


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML or JSON run description")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--T", type=float, help="horizon in years")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, help="worker cap (default: all cores)")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--payoff", choices=["up_and_out_call", "ulcer_integrand", "modified_ulcer_integrand",
                                        "lipschitz_sup"])
    p.add_argument("--strike", type=float)
    p.add_argument("--barrier", type=float)
    p.add_argument("--s0", type=float)
    p.add_argument("--tau-cut", dest="tau_cut", type=float)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tempered-extrema", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    for name in ("estimate", "mlmc"):
        p = sub.add_parser(name, help="run an MC or MLMC estimate" if name == "estimate" else "estimate with MLMC")
        _common(p)
        p.add_argument("--epsilon", type=float)
        p.add_argument("--n", type=int, help="levels")
        p.add_argument("--N", type=int, help="samples (per level for MLMC)")
        if name == "estimate":
            p.add_argument("--estimator", choices=["mc", "mlmc"])
        p.add_argument("--policy", choices=[b.value for b in BiasPolicy])
        p.add_argument("--control-variates", action="store_true")
        p.add_argument("--confidence", type=float)

    p = sub.add_parser("convergence", help="per-level bias and variance table (CSV)")
    _common(p)
    p.add_argument("--n-max", dest="n_max", type=int, default=12)
    p.add_argument("--N", type=int, help="samples per level (default 1e5)")

    p = sub.add_parser("compare", help="SB / SBG / TSB cost verdicts (JSON) and grids (CSV)")
    _common(p)
    p.add_argument("--epsilon", type=float, help="accuracy for the SBG bound (default 0.01)")
    p.add_argument("--sb-grid", help="write the (alpha, rho) SB region grid to this CSV")
    p.add_argument("--sbg-grid", help="write the SBG boundary over the alpha grid to this CSV")
    p.add_argument("--alpha-grid", default="0.05:0.95:0.05", help="lo:hi:step")
    p.add_argument("--rho-grid", default="0.05:1.0:0.05", help="lo:hi:step")

    p = sub.add_parser("sample", help="dump raw draws of chi_n (CSV)")
    _common(p)
    p.add_argument("--n", type=int, help="stick-breaking level (default 10)")
    p.add_argument("--N", type=int, help="number of draws (default 1000)")

    p = sub.add_parser("validate", help="run the self-check suite")
    p.add_argument("--seed", type=int, default=0)
    return ap


_COMMANDS = {
    "estimate": cmd_estimate,
    "mlmc": lambda a: cmd_estimate(a, estimator="mlmc"),
    "convergence": cmd_convergence,
    "compare": cmd_compare,
    "sample": cmd_sample,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, ModelValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (OverflowError, FloatingPointError) as exc:
        print(f"numeric overflow: {exc}", file=sys.stderr)
        return 3
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
