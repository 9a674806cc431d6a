"""Monte Carlo for the terminal value, supremum and its time of a tempered
stable Lévy process, by stick-breaking under the un-tempered law and
exponential reweighting."""

from .model import TemperedStableModel, preset, PRESETS
from .payoffs import PayoffSpec, evaluate, ulcer_index
from .rng import RandomStream, derive_substream
from .sb_core import ExtremaSample, LevelPair, couple_levels, sample_chi_n, sample_sticks
from .estimators import (
    BiasPolicy,
    EstimateReport,
    RunningMoments,
    choose_levels,
    clt_ci,
    control_variate_weights,
    mc_estimate,
    mc_fixed,
    mlmc_estimate,
    mlmc_plan,
)

__version__ = "0.1.0"

__all__ = [
    "TemperedStableModel", "preset", "PRESETS",
    "PayoffSpec", "evaluate", "ulcer_index",
    "RandomStream", "derive_substream",
    "ExtremaSample", "LevelPair", "couple_levels", "sample_chi_n", "sample_sticks",
    "BiasPolicy", "EstimateReport", "RunningMoments", "choose_levels", "clt_ci",
    "control_variate_weights", "mc_estimate", "mc_fixed", "mlmc_estimate", "mlmc_plan",
]
