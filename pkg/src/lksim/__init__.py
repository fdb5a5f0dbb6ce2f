"""Simulation and statistical verification of real-valued self-similar
Markov processes built from two killed Levy processes with alternating
sign flips."""

__version__ = "0.1.0"

from .levy_model import (
    LevySpec,
    Regime,
    StableParams,
    classify_regime,
    h_function,
    killed_stable_characteristics,
    conditioned_stable_characteristics,
)
from .samplers import GridSpec, RngStream
from .lk_core import (
    LKCharacteristics,
    LogPath,
    path_value,
    scale_path,
    simulate_log_path,
)
from .timechange import (
    ClockTable,
    HorizonExhaustedError,
    SampledPath,
    TimeChangedPath,
    exp_functional,
    to_mult_invariant,
    to_self_similar,
    zero_hitting_time,
)
from .stable_examples import PRESETS, Flavor, StableModel, build_lk
from .generators import battery, generator_A0, generator_K, mc_generator
from .verify import (
    FlipDecomposition,
    KSResult,
    decompose_flips,
    ks_one_sample,
    ks_two_sample,
)
from .cli import ExperimentConfig, ExperimentReport, run

__all__ = [
    "LevySpec", "Regime", "StableParams", "classify_regime", "h_function",
    "killed_stable_characteristics", "conditioned_stable_characteristics",
    "GridSpec", "RngStream",
    "LKCharacteristics", "LogPath", "path_value", "scale_path",
    "simulate_log_path",
    "ClockTable", "HorizonExhaustedError", "SampledPath", "TimeChangedPath",
    "exp_functional", "to_mult_invariant", "to_self_similar",
    "zero_hitting_time",
    "PRESETS", "Flavor", "StableModel", "build_lk",
    "battery", "generator_A0", "generator_K", "mc_generator",
    "FlipDecomposition", "KSResult", "decompose_flips", "ks_one_sample",
    "ks_two_sample",
    "ExperimentConfig", "ExperimentReport", "run",
]
