"""Generators, lemma checks, sweeps and the exhaustive 1D oracle."""

from .exhaustive import ExhaustiveResult, interval_oracle
from .generate import FAMILIES, ScenarioConfig, generate, random_pair, rng_for
from .invariance import run_invariance_suite
from .lemmas import run_lemma_suite
from .report import LemmaStats, SuiteReport
from .suite import run_full_suite
from .sweeps import c_raster, resolve_threads, run_delta_sweep, run_equality_sweep, run_rotation_sweep

__all__ = [
    "ExhaustiveResult",
    "FAMILIES",
    "LemmaStats",
    "ScenarioConfig",
    "SuiteReport",
    "c_raster",
    "generate",
    "interval_oracle",
    "random_pair",
    "resolve_threads",
    "rng_for",
    "run_delta_sweep",
    "run_equality_sweep",
    "run_full_suite",
    "run_invariance_suite",
    "run_lemma_suite",
    "run_rotation_sweep",
]
