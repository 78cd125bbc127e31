"""STIRAP-driven discrete-time quantum walk on a quantum-dot array."""
from .propagator import HBAR, ConvergenceError, TimeGrid, evolve, expm_chebyshev, expm_eig_oracle
from .pulses import (CoinPhases, CoinSchedule, GaussianPulse, StirapParams,
                     TranslationSchedule, make_coin_schedule, make_translation_schedule)
from .stirap import CoinSpec, evolution_2ph, evolution_3ph, extract_coin, ideal_coin
from .walk import ArrayState, Distribution, StirapOperators, compare, run_walk

__version__ = "0.1.0"

__all__ = [
    "HBAR", "ConvergenceError", "TimeGrid", "evolve", "expm_chebyshev", "expm_eig_oracle",
    "CoinPhases", "CoinSchedule", "GaussianPulse", "StirapParams", "TranslationSchedule",
    "make_coin_schedule", "make_translation_schedule", "CoinSpec", "evolution_2ph",
    "evolution_3ph", "extract_coin", "ideal_coin", "ArrayState", "Distribution",
    "StirapOperators", "compare", "run_walk",
]
