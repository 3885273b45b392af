"""Ruin tail exponent for an insurance reserve invested in a regime-switching
geometric Brownian motion, with Monte Carlo checks of the power-law tail."""

from .config import RunConfig, emit_config, parse_config, parse_text
from .errors import ModelError, ParseError, RegimeRuinError, ValidationError
from .extreal import ExtReal
from .kernels import available_backends, backend, use_backend
from .mgf import (
    GammaResult,
    brute_force_upsilon,
    excursion_mgf,
    expected_A_delta,
    find_gamma,
    upsilon,
    wiener_extremum_laplace,
)
from .model import (
    ClaimDist,
    DerivedParams,
    ModelSpec,
    RegimeClass,
    claim_abs_moment,
    classify_regime,
    validate,
)
from .rng import RngStream
from .simulate import (
    SimConfig,
    TailReport,
    estimate_ruin_finite_horizon,
    estimate_tail,
    sample_cycle,
    sample_excursion,
    sample_Y_inf,
    simulate_ruin_certain_recursion,
)
from .tail import fixed_point_check, gamma_cross_check, hill_estimator, log_log_slope

__all__ = [
    "ClaimDist", "DerivedParams", "ExtReal", "GammaResult", "ModelError", "ModelSpec",
    "ParseError", "RegimeClass", "RegimeRuinError", "RngStream", "RunConfig", "SimConfig",
    "TailReport", "ValidationError", "available_backends", "backend", "brute_force_upsilon",
    "claim_abs_moment", "classify_regime", "emit_config", "estimate_ruin_finite_horizon",
    "estimate_tail", "excursion_mgf", "expected_A_delta", "find_gamma", "fixed_point_check",
    "gamma_cross_check", "hill_estimator", "log_log_slope", "parse_config", "parse_text",
    "sample_Y_inf", "sample_cycle", "sample_excursion", "simulate_ruin_certain_recursion",
    "upsilon", "use_backend", "validate", "wiener_extremum_laplace",
]
__version__ = "0.1.0"
