"""Sparse CEL0-penalized deconvolution toolkit for single-molecule
localization microscopy: physics-based simulation, nonconvex sparse
recovery, and localization scoring."""

__version__ = "0.1.0"

from .grids import Image, ImageGrid, nn_upsample
from .psf import (FWHM_FACTOR, PsfModel, default_radius, gaussian_kernel,
                  sigma_from_fwhm)
from .forward import ForwardOperator
from .noise import NoiseModel, add_gaussian_noise, noise_for_target_snr, snr_db
from .simulate import (Emitter, EmitterList, ScenarioSpec, TrainingPair,
                       TrainingSetConfig, gen_training_set, make_scenario,
                       render_emitters_to_hr, simulate_frame)
from .solver import (Cel0Params, SolveReport, SolverConfig, cel0_penalty,
                     irl1_weights, l0_norm, lipschitz_estimate, objective,
                     solve_cel0, solve_weighted_l1_nonneg)
from .evaluate import (ConfusionCounts, MatchTolerance, MetricsReport,
                       evaluate_stack, extract_emitters, match_emitters,
                       metrics)
from .errors import Cel0locError, CodecError, NumericalError, ValidationError

__all__ = [
    "Image", "ImageGrid", "nn_upsample",
    "FWHM_FACTOR", "PsfModel", "default_radius", "gaussian_kernel",
    "sigma_from_fwhm",
    "ForwardOperator",
    "NoiseModel", "add_gaussian_noise", "noise_for_target_snr", "snr_db",
    "Emitter", "EmitterList", "ScenarioSpec", "TrainingPair",
    "TrainingSetConfig", "gen_training_set", "make_scenario",
    "render_emitters_to_hr", "simulate_frame",
    "Cel0Params", "SolveReport", "SolverConfig", "cel0_penalty",
    "irl1_weights", "l0_norm", "lipschitz_estimate", "objective",
    "solve_cel0", "solve_weighted_l1_nonneg",
    "ConfusionCounts", "MatchTolerance", "MetricsReport",
    "evaluate_stack", "extract_emitters", "match_emitters", "metrics",
    "Cel0locError", "CodecError", "NumericalError", "ValidationError",
]
