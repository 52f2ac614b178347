"""Exact input-output Gaussian channels for quadratic open bosonic systems."""

from .channels import (
    GaussianChannel,
    ModeProfile,
    apply_channel,
    cp_min_eigenvalue,
    detector_channel,
    detector_rate,
    pulse_channel,
    pulse_rate,
    restrict,
    stationary_spectrum,
)
from .linalg import T_INF, TOL, expm, noise_integral, psd_check, solve_sylvester
from .measures import log_negativity, mean_occupation, measure_report, purity, squeezing_db
from .states import (
    CovState,
    from_quadrature,
    squeezed_state,
    thermal_state,
    to_quadrature,
    vacuum_state,
)
from .system import DriftModel, SystemSpec, build_drift, evolve_state, thermal_input, validate_physicality

__version__ = "0.1.0"

__all__ = [
    "apply_channel",
    "build_drift",
    "CovState",
    "cp_min_eigenvalue",
    "detector_channel",
    "detector_rate",
    "DriftModel",
    "evolve_state",
    "expm",
    "from_quadrature",
    "GaussianChannel",
    "log_negativity",
    "mean_occupation",
    "measure_report",
    "ModeProfile",
    "noise_integral",
    "psd_check",
    "pulse_channel",
    "pulse_rate",
    "purity",
    "restrict",
    "solve_sylvester",
    "squeezed_state",
    "squeezing_db",
    "stationary_spectrum",
    "SystemSpec",
    "T_INF",
    "thermal_input",
    "thermal_state",
    "to_quadrature",
    "TOL",
    "vacuum_state",
    "validate_physicality",
]
