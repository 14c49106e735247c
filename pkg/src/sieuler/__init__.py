"""Splitting semi-implicit Euler simulation of 2D stochastic Euler flow on the torus."""

from .spectral import (
    GridBuffer,
    SpectralField,
    VelocityField,
    biot_savart,
    evaluate_on_grid,
    field_from_modes,
    galerkin_project,
    grid_to_spectral,
    l2_norm,
    lp_grid_norm,
    pressure_from_velocity,
    sobolev_norm,
    transport_term,
)
from .noise import BrownianTable, NoiseSpectrum, build_spectrum, sample_brownian_table, w_increment_velocity, wcurl_increment
from .stepper import SolverFailure, StepperConfig, Trajectory, implicit_transport_solve, recover_observables, sie_step, simulate_path
from .convergence import (
    ErrorReport,
    OrderFit,
    StudyConfig,
    fit_order,
    observable_errors,
    pathwise_error_study,
    probability_order_study,
)

__version__ = "0.1.0"
