"""Stochastic Galerkin shallow water solver with hyperbolicity-preserving filtering."""

from . import scenarios, uq
from .hyperbolicity import (
    HyperbolicityCertificate,
    HyperbolicityError,
    SgState,
    check_positivity,
    sg_flux,
    sg_jacobian,
    spectral_bound_check,
    symmetrized_jacobian,
    wave_speeds,
)
from .pce import (
    BasisSpec,
    QuadratureRule,
    build_basis,
    evaluate_basis,
    galerkin_matrix,
    galerkin_product,
    galerkin_ratio,
    gauss_rule,
    min_quadrature_size,
    project,
    xi_expansion,
)
from .solver import (
    FilteredEdges,
    Grid,
    SolverConfig,
    StateField,
    StepDiagnostics,
    central_upwind_flux,
    compute_dt,
    desingularized_velocity,
    filtered_reconstruction,
    positivity_filter,
    reconstruct_interfaces,
    run,
    step,
    well_balanced_source,
)
from .uq import (
    CollocationResult,
    NegativeRegionReport,
    QuantileBand,
    collocation_solve,
    moments,
    negative_region,
    quantile_band,
)

__version__ = "0.1.0"
