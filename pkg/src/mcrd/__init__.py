"""Numerical laboratory for a mass-conserved reaction-diffusion model of cell polarity."""

from .model import (
    ModelParams,
    derive_params,
    h,
    h_prime,
    g,
    g_prime,
    G,
    reaction,
    to_zw,
    from_zw,
)
from .grid import Grid
from .energy import (
    EnergyBreakdown,
    SemiUnfoldingReport,
    lyapunov,
    j_functional,
    j_gradient,
    semi_unfolding_check,
)
from .stationary import (
    StationaryState,
    TauOneState,
    SolverError,
    stationary_residual,
    homogeneous_roots,
    newton_solve,
    reconstruct_uv,
    cosine_seed,
    limit_tau1_solve,
)
from .dynamics import (
    State,
    StepperConfig,
    Trajectory,
    ImexStepper,
    step,
    run,
    dissipation_check,
    gradient_flow_step,
    gradient_flow_run,
    dt_budget,
    initial_state,
    perturb_mass_preserving,
)
from .spectra import (
    LinearizedPencil,
    SpectrumReport,
    MuCurveTable,
    FixedPointResult,
    build_L,
    hessian_eigs,
    weighted_eigh,
    build_A,
    spectral_comparison_report,
    weighted_norm_matrix,
    mu_curve,
    negative_eigs_by_fixed_point,
)
from . import presets

__version__ = "0.1.0"
