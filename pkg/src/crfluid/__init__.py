"""Pseudo-spectral simulation and a priori diagnostics for chemically
reacting generalized Newtonian flow on the periodic unit torus."""

__version__ = "0.1.0"

from .constitutive import (
    PowerLawIndex,
    PropertyReport,
    StressModel,
    check_properties,
    eval_p,
    eval_stress,
    stress,
    stress_jacobian_D,
    stress_jacobian_c,
)
from .diagnostics import (
    COLUMNS,
    DiagnosticsRecord,
    calibrate_gronwall_constant,
    compute_record,
    energy_budget_concentration,
    energy_budget_velocity,
    eta_norms,
    gradc_certificate_sample,
    gradc_q_monitor,
    gronwall_certificate,
    luxembourg_norm,
    modular,
    time_derivative_monitor,
    w22_monitor,
)
from .solver import (
    BlowUpError,
    PicardDivergenceError,
    RegimeFlags,
    RunResult,
    SolverConfig,
    State,
    compute_regime,
    recover_pressure,
    run,
    step,
    step_concentration,
    step_velocity,
)
from .spectral import (
    Grid,
    PhysicalField,
    SpectralField,
    dealias,
    dealias_and_zero_mean,
    divergence,
    gradient,
    l2_norm,
    laplacian,
    leray_project,
    lp_norm,
    make_grid,
    physical_field,
    remove_mean,
    spectral_field,
    sym_gradient,
    to_physical,
    to_spectral,
)
