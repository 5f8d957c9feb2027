"""Spectral simulation and dyadic-shell verification toolkit.

The package evolves a generalized dissipative advection system on the
periodic torus in Fourier space, decomposes the solution energy into
dyadic frequency shells, and numerically checks the structural identities
and bounds (energy inequality, interaction antisymmetry and support,
recursive tail inequality, cascade index structure) that control the
small-scale behaviour of the system.
"""

from .multipliers import (
    Criticality,
    DampingWeights,
    DissipationLaw,
    GrowthFunction,
    VelocityLaw,
    classify_criticality,
    constant,
    damping_weights,
    dissipation_symbol,
    iter_log_power,
    log_power,
    power,
    smoothing_symbol,
    velocity_to_leray,
)
from .solver import (
    BlowupNumerics,
    MonitorStatus,
    NonFiniteState,
    RunConfig,
    SpectralState,
    Trajectory,
    blowup_monitor,
    energy,
    init_field,
    integrate,
    leray_project,
    nonlinear_rhs,
    random_smooth_state,
    single_mode_state,
    sobolev_norm,
    step,
    taylor_green_state,
)
from .shells import (
    BumpProfile,
    ShellFrame,
    ShellTrajectory,
    chi_coeffs,
    default_profile,
    dissipation_floor,
    interacting_triple,
    interaction_bound_constant,
    interaction_coeffs,
    lipschitz_sqrt_psi,
    partition_defect,
    psi_n,
    shell_count,
    shell_energies,
    shell_frame,
    shell_trajectory,
    verify_interaction_bounds,
    verify_shell_ode,
)
from .diagnostics import (
    TailDiagnostics,
    cascade_indices,
    check_cancellation_identity,
    check_d_recursion,
    check_energy_inequality,
    check_Q_properties,
    check_R_min_bound,
    energy_bound,
    fit_decay,
    peak_history,
    tail_diagnostics,
    tails,
    weighted_decrements,
)

__version__ = "0.1.0"
