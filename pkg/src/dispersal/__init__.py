"""Numerical laboratory for rescaled jump-dispersal operators versus diffusion.

The package builds nonlocal dispersal operators whose kernel radius can be
driven to zero at diffusive scaling, their Laplacian counterparts under the
same boundary conditions, and the machinery to compare the two: semilinear
evolution, principal growth rates of time-periodic linearizations, and
positive periodic states of saturating growth problems.
"""

from .coefficients import (
    TimePeriodicCoefficient,
    constant_coefficient,
    parse_coefficient,
    shift_coefficient,
    space_cosine,
    time_average,
    time_sine,
    time_space_product,
)
from .errors import (
    BlowUpError,
    CollapsedToZeroError,
    DispersalError,
    NoConvergenceError,
    NumericsError,
    QuadratureFailureError,
    SolverFailureError,
    ValidationError,
)
from .evolution import (
    ReactionTerm,
    SemilinearProblem,
    Trajectory,
    check_comparison,
    linear_reaction,
    logistic_reaction,
    parse_reaction,
    solution_convergence_experiment,
    solve,
    zero_reaction,
)
from .grids import (
    Domain,
    Field,
    Grid,
    box,
    build_grid,
    constant_field,
    field_from_function,
    periodic_cell,
    read_field_csv,
    sup_distance,
    sup_norm,
    write_field_csv,
)
from .kernels import (
    MOLLIFIER,
    QUARTIC,
    KernelProfile,
    dispersal_rate,
    evaluate_k0,
    kernel_mass,
    kernel_profile,
    moment_constant,
    scaled_kernel,
    second_moment,
)
from .kpp import (
    GrowthTerm,
    KPPProblem,
    PeriodicOrbit,
    logistic_growth,
    orbit_convergence_experiment,
    parse_growth,
    positive_periodic_solution,
    validate_saturation,
    verify_invasion_condition,
)
from .operators import (
    LOCAL,
    NONLOCAL,
    BoundaryCondition,
    DispersalOperator,
    assemble_local,
    assemble_nonlocal,
    consistency_error,
    dump_coo,
    parse_boundary_condition,
)
from .reports import ConvergenceReport, empirical_orders, read_csv_table, sweep_order
from .spectral import (
    PeriodMap,
    SpectrumResult,
    apply_period_map,
    default_start,
    perturbation_check,
    principal_eigenvalue_criterion,
    principal_value,
    spectrum_convergence_experiment,
)

__version__ = "0.1.0"
