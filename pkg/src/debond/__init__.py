"""Quasistatic debonding of an adhesive membrane on finite-difference grids."""

from .audit import des_verdict, energy_balance_report
from .bernoulli import CompetitorFamily, SolverSettings, ac_value, minimize_ac, stability_check
from .dirichlet import dirichlet_energy, harmonic_extension, solve_dirichlet
from .errors import (
    ConfigError,
    DebondError,
    DriveError,
    EmptyAdmissibleClass,
    GridError,
    GridMismatch,
    InadmissiblePowerDatum,
    InnerSolveDivergence,
    SolverDivergence,
    ToughnessError,
    UnsupportedDriveClass,
    WorkFormMismatch,
)
from .evolution import Problem, SchemeSettings, init_evolution, mm_run, mm_step, refine_study, run_problem
from .grid import (
    BoundaryDrive,
    ConstantProfile,
    InverseSquareProfile,
    RadialProfile,
    RegionMask,
    band_mask,
    build_grid,
    fatten_initial_set,
    interval_mask,
    make_toughness,
    toughness_from_profile,
)
from .onedim import (
    FrontTrajectory,
    PiecewiseLinear,
    build_spiky_drive,
    check_eb_ell,
    check_gs_ell,
    constant_kappa_front,
    flat_landscape_front,
    front_field,
    linear_drive,
)

__version__ = "0.1.0"
