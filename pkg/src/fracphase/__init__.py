"""Spectral solver for time-fractional phase-field equations.

Averaged-L1 discretization of the Caputo derivative on graded meshes,
combined with a staggered linear relaxation of the double-well nonlinearity;
Fourier pseudospectral space, matrix-free BiCGStab in time-stepping.
"""

from ._accel import USING_COMPILED
from .energy import (
    DiagnosticsRecord,
    energy_identity_residual,
    modified_energy,
    original_energy,
    r_drift,
)
from .grid import Grid, GridError, make_grid
from .history import HistoryBuffer, full_caputo, history_term
from .krylov import LinearOp, SolveStats, make_preconditioner, solve
from .mms import (
    ConvergenceTable,
    caputo_power,
    exact_phi,
    make_discrete_source,
    make_source,
    run_convergence,
    source_term,
)
from .simulate import constant_ic, ellipse_ic, run_simulation
from .stepper import (
    DivergenceError,
    Model,
    ModelParams,
    SolverState,
    StepFailure,
    init_state,
    run,
    step,
    update_r,
)
from .timemesh import KernelRow, TimeMesh, build_mesh, kernel_oracle, kernel_row

__version__ = "0.1.0"
