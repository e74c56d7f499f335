"""One-step advance of the coupled (phi, r) relaxation scheme.

Each step is: explicit staggered update of the auxiliary variable r from
the algebraic relation (r^{n+1/2} + r^{n-1/2})/2 = (phi^n)^2 - 1 - S, then
a single linear Crank-Nicolson-type solve for phi^{n+1} with the discrete
Caputo history on the right-hand side.

Sign convention: the gradient-flow operator is nonpositive, i.e.
d^a phi/dt^a = -M mu for the nonconserved (Allen-Cahn) model and
d^a phi/dt^a = M lap(mu) for the conserved (Cahn-Hilliard) model, with
mu = -eps^2 lap(phi) + (r + S) phi.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .grid import Grid
from .history import HistoryBuffer, history_term
from .krylov import LinearOp, SolveStats, make_preconditioner, solve
from .timemesh import TimeMesh, kernel_row

__all__ = [
    "Model",
    "ModelParams",
    "SolverState",
    "StepFailure",
    "DivergenceError",
    "init_state",
    "update_r",
    "apply_mu_operator",
    "scheme_operator",
    "step",
    "run",
]


class Model(enum.Enum):
    ALLEN_CAHN = "ac"
    CAHN_HILLIARD = "ch"

    @property
    def is_conserved(self) -> bool:
        return self is Model.CAHN_HILLIARD


@dataclass
class ModelParams:
    model: Model
    alpha: float
    eps: float = 0.2
    mobility: float = 0.1
    S: float = 2.0

    def __post_init__(self):
        if isinstance(self.model, str):
            self.model = Model(self.model)
        if not 0 < self.alpha <= 1:
            raise ValueError(f"fractional order must be in (0, 1], got {self.alpha}")
        if self.eps <= 0:
            raise ValueError(f"interface width must be positive, got {self.eps}")
        if self.mobility <= 0:
            raise ValueError(f"mobility must be positive, got {self.mobility}")
        if self.S < 0:
            raise ValueError(f"stabilization must be >= 0, got {self.S}")


# SourceSpec: callable (X, Y, t) -> field values, evaluated at interval midpoints
SourceSpec = Callable[[np.ndarray, np.ndarray, float], np.ndarray]


@dataclass
class SolverState:
    grid: Grid
    step: int
    phi: np.ndarray           # phi^n
    r_half: np.ndarray        # r^{n-1/2}
    history: HistoryBuffer
    last_stats: Optional[SolveStats] = field(default=None, repr=False)


class StepFailure(RuntimeError):
    def __init__(self, msg, stats: Optional[SolveStats] = None):
        super().__init__(msg)
        self.stats = stats


class DivergenceError(RuntimeError):
    pass


def init_state(phi0: np.ndarray, params: ModelParams, grid: Grid) -> SolverState:
    """Initial state with r^{-1/2} = (phi^0)^2 - 1 - S.

    This choice makes the modified energy of (phi^0, r^{-1/2}) equal the
    original free energy of phi^0 exactly.
    """
    grid.check(phi0)
    if not np.all(np.isfinite(phi0)):
        raise ValueError("initial condition contains non-finite values")
    phi0 = np.array(phi0, dtype=np.float64)
    r0 = phi0**2 - 1.0 - params.S
    return SolverState(
        grid=grid, step=0, phi=phi0, r_half=r0, history=HistoryBuffer(grid)
    )


def update_r(state: SolverState, params: ModelParams) -> np.ndarray:
    """r^{n+1/2} = 2((phi^n)^2 - 1 - S) - r^{n-1/2} (staggered average)."""
    return 2.0 * (state.phi**2 - 1.0 - params.S) - state.r_half


def apply_mu_operator(
    grid: Grid, params: ModelParams, r_half: np.ndarray, v: np.ndarray
) -> np.ndarray:
    """Linearized chemical potential A[v] = -eps^2 lap(v) + (r^{n+1/2} + S) v."""
    return -params.eps**2 * grid.laplacian(v) + (r_half + params.S) * v


def scheme_operator(
    grid: Grid, params: ModelParams, r_half: np.ndarray, b0: float
) -> LinearOp:
    """Implicit operator L acting on the unknown phi^{n+1}.

    L[v] = b0 v + (M/2) A[v] (nonconserved) or b0 v - (M/2) lap(A[v])
    (conserved); the 1/2 is the Crank-Nicolson midpoint share.
    """
    if b0 <= 0:
        raise ValueError(f"implicit coefficient must be positive, got {b0}")
    half_m = 0.5 * params.mobility

    if params.model.is_conserved:

        def apply(v):
            return b0 * v - half_m * grid.laplacian(
                apply_mu_operator(grid, params, r_half, v)
            )

    else:

        def apply(v):
            return b0 * v + half_m * apply_mu_operator(grid, params, r_half, v)

    return LinearOp(apply=apply)


def step(
    state: SolverState,
    mesh: TimeMesh,
    params: ModelParams,
    source: Optional[SourceSpec] = None,
    tol: float = 1e-10,
    maxit: int = 500,
) -> SolverState:
    """Advance the state from t_n to t_{n+1} in place; returns the state."""
    n = state.step
    if n >= mesh.N:
        raise StepFailure(f"mesh exhausted at step {n}")
    grid = state.grid
    row = kernel_row(mesh, n + 1, params.alpha)
    b0 = row.b[-1]

    r_new = update_r(state, params)

    # explicit Crank-Nicolson half on phi^n, history moved to the right
    a_phi_n = apply_mu_operator(grid, params, r_new, state.phi)
    if params.model.is_conserved:
        explicit = 0.5 * params.mobility * grid.laplacian(a_phi_n)
    else:
        explicit = -0.5 * params.mobility * a_phi_n
    rhs = b0 * state.phi - history_term(state.history, row) + explicit
    if source is not None:
        t_mid = 0.5 * (mesh.t[n] + mesh.t[n + 1])
        rhs = rhs + source(grid.x, grid.y, t_mid)

    op = scheme_operator(grid, params, r_new, b0)
    precond = make_preconditioner(b0, params, grid)
    phi_new, stats = solve(op, precond, rhs, x0=state.phi, tol=tol, maxit=maxit)
    if not stats.converged:
        raise StepFailure(
            f"linear solve failed at step {n + 1}: "
            f"residual {stats.final_relative_residual:.3e} after "
            f"{stats.iterations} iterations",
            stats,
        )
    if params.model.is_conserved:
        # the zero mode decouples exactly (L reduces to b0 on means);
        # pin it so mass conservation is not limited by the Krylov tolerance
        phi_new += float(np.mean(rhs)) / b0 - float(np.mean(phi_new))
    if not np.all(np.isfinite(phi_new)):
        raise DivergenceError(f"non-finite solution at step {n + 1}")

    state.history.push(phi_new - state.phi)
    state.phi = phi_new
    state.r_half = r_new
    state.step = n + 1
    state.last_stats = stats
    return state


def run(
    state: SolverState,
    mesh: TimeMesh,
    params: ModelParams,
    source: Optional[SourceSpec] = None,
    tol: float = 1e-10,
    maxit: int = 500,
    on_step: Optional[Callable[[SolverState], None]] = None,
) -> SolverState:
    """Step the state through the whole mesh."""
    while state.step < mesh.N:
        step(state, mesh, params, source=source, tol=tol, maxit=maxit)
        if on_step is not None:
            on_step(state)
    return state
