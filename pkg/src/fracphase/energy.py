"""Energy, mass, and auxiliary-variable diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid
from .history import full_caputo
from .stepper import ModelParams, SolverState
from .timemesh import KernelRow

__all__ = [
    "DiagnosticsRecord",
    "original_energy",
    "modified_energy",
    "r_drift",
    "hminus1_inner",
    "energy_identity_residual",
]


@dataclass
class DiagnosticsRecord:
    t: float
    E: float
    E_mod: float
    mass: float
    r_drift: float
    identity_residual: float
    solver_iterations: int


def original_energy(phi: np.ndarray, params: ModelParams, g: Grid) -> float:
    """Free energy: eps^2/2 |grad phi|^2 + (phi^2-1)^2/4 integrated over the box."""
    return 0.5 * params.eps**2 * g.grad_sq_integral(phi) + g.integrate(
        0.25 * (phi**2 - 1.0) ** 2
    )


def modified_energy(
    phi: np.ndarray, r: np.ndarray, params: ModelParams, g: Grid
) -> float:
    """Quadratic-in-r surrogate energy; equals the free energy when r is consistent.

    E_mod = int eps^2/2 |grad phi|^2 + (r+S)(phi^2-1-S)/2 - r^2/4 + S^2/4 |domain|.
    """
    S = params.S
    bulk = 0.5 * (r + S) * (phi**2 - 1.0 - S) - 0.25 * r**2
    return (
        0.5 * params.eps**2 * g.grad_sq_integral(phi)
        + g.integrate(bulk)
        + 0.25 * S**2 * g.area
    )


def r_drift(phi_half: np.ndarray, r_half: np.ndarray, S: float, g: Grid) -> float:
    """L2 distance between r^{n+1/2} and (phi^{n+1/2})^2 - 1 - S."""
    gap = r_half - (phi_half**2 - 1.0 - S)
    return float(np.sqrt(g.integrate(gap**2)))


def hminus1_inner(g: Grid, a: np.ndarray, b: np.ndarray) -> float:
    """Inner product (grad invlap a, grad invlap b) on mean-free parts."""
    return g.integrate(g.inv_neg_laplacian_meanfree(a) * b)


def energy_identity_residual(
    prev_phi: np.ndarray,
    prev_r_half: np.ndarray,
    state: SolverState,
    row: KernelRow,
    params: ModelParams,
    g: Grid,
) -> float:
    """Defect of the per-step modified-energy balance.

    The step satisfies, exactly for an exact linear solve,
        dE_mod = -(1/M) <inc, caputo>        (nonconserved)
        dE_mod = -(1/M) <inc, caputo>_{H^-1} (conserved)
    with inc = phi^{n} - phi^{n-1} and the discrete Caputo value rebuilt
    from the stored increments and the kernel row of the step just taken.
    Returns |dE_mod - rhs|.
    """
    if row.n != state.step:
        raise ValueError(f"kernel row for step {row.n}, state at step {state.step}")
    d_e = modified_energy(state.phi, state.r_half, params, g) - modified_energy(
        prev_phi, prev_r_half, params, g
    )
    caputo_mid = full_caputo(state.history, row)
    inc = state.phi - prev_phi
    if params.model.is_conserved:
        pairing = hminus1_inner(g, inc, caputo_mid)
    else:
        pairing = g.integrate(inc * caputo_mid)
    rhs = -pairing / params.mobility
    return abs(d_e - rhs)
