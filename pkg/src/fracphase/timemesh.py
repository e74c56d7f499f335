"""Time meshes and convolution coefficients for the averaged-L1 Caputo scheme.

The discrete fractional derivative on the interval [t_{n-1}, t_n] is a
convolution of solution increments with coefficients

    b_{n-k}^{(n)} = 1/(Gamma(1-a) tau_n tau_k) *
                    int_{t_{n-1}}^{t_n} int_{t_{k-1}}^{min(t_k, t)} (t-s)^{-a} ds dt.

``kernel_row`` evaluates this in closed form (both integrals done
analytically); ``kernel_oracle`` evaluates the same double integral by
adaptive quadrature and exists solely to validate the closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import warnings

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.special import gamma as gamma_fn

__all__ = ["TimeMesh", "KernelRow", "build_mesh", "kernel_row", "kernel_oracle"]


class MeshError(ValueError):
    pass


@dataclass(frozen=True)
class TimeMesh:
    t: np.ndarray       # N+1 points, t[0] = 0, t[N] = T
    tau: np.ndarray     # N step sizes
    gamma: float        # grading exponent
    T: float
    N: int


@dataclass(frozen=True)
class KernelRow:
    n: int
    alpha: float
    b: np.ndarray       # b[k-1] = b_{n-k}^{(n)} for k = 1..n


def build_mesh(T: float, N: int, gamma: float = 1.0) -> TimeMesh:
    """Graded mesh t_n = T*(n/N)^gamma; gamma = 1 is uniform."""
    if T <= 0:
        raise MeshError(f"horizon must be positive, got {T}")
    if N < 1:
        raise MeshError(f"need at least one step, got N={N}")
    if gamma < 1:
        raise MeshError(f"grading exponent must be >= 1, got {gamma}")
    t = T * (np.arange(N + 1) / N) ** float(gamma)
    return TimeMesh(t=t, tau=np.diff(t), gamma=float(gamma), T=float(T), N=N)


def _check_row_args(mesh: TimeMesh, n: int, alpha: float) -> None:
    if not 1 <= n <= mesh.N:
        raise MeshError(f"step index {n} outside 1..{mesh.N}")
    if not 0 < alpha <= 1:
        raise MeshError(f"fractional order must be in (0, 1], got {alpha}")


# number of digits of cancellation tolerated before falling back to quadrature
_CANCEL_GUARD = 1e-4


def kernel_row(mesh: TimeMesh, n: int, alpha: float) -> KernelRow:
    """Closed-form convolution coefficients for step n.

    For k < n both integrals are elementary and give, with p = 2 - alpha,

        b = [(t_n - t_{k-1})^p - (t_{n-1} - t_{k-1})^p
             - (t_n - t_k)^p + (t_{n-1} - t_k)^p] / (Gamma(3-a) tau_n tau_k),

    and b_0^{(n)} = tau_n^{-alpha} / Gamma(3-a).  The four-term second
    difference cancels badly for k far in the past on strongly graded
    meshes; entries losing more than six digits are recomputed by Gauss
    quadrature of the smooth defining integrand.

    alpha = 1 degenerates to the backward difference: single entry 1/tau_n.
    """
    _check_row_args(mesh, n, alpha)
    tau_n = mesh.tau[n - 1]
    if alpha == 1.0:
        b = np.zeros(n)
        b[-1] = 1.0 / tau_n
        return KernelRow(n=n, alpha=1.0, b=b)

    p = 2.0 - alpha
    g3 = gamma_fn(3.0 - alpha)
    b = np.empty(n)
    b[-1] = tau_n ** (-alpha) / g3
    if n > 1:
        t = mesh.t
        tk = t[1:n]          # t_k,   k = 1..n-1
        tkm1 = t[0 : n - 1]  # t_{k-1}
        tau_k = mesh.tau[0 : n - 1]
        d1 = (t[n] - tkm1) ** p - (t[n - 1] - tkm1) ** p
        d2 = (t[n] - tk) ** p - (t[n - 1] - tk) ** p
        diff = d1 - d2
        b[:-1] = diff / (g3 * tau_n * tau_k)
        # cancellation guard: recompute suspect entries from the integral
        suspect = np.abs(diff) < _CANCEL_GUARD * np.maximum(np.abs(d1), np.abs(d2))
        for idx in np.flatnonzero(suspect):
            b[idx] = _gauss_coeff(
                tkm1[idx], tk[idx], t[n - 1], t[n], alpha
            )
    return KernelRow(n=n, alpha=alpha, b=b)


# fixed 32-point Gauss-Legendre rule for the cancellation fallback
_GL_X, _GL_W = np.polynomial.legendre.leggauss(32)


def _gauss_coeff(ta: float, tb: float, tc: float, td: float, alpha: float) -> float:
    """Tensor Gauss evaluation of the defining double integral.

    Integrand (t - s)^{-alpha} over s in [ta, tb], t in [tc, td]; only used
    when tc > tb so the integrand is smooth (far-history coefficients, the
    only ones the cancellation guard can flag).
    """
    s_nodes = 0.5 * (tb - ta) * (_GL_X + 1.0) + ta
    t_nodes = 0.5 * (td - tc) * (_GL_X + 1.0) + tc
    vals = (t_nodes[:, None] - s_nodes[None, :]) ** (-alpha)
    integral = 0.25 * (tb - ta) * (td - tc) * float(
        _GL_W @ vals @ _GL_W
    )
    return integral / (gamma_fn(1.0 - alpha) * (td - tc) * (tb - ta))


def kernel_oracle(mesh: TimeMesh, n: int, alpha: float) -> KernelRow:
    """Quadrature evaluation of the coefficient integrals (test oracle).

    The inner integral has the closed antiderivative of (t-s)^{-alpha};
    the outer one is done by adaptive quadrature.  Accuracy ~1e-12
    relative.  Strictly alpha < 1 (the 1/Gamma(1-alpha) factor vanishes
    in a 0*inf limit at alpha = 1, handled only by ``kernel_row``).
    """
    _check_row_args(mesh, n, alpha)
    if alpha >= 1.0:
        raise MeshError("oracle requires alpha < 1")
    t = mesh.t
    tau_n = mesh.tau[n - 1]
    one_m_a = 1.0 - alpha
    g1 = gamma_fn(one_m_a)
    b = np.empty(n)
    for k in range(1, n + 1):
        tkm1, tk = t[k - 1], t[k]
        tau_k = tk - tkm1
        if k == n:
            def inner(tt):
                return (tt - tkm1) ** one_m_a / one_m_a
        else:
            # (t-t_{k-1})^q - (t-t_k)^q rewritten via expm1/log1p: the
            # direct difference cancels badly when tau_k << t - t_k
            def inner(tt):
                base = tt - tk
                if base <= 0.0:
                    return (tt - tkm1) ** one_m_a / one_m_a
                return (
                    base**one_m_a
                    * np.expm1(one_m_a * np.log1p(tau_k / base))
                    / one_m_a
                )
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", IntegrationWarning)
            val, _ = quad(
                inner, t[n - 1], t[n], epsabs=1e-300, epsrel=1e-13, limit=500
            )
        b[k - 1] = val / (g1 * tau_n * tau_k)
    return KernelRow(n=n, alpha=alpha, b=b)
