"""Periodic 2-D Fourier collocation grid and spectral operators.

Fields are plain ``float64`` arrays of shape ``(nx, ny)`` holding collocation
values; the grid object owns the wavenumber tables and all transform-based
operators.  Transforms are internal: every operator takes and returns real
arrays, asserting that the imaginary residue of the inverse transform is at
round-off level.
"""

from __future__ import annotations

import numpy as np

__all__ = ["Grid", "GridError", "make_grid"]

# imaginary residue above this fraction of the field norm indicates a bug
_IMAG_TOL = 1e-10


class GridError(ValueError):
    """Invalid grid construction or field/grid mismatch."""


class Grid:
    """Uniform periodic grid on [0, lx) x [0, ly) with spectral operators.

    Wavenumbers follow standard signed FFT indexing: mode m maps to
    2*pi*m/l with m in {0, 1, ..., n/2-1, -n/2, ..., -1}.  The Nyquist
    mode (-n/2) is kept by second-derivative multipliers and zeroed in
    first-derivative routines so gradients of real fields stay real.
    """

    def __init__(self, nx: int, ny: int, lx: float, ly: float):
        if nx < 4 or ny < 4 or nx % 2 or ny % 2:
            raise GridError(f"grid sizes must be even and >= 4, got {nx}x{ny}")
        if lx <= 0 or ly <= 0:
            raise GridError(f"domain lengths must be positive, got {lx}, {ly}")
        self.nx = nx
        self.ny = ny
        self.lx = float(lx)
        self.ly = float(ly)
        self.kx = 2.0 * np.pi * np.fft.fftfreq(nx, d=self.lx / nx)
        self.ky = 2.0 * np.pi * np.fft.fftfreq(ny, d=self.ly / ny)
        # first-derivative wavenumbers: Nyquist zeroed
        self.kxd = self.kx.copy()
        self.kxd[nx // 2] = 0.0
        self.kyd = self.ky.copy()
        self.kyd[ny // 2] = 0.0
        self.k2 = self.kx[:, None] ** 2 + self.ky[None, :] ** 2
        self.cell_area = (self.lx / nx) * (self.ly / ny)
        self.area = self.lx * self.ly
        x1 = np.arange(nx) * (self.lx / nx)
        y1 = np.arange(ny) * (self.ly / ny)
        self.x, self.y = np.meshgrid(x1, y1, indexing="ij")

    # -- helpers ---------------------------------------------------------

    def check(self, f: np.ndarray) -> np.ndarray:
        if f.shape != (self.nx, self.ny):
            raise GridError(
                f"field shape {f.shape} does not match grid {self.nx}x{self.ny}"
            )
        return f

    def _real(self, fhat_inv: np.ndarray, ref: float) -> np.ndarray:
        imag = np.max(np.abs(fhat_inv.imag))
        if imag > _IMAG_TOL * max(ref, 1e-300):
            raise GridError(f"imaginary residue {imag:.3e} exceeds tolerance")
        return np.ascontiguousarray(fhat_inv.real)

    # -- operators -------------------------------------------------------

    def laplacian(self, f: np.ndarray) -> np.ndarray:
        self.check(f)
        fhat = np.fft.fft2(f)
        out = np.fft.ifft2(-self.k2 * fhat)
        return self._real(out, np.max(np.abs(f)) * np.max(self.k2))

    def inv_neg_laplacian_meanfree(self, f: np.ndarray) -> np.ndarray:
        """Solve -lap(w) = f - mean(f) with mean(w) = 0."""
        self.check(f)
        fhat = np.fft.fft2(f)
        with np.errstate(divide="ignore", invalid="ignore"):
            what = fhat / self.k2
        what[0, 0] = 0.0
        out = np.fft.ifft2(what)
        return self._real(out, np.max(np.abs(f)) + 1e-300)

    def grad(self, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        self.check(f)
        fhat = np.fft.fft2(f)
        ref = np.max(np.abs(f)) * (np.max(np.abs(self.kx)) + np.max(np.abs(self.ky)))
        fx = self._real(np.fft.ifft2(1j * self.kxd[:, None] * fhat), ref)
        fy = self._real(np.fft.ifft2(1j * self.kyd[None, :] * fhat), ref)
        return fx, fy

    def integrate(self, f: np.ndarray) -> float:
        """Rectangle-rule quadrature; spectrally accurate for smooth periodic f."""
        self.check(f)
        return float(np.sum(f)) * self.cell_area

    def mean(self, f: np.ndarray) -> float:
        return self.integrate(f) / self.area

    def grad_sq_integral(self, f: np.ndarray) -> float:
        """Integral of |grad f|^2 via Parseval: sum k^2 |fhat|^2."""
        self.check(f)
        fhat = np.fft.fft2(f)
        s = float(np.sum(self.k2 * (fhat.real**2 + fhat.imag**2)))
        return s * self.cell_area / (self.nx * self.ny)


def make_grid(nx: int, ny: int, lx: float, ly: float) -> Grid:
    return Grid(nx, ny, lx, ly)
