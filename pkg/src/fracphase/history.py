"""Storage of solution increments and the history part of the Caputo sum."""

from __future__ import annotations

import numpy as np

from ._accel import weighted_history_sum
from .grid import Grid, GridError
from .timemesh import KernelRow

__all__ = ["HistoryBuffer", "history_term", "full_caputo"]

_MAGIC = "FPH1H"


class HistoryBuffer:
    """Ordered increments phi^k - phi^{k-1}, k = 1..n, on one grid.

    Backed by a capacity-doubling contiguous (cap, nx, ny) array so the
    weighted-sum kernel can run over a single memory block.
    """

    def __init__(self, grid: Grid, capacity: int = 16):
        self.grid = grid
        self._data = np.empty((max(capacity, 1), grid.nx, grid.ny))
        self._n = 0

    @property
    def n(self) -> int:
        return self._n

    def increments(self) -> np.ndarray:
        """Read-only view of the stored increments, shape (n, nx, ny)."""
        view = self._data[: self._n]
        view.flags.writeable = False
        return view

    def push(self, increment: np.ndarray) -> "HistoryBuffer":
        if increment.shape != (self.grid.nx, self.grid.ny):
            raise GridError(
                f"increment shape {increment.shape} does not match grid"
            )
        if self._n == self._data.shape[0]:
            grown = np.empty((2 * self._n, self.grid.nx, self.grid.ny))
            grown[: self._n] = self._data
            self._data = grown
        self._data[self._n] = increment
        self._n += 1
        return self

    def weighted_sum(self, coeffs: np.ndarray) -> np.ndarray:
        if len(coeffs) != self._n:
            raise ValueError(
                f"{len(coeffs)} coefficients for {self._n} stored increments"
            )
        out = np.empty((self.grid.nx, self.grid.ny))
        weighted_history_sum(
            np.ascontiguousarray(coeffs, dtype=np.float64),
            self._data[: self._n],
            out,
        )
        return out

    # -- checkpoint format: text header + raw little-endian doubles -------

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(f"{_MAGIC} {self.grid.nx} {self.grid.ny} {self._n}\n".encode())
            self._data[: self._n].astype("<f8").tofile(fh)

    @classmethod
    def load(cls, path, grid: Grid) -> "HistoryBuffer":
        with open(path, "rb") as fh:
            header = fh.readline().decode().split()
            if len(header) != 4 or header[0] != _MAGIC:
                raise ValueError(f"not a history checkpoint: {path}")
            nx, ny, n = (int(v) for v in header[1:])
            if (nx, ny) != (grid.nx, grid.ny):
                raise GridError(f"checkpoint grid {nx}x{ny} does not match")
            raw = np.fromfile(fh, dtype="<f8", count=n * nx * ny)
        if raw.size != n * nx * ny:
            raise ValueError(f"truncated history checkpoint: {path}")
        buf = cls(grid, capacity=max(n, 1))
        buf._data[:n] = raw.reshape(n, nx, ny)
        buf._n = n
        return buf


def history_term(buf: HistoryBuffer, row: KernelRow) -> np.ndarray:
    """Explicit part of the Caputo sum at step n+1.

    ``row`` must be the kernel row for step n+1 (length n+1); the implicit
    coefficient row.b[-1] multiplies the unknown increment and is excluded.
    """
    if len(row.b) != buf.n + 1:
        raise ValueError(
            f"kernel row length {len(row.b)} does not fit history of {buf.n}"
        )
    return buf.weighted_sum(row.b[:-1])


def full_caputo(buf: HistoryBuffer, row: KernelRow) -> np.ndarray:
    """Complete discrete Caputo value at step n from all n stored increments."""
    if len(row.b) != buf.n:
        raise ValueError(
            f"kernel row length {len(row.b)} does not match history of {buf.n}"
        )
    return buf.weighted_sum(row.b)
