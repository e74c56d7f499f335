"""Pure-numpy implementation of the hot kernels (fallback path)."""

import numpy as np


def weighted_history_sum(coeffs, increments, out):
    """out = sum_k coeffs[k] * increments[k], accumulated over the history axis.

    ``increments`` has shape (n, nx, ny); ``coeffs`` has length n; ``out`` is
    an (nx, ny) array overwritten in place.
    """
    if len(coeffs) == 0:
        out[...] = 0.0
        return out
    np.einsum("k,kij->ij", coeffs, increments, out=out, optimize=True)
    return out
