"""Select the compiled extension kernels or the numpy fallback at import.

Set ``FRACPHASE_PURE_PYTHON=1`` to force the fallback (used by the
benchmark and as an escape hatch on platforms without a C compiler).
"""

import os

if os.environ.get("FRACPHASE_PURE_PYTHON"):
    from . import _kernels_py as kernels

    USING_COMPILED = False
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]

        USING_COMPILED = True
    except ImportError:
        from . import _kernels_py as kernels  # type: ignore[no-redef]

        USING_COMPILED = False

weighted_history_sum = kernels.weighted_history_sum
