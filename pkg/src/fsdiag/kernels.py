"""Backend selection for the solver's hot kernels.

The compiled extension is preferred; the NumPy implementation is the
fallback. Set ``FSDIAG_PURE_PYTHON=1`` to force the fallback (used by the
benchmark and by backend-equivalence tests).
"""

from __future__ import annotations

import os

from . import kernels_numpy

if os.environ.get("FSDIAG_PURE_PYTHON"):
    _impl = kernels_numpy
    BACKEND = "numpy"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = kernels_numpy
        BACKEND = "numpy"

project_columns_simplex = _impl.project_columns_simplex
prox_rows_maxnorm = _impl.prox_rows_maxnorm
admm_step = _impl.admm_step
