"""Selects the kernel backend at import time.

The compiled extension is preferred; the NumPy implementation is the
fallback.  Set ``POSSIM_PURE_PYTHON=1`` to force the fallback (used by
the benchmark and the backend-parity tests).
"""

from __future__ import annotations

import os

from possim import _kernels_py

if os.environ.get("POSSIM_PURE_PYTHON", "").strip() in ("1", "true", "yes"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from possim import _kernels_c as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

binom_contour = _impl.binom_contour
table_contour = _impl.table_contour
corr_loglik = _impl.corr_loglik
corr_mle = _impl.corr_mle
corr_logrel = _impl.corr_logrel
corr_contour_crn = _impl.corr_contour_crn


def backend_name() -> str:
    """Name of the active kernel backend ('compiled' or 'python')."""
    return BACKEND
