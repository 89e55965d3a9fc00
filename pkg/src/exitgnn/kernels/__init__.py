"""Kernel dispatch: compiled extension when available, numpy fallback otherwise.

Set ``EXITGNN_PURE_PYTHON=1`` to force the fallback even when the extension
was built (used by the benchmark and by backend-equivalence tests).
"""

import os

import numpy as np

from . import fallback

_impl = None
if not os.environ.get("EXITGNN_PURE_PYTHON"):
    try:
        from . import _spmm as _impl
    except ImportError:
        _impl = None
if _impl is None:
    _impl = fallback

BACKEND = "numpy" if _impl is fallback else "compiled"


def csr_spmm(indptr, indices, values, x, out=None):
    """Multiply a CSR matrix by a dense row-major matrix.

    ``x`` must have one row per matrix column; returns a dense (n_rows, k)
    float64 array. Rows accumulate in ascending stored-index order in the
    compiled kernel; the fallback is deterministic but may differ from the
    compiled path in the last ulp.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    n = indptr.shape[0] - 1
    if out is None:
        out = np.empty((n, x.shape[1]), dtype=np.float64)
    _impl.csr_spmm_into(indptr, indices, values, x, out)
    return out
