"""Pure numpy CSR * dense kernel, used when the compiled extension is absent."""

import numpy as np


def csr_spmm_into(indptr, indices, values, x, out):
    # Segment-sum of values[j] * x[indices[j]] over each row's nnz range.
    # reduceat cannot express empty segments, so empty rows are zeroed
    # explicitly and only non-empty row starts are passed.
    out[:] = 0.0
    if indices.shape[0] == 0:
        return
    prod = values[:, None] * x[indices]
    nonempty = np.flatnonzero(np.diff(indptr) > 0)
    out[nonempty] = np.add.reduceat(prod, indptr[nonempty], axis=0)
