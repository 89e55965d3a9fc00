# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled CSR * dense kernel.

Row-sequential with ascending stored-index accumulation, so results are
bit-reproducible run to run and independent of how callers might shard rows.
"""

cimport cython


@cython.boundscheck(False)
@cython.wraparound(False)
def csr_spmm_into(const long long[::1] indptr, const int[::1] indices,
                  const double[::1] values, const double[:, ::1] x,
                  double[:, ::1] out):
    cdef Py_ssize_t n = out.shape[0]
    cdef Py_ssize_t k = out.shape[1]
    cdef Py_ssize_t i, jj, c
    cdef Py_ssize_t col
    cdef double w
    with nogil:
        for i in range(n):
            for c in range(k):
                out[i, c] = 0.0
            for jj in range(indptr[i], indptr[i + 1]):
                col = indices[jj]
                w = values[jj]
                for c in range(k):
                    out[i, c] += w * x[col, c]
