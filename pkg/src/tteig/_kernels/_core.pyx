# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled projected-operator contraction kernel.

Same contract as ``tteig._kernels.fallback.local_apply``: three staged
matrix products over the whole vector batch, run through BLAS with two
ping-pong workspaces and chunking so the workspace stays bounded. Worth
having because the solver calls this inside every local eigensolver
iteration, often at sizes where numpy's temporaries and dispatch overhead
are comparable to the flops.
"""

from libc.string cimport memcpy

import numpy as np

from scipy.linalg.cython_blas cimport dgemm

BACKEND = "cython"

# cap on each of the two workspaces, in doubles (32 MB)
DEF WORK_CAP = 4_000_000


cdef inline void _gemm_rm(int m, int k, int n,
                          const double* a, const double* b, double* c) noexcept nogil:
    """Row-major C(m,n) = A(m,k) @ B(k,n) via Fortran dgemm on transposes."""
    cdef char tn = b'N'
    cdef int mf = n, nf = m, kf = k
    cdef int lda = n, ldb = k, ldc = n
    cdef double one = 1.0, zero = 0.0
    dgemm(&tn, &tn, &mf, &nf, &kf, &one,
          <double*> b, &lda, <double*> a, &ldb, &zero, c, &ldc)


cdef void _apply_chunk(const double* L, const double* Wp, const double* Rp,
                       const double* x, double* out,
                       int A, int G, int C, int n, int E, int B, int D,
                       int k, double* buf_a, double* buf_b) noexcept nogil:
    """One batch of k vectors; buffers hold the staged intermediates."""
    cdef Py_ssize_t a, g, j, i, e, chunk = <Py_ssize_t> D * k
    cdef const double* src
    cdef double* dst

    # stage 1: (A*G, C) @ (C, n*D*k) -> buf_a laid out as (a, g, j, d, v)
    _gemm_rm(A * G, C, n * D * k, L, x, buf_a)

    # permute to (g, j, a, d, v); (d, v) blocks stay contiguous
    for a in range(A):
        for g in range(G):
            for j in range(n):
                src = buf_a + (((a * G + g) * n + j) * chunk)
                dst = buf_b + (((g * n + j) * A + a) * chunk)
                memcpy(dst, src, chunk * sizeof(double))

    # stage 2: (n*E, G*n) @ (G*n, A*D*k) -> buf_a as (i, e, a, d, v)
    _gemm_rm(n * E, G * n, A * D * k, Wp, buf_b, buf_a)

    # permute to (a, i, e, d, v)
    for i in range(n):
        for e in range(E):
            for a in range(A):
                src = buf_a + (((i * E + e) * A + a) * chunk)
                dst = buf_b + (((a * n + i) * E + e) * chunk)
                memcpy(dst, src, chunk * sizeof(double))

    # stage 3, per (a, i): (B, E*D) @ (E*D, k) -> out rows (a, i, b)
    for a in range(A):
        for i in range(n):
            _gemm_rm(B, E * D, k,
                     Rp,
                     buf_b + ((a * n + i) * <Py_ssize_t> E * chunk),
                     out + ((a * n + i) * <Py_ssize_t> B * k))


def local_apply(env_l, a_core, env_r, block):
    """Apply the projected operator to a block of local vectors.

    See ``tteig._kernels.fallback.local_apply`` for the full shape contract.
    """
    cdef const double[:, :, ::1] L = np.ascontiguousarray(env_l, dtype=np.float64)
    cdef const double[:, :, :, ::1] W = np.ascontiguousarray(a_core, dtype=np.float64)
    cdef const double[:, :, ::1] R = np.ascontiguousarray(env_r, dtype=np.float64)
    cdef const double[:, ::1] X = np.ascontiguousarray(block, dtype=np.float64)

    cdef int A = L.shape[0], G = L.shape[1], C = L.shape[2]
    cdef int n = W.shape[1], E = W.shape[3]
    cdef int B = R.shape[0], D = R.shape[2]
    cdef int k = X.shape[1]

    if W.shape[0] != G or W.shape[2] != n or R.shape[1] != E:
        raise ValueError("environment / operator core shapes are inconsistent")
    if X.shape[0] != C * n * D:
        raise ValueError("block row count does not match rl*n*rr")

    out_arr = np.empty((A * n * B, k), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    if k == 0:
        return out_arr

    # operator core repacked as (i, e, g, j); right environment as (b, e*d)
    cdef const double[:, :, :, ::1] Wp = np.ascontiguousarray(
        np.transpose(np.asarray(W), (1, 3, 0, 2)))
    cdef const double[:, :, ::1] Rp = np.ascontiguousarray(np.asarray(R))

    cdef Py_ssize_t per_vec = max(<Py_ssize_t> A * G * n * D,
                                  <Py_ssize_t> n * E * A * D)
    cdef int chunk_k = k
    if per_vec * k > WORK_CAP:
        chunk_k = max(1, <int> (WORK_CAP // per_vec))

    cdef double[::1] buf_a = np.empty(per_vec * chunk_k, dtype=np.float64)
    cdef double[::1] buf_b = np.empty(per_vec * chunk_k, dtype=np.float64)
    # chunk staging buffers are packed at the current chunk width
    cdef double[::1] xc = np.empty(<Py_ssize_t> C * n * D * chunk_k,
                                   dtype=np.float64)
    cdef double[::1] yc = np.empty(<Py_ssize_t> A * n * B * chunk_k,
                                   dtype=np.float64)

    cdef Py_ssize_t row, col, start, width, m_in = C * n * D, m_out = A * n * B
    with nogil:
        start = 0
        while start < k:
            width = min(<Py_ssize_t> chunk_k, k - start)
            if width == k:
                # whole batch: operate on the caller's layout directly
                _apply_chunk(&L[0, 0, 0], &Wp[0, 0, 0, 0], &Rp[0, 0, 0],
                             &X[0, 0], &out[0, 0],
                             A, G, C, n, E, B, D, k, &buf_a[0], &buf_b[0])
                break
            for row in range(m_in):
                for col in range(width):
                    xc[row * width + col] = X[row, start + col]
            _apply_chunk(&L[0, 0, 0], &Wp[0, 0, 0, 0], &Rp[0, 0, 0],
                         &xc[0], &yc[0],
                         A, G, C, n, E, B, D, <int> width,
                         &buf_a[0], &buf_b[0])
            for row in range(m_out):
                for col in range(width):
                    out[row, start + col] = yc[row * width + col]
            start += width

    return out_arr
