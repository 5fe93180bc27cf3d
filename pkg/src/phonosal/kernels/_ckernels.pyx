# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled implementations of the hot kernels.

Same contracts as ``_pykernels``: "same" zero padding, stride 1, odd
kernels; max pooling fixed at 2x2 stride 2.  The convolutions are driven
through BLAS dgemm on shifted, zero-copy submatrices of the input (one
call per kernel tap), which avoids the materialized im2col buffers the
numpy backend builds.
"""

import numpy as np

from scipy.linalg.cython_blas cimport dgemm

BACKEND_NAME = "c"


cdef inline void gemm_rm(char ta, char tb, int m, int n, int k,
                         double alpha, double* a, int lda,
                         double* b, int ldb, double beta,
                         double* c, int ldc) noexcept nogil:
    """Row-major C(m,n) = alpha*op(A)op(B) + beta*C on top of Fortran dgemm."""
    dgemm(&tb, &ta, &n, &m, &k, &alpha, b, &ldb, a, &lda, &beta, c, &ldc)


def _c(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def conv1d_forward(x, w, b):
    """x: (B, Ci, T), w: (Co, Ci, K) with K odd, b: (Co,) -> (B, Co, T)."""
    if x.shape[1] != w.shape[1]:
        raise ValueError(f"channel mismatch: input {x.shape[1]}, weight {w.shape[1]}")
    x = _c(x)
    cdef double[:, :, ::1] xv = x
    # one contiguous (Co, Ci) weight matrix per tap
    cdef double[:, :, ::1] wk = _c(np.asarray(w).transpose(2, 0, 1))
    y = np.empty((x.shape[0], w.shape[0], x.shape[2]), dtype=np.float64)
    y[:] = np.asarray(b)[None, :, None]
    cdef double[:, :, ::1] yv = y
    cdef int B = xv.shape[0], Ci = xv.shape[1], T = xv.shape[2]
    cdef int Co = wk.shape[1], K = wk.shape[0], pad = (K - 1) // 2
    cdef int bi, k, off, t0, t1, L
    with nogil:
        for bi in range(B):
            for k in range(K):
                off = k - pad
                t0 = -off if off < 0 else 0
                t1 = T - off if off > 0 else T
                L = t1 - t0
                if L > 0:
                    gemm_rm(b'N', b'N', Co, L, Ci, 1.0,
                            &wk[k, 0, 0], Ci,
                            &xv[bi, 0, t0 + off], T, 1.0,
                            &yv[bi, 0, t0], T)
    return y


def conv1d_backward(x, w, dy):
    """Gradients of conv1d_forward; returns (dx, dw, db)."""
    x = _c(x)
    dy = _c(dy)
    cdef double[:, :, ::1] xv = x
    cdef double[:, :, ::1] dyv = dy
    cdef double[:, :, ::1] wkt = _c(np.asarray(w).transpose(2, 1, 0))  # (K, Ci, Co)
    w = np.asarray(w)
    dx = np.zeros_like(x)
    dwk = np.zeros((w.shape[2], w.shape[0], w.shape[1]))  # (K, Co, Ci)
    cdef double[:, :, ::1] dxv = dx
    cdef double[:, :, ::1] dwkv = dwk
    cdef int B = xv.shape[0], Ci = xv.shape[1], T = xv.shape[2]
    cdef int Co = wkt.shape[2], K = wkt.shape[0], pad = (K - 1) // 2
    cdef int bi, k, off, t0, t1, L
    with nogil:
        for bi in range(B):
            for k in range(K):
                off = k - pad
                t0 = -off if off < 0 else 0
                t1 = T - off if off > 0 else T
                L = t1 - t0
                if L > 0:
                    # dx[:, t+off] += w_k^T @ dy[:, t]
                    gemm_rm(b'N', b'N', Ci, L, Co, 1.0,
                            &wkt[k, 0, 0], Co,
                            &dyv[bi, 0, t0], T, 1.0,
                            &dxv[bi, 0, t0 + off], T)
                    # dw_k += dy[:, t] @ x[:, t+off]^T
                    gemm_rm(b'N', b'T', Co, Ci, L, 1.0,
                            &dyv[bi, 0, t0], T,
                            &xv[bi, 0, t0 + off], T, 1.0,
                            &dwkv[k, 0, 0], Ci)
    dw = np.ascontiguousarray(dwk.transpose(1, 2, 0))
    db = dy.sum(axis=(0, 2))
    return dx, dw, db


def conv2d_forward(x, w, b):
    """x: (B, Ci, H, W), w: (Co, Ci, KH, KW) odd kernels, b: (Co,) -> (B, Co, H, W)."""
    if x.shape[1] != w.shape[1]:
        raise ValueError(f"channel mismatch: input {x.shape[1]}, weight {w.shape[1]}")
    x = _c(x)
    cdef double[:, :, :, ::1] xv = x
    w = np.asarray(w)
    cdef int KH = w.shape[2], KW = w.shape[3]
    cdef double[:, :, ::1] wij = _c(w.transpose(2, 3, 0, 1).reshape(KH * KW, w.shape[0], w.shape[1]))
    y = np.empty((x.shape[0], w.shape[0], x.shape[2], x.shape[3]), dtype=np.float64)
    y[:] = np.asarray(b)[None, :, None, None]
    cdef double[:, :, :, ::1] yv = y
    cdef int B = xv.shape[0], Ci = xv.shape[1], H = xv.shape[2], W = xv.shape[3]
    cdef int Co = wij.shape[1], ph = (KH - 1) // 2, pw = (KW - 1) // 2
    cdef int bi, i, j, h, hh, off, t0, t1, L, h0, h1, plane = H * W
    with nogil:
        for bi in range(B):
            for i in range(KH):
                h0 = ph - i if i < ph else 0
                h1 = H + ph - i if i > ph else H
                for j in range(KW):
                    off = j - pw
                    t0 = -off if off < 0 else 0
                    t1 = W - off if off > 0 else W
                    L = t1 - t0
                    if L <= 0:
                        continue
                    for h in range(h0, h1):
                        hh = h + i - ph
                        gemm_rm(b'N', b'N', Co, L, Ci, 1.0,
                                &wij[i * KW + j, 0, 0], Ci,
                                &xv[bi, 0, hh, t0 + off], plane, 1.0,
                                &yv[bi, 0, h, t0], plane)
    return y


def conv2d_backward(x, w, dy):
    """Gradients of conv2d_forward; returns (dx, dw, db)."""
    x = _c(x)
    dy = _c(dy)
    cdef double[:, :, :, ::1] xv = x
    cdef double[:, :, :, ::1] dyv = dy
    w = np.asarray(w)
    cdef int KH = w.shape[2], KW = w.shape[3]
    cdef double[:, :, ::1] wijt = _c(w.transpose(2, 3, 1, 0).reshape(KH * KW, w.shape[1], w.shape[0]))
    dx = np.zeros_like(x)
    dwij = np.zeros((KH * KW, w.shape[0], w.shape[1]))
    cdef double[:, :, :, ::1] dxv = dx
    cdef double[:, :, ::1] dwv = dwij
    cdef int B = xv.shape[0], Ci = xv.shape[1], H = xv.shape[2], W = xv.shape[3]
    cdef int Co = w.shape[0], ph = (KH - 1) // 2, pw = (KW - 1) // 2
    cdef int bi, i, j, h, hh, off, t0, t1, L, h0, h1, plane = H * W
    with nogil:
        for bi in range(B):
            for i in range(KH):
                h0 = ph - i if i < ph else 0
                h1 = H + ph - i if i > ph else H
                for j in range(KW):
                    off = j - pw
                    t0 = -off if off < 0 else 0
                    t1 = W - off if off > 0 else W
                    L = t1 - t0
                    if L <= 0:
                        continue
                    for h in range(h0, h1):
                        hh = h + i - ph
                        gemm_rm(b'N', b'N', Ci, L, Co, 1.0,
                                &wijt[i * KW + j, 0, 0], Co,
                                &dyv[bi, 0, h, t0], plane, 1.0,
                                &dxv[bi, 0, hh, t0 + off], plane)
                        gemm_rm(b'N', b'T', Co, Ci, L, 1.0,
                                &dyv[bi, 0, h, t0], plane,
                                &xv[bi, 0, hh, t0 + off], plane, 1.0,
                                &dwv[i * KW + j, 0, 0], Ci)
    dw = np.ascontiguousarray(dwij.reshape(KH, KW, Co, Ci).transpose(2, 3, 0, 1))
    db = dy.sum(axis=(0, 2, 3))
    return dx, dw, db


def maxpool2d_forward(x):
    """2x2/stride-2 max pool. x: (B, C, H, W) -> (y, argmax)."""
    x = _c(x)
    cdef Py_ssize_t H2 = x.shape[2] // 2, W2 = x.shape[3] // 2
    y = np.empty((x.shape[0], x.shape[1], H2, W2), dtype=np.float64)
    arg = np.empty((x.shape[0], x.shape[1], H2, W2), dtype=np.int64)
    _maxpool2d_forward(x, y, arg)
    return y, arg


cdef void _maxpool2d_forward(double[:, :, :, ::1] x, double[:, :, :, ::1] y,
                             long long[:, :, :, ::1] arg) noexcept nogil:
    cdef Py_ssize_t B = x.shape[0], C = x.shape[1]
    cdef Py_ssize_t H2 = y.shape[2], W2 = y.shape[3]
    cdef Py_ssize_t bi, c, i, j, u, v, best
    cdef double m, cand
    for bi in range(B):
        for c in range(C):
            for i in range(H2):
                for j in range(W2):
                    m = x[bi, c, 2 * i, 2 * j]
                    best = 0
                    for u in range(2):
                        for v in range(2):
                            cand = x[bi, c, 2 * i + u, 2 * j + v]
                            if cand > m:
                                m = cand
                                best = 2 * u + v
                    y[bi, c, i, j] = m
                    arg[bi, c, i, j] = best


def maxpool2d_backward(dy, arg, H, W):
    """Scatter pooled gradients back to the (B, C, H, W) input grid."""
    dy = _c(dy)
    arg = np.ascontiguousarray(arg, dtype=np.int64)
    dx = np.zeros((dy.shape[0], dy.shape[1], H, W), dtype=np.float64)
    _maxpool2d_backward(dy, arg, dx)
    return dx


cdef void _maxpool2d_backward(double[:, :, :, ::1] dy, long long[:, :, :, ::1] arg,
                              double[:, :, :, ::1] dx) noexcept nogil:
    cdef Py_ssize_t B = dy.shape[0], C = dy.shape[1]
    cdef Py_ssize_t H2 = dy.shape[2], W2 = dy.shape[3]
    cdef Py_ssize_t bi, c, i, j, a
    for bi in range(B):
        for c in range(C):
            for i in range(H2):
                for j in range(W2):
                    a = arg[bi, c, i, j]
                    dx[bi, c, 2 * i + a // 2, 2 * j + a % 2] += dy[bi, c, i, j]
