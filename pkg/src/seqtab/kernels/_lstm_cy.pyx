# cython: language_level=3
"""Compiled LSTM recurrence: per-step BLAS gemm plus fused gate math.

Only the sequential part lives here. The big (T*B, D) projections are plain
matrix products, which NumPy already hands to BLAS; this module owns the
per-timestep loop where Python overhead dominates.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport expf, tanhf
from scipy.linalg.cython_blas cimport sgemm

cnp.import_array()


cdef inline float _sigf(float x) noexcept nogil:
    return 1.0 / (1.0 + expf(-x))


def recurrent_forward(float[:, :, ::1] XW, float[:, ::1] Wh,
                      float[:, ::1] h0, float[:, ::1] c0,
                      float[:, :, ::1] IFOGf, float[:, :, ::1] C,
                      float[:, :, ::1] Ct, float[:, :, ::1] Hout):
    """Fill IFOGf/C/Ct/Hout in place; XW holds x_t Wx + b and is consumed."""
    cdef int T = XW.shape[0]
    cdef int B = XW.shape[1]
    cdef int G = XW.shape[2]
    cdef int H = G // 4
    cdef int t, bi, j
    cdef float zi, zf, zg, zo, cprev, cnew
    cdef float alpha = 1.0
    cdef float beta = 1.0
    cdef char trans_n = b'N'
    cdef int lda = G, ldb = H, ldc = G
    cdef float *wh_ptr
    cdef float *hprev_ptr
    cdef float *z_ptr
    if T == 0 or B == 0 or H == 0:
        return
    wh_ptr = &Wh[0, 0]
    with nogil:
        for t in range(T):
            hprev_ptr = &h0[0, 0] if t == 0 else &Hout[t - 1, 0, 0]
            z_ptr = &XW[t, 0, 0]
            # Z^T += Wh^T @ Hprev^T, all via the Fortran view of C arrays.
            sgemm(&trans_n, &trans_n, &G, &B, &H, &alpha,
                  wh_ptr, &lda, hprev_ptr, &ldb, &beta, z_ptr, &ldc)
            for bi in range(B):
                for j in range(H):
                    zi = _sigf(XW[t, bi, j])
                    zf = _sigf(XW[t, bi, H + j])
                    zg = tanhf(XW[t, bi, 2 * H + j])
                    zo = _sigf(XW[t, bi, 3 * H + j])
                    IFOGf[t, bi, j] = zi
                    IFOGf[t, bi, H + j] = zf
                    IFOGf[t, bi, 2 * H + j] = zg
                    IFOGf[t, bi, 3 * H + j] = zo
                    cprev = c0[bi, j] if t == 0 else C[t - 1, bi, j]
                    cnew = zf * cprev + zi * zg
                    C[t, bi, j] = cnew
                    cnew = tanhf(cnew)
                    Ct[t, bi, j] = cnew
                    Hout[t, bi, j] = zo * cnew


def recurrent_backward(float[:, ::1] Wh,
                       float[:, ::1] h0, float[:, ::1] c0,
                       float[:, :, ::1] IFOGf, float[:, :, ::1] C,
                       float[:, :, ::1] Ct, float[:, :, ::1] Hout,
                       float[:, :, ::1] dIFOG, float[:, ::1] dWh,
                       float[:, ::1] dh, float[:, ::1] dc):
    """Reverse pass. dh enters holding the final-state gradient and exits as
    dh0; dc enters zeroed and exits as dc0; dWh accumulates in place."""
    cdef int T = IFOGf.shape[0]
    cdef int B = IFOGf.shape[1]
    cdef int G = IFOGf.shape[2]
    cdef int H = G // 4
    cdef int t, bi, j
    cdef float gi, gf, gg, go, ct, cprev, dcv, dov
    cdef float alpha = 1.0
    cdef float beta_acc = 1.0
    cdef float beta_zero = 0.0
    cdef char trans_n = b'N'
    cdef char trans_t = b'T'
    cdef int lda = G, ldb_h = H, ldc_w = G, ldb_z = G, ldc_h = H
    cdef float *wh_ptr
    cdef float *hprev_ptr
    cdef float *dz_ptr
    if T == 0 or B == 0 or H == 0:
        return
    wh_ptr = &Wh[0, 0]
    with nogil:
        for t in range(T - 1, -1, -1):
            for bi in range(B):
                for j in range(H):
                    gi = IFOGf[t, bi, j]
                    gf = IFOGf[t, bi, H + j]
                    gg = IFOGf[t, bi, 2 * H + j]
                    go = IFOGf[t, bi, 3 * H + j]
                    ct = Ct[t, bi, j]
                    cprev = c0[bi, j] if t == 0 else C[t - 1, bi, j]
                    dcv = dc[bi, j] + dh[bi, j] * go * (1.0 - ct * ct)
                    dov = dh[bi, j] * ct
                    dIFOG[t, bi, j] = dcv * gg * gi * (1.0 - gi)
                    dIFOG[t, bi, H + j] = dcv * cprev * gf * (1.0 - gf)
                    dIFOG[t, bi, 2 * H + j] = dcv * gi * (1.0 - gg * gg)
                    dIFOG[t, bi, 3 * H + j] = dov * go * (1.0 - go)
                    dc[bi, j] = dcv * gf
            hprev_ptr = &h0[0, 0] if t == 0 else &Hout[t - 1, 0, 0]
            dz_ptr = &dIFOG[t, 0, 0]
            # dWh^T += dZ^T @ Hprev
            sgemm(&trans_n, &trans_t, &G, &H, &B, &alpha,
                  dz_ptr, &lda, hprev_ptr, &ldb_h, &beta_acc, &dWh[0, 0], &ldc_w)
            # dHprev^T = Wh @ dZ^T
            sgemm(&trans_t, &trans_n, &H, &B, &G, &alpha,
                  wh_ptr, &lda, dz_ptr, &ldb_z, &beta_zero, &dh[0, 0], &ldc_h)
