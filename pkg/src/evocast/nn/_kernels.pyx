"""Compiled GRU/LSTM time-step kernels.

Matmuls go through the same BLAS numpy links against (via
scipy.linalg.cython_blas); the per-step gate math runs in fused C loops
instead of chains of numpy temporaries. Fused-type specializations cover
float32 (training) and float64 (gradient checks).

Contracts mirror _kernels_np exactly.
"""

import numpy as np

from cython cimport floating
from libc.math cimport exp, expf, tanh, tanhf
from scipy.linalg.cython_blas cimport dgemm, sgemm


cdef inline floating _sig(floating x) noexcept nogil:
    if floating is float:
        return <float>1.0 / (<float>1.0 + expf(-x))
    else:
        return 1.0 / (1.0 + exp(-x))


cdef inline floating _th(floating x) noexcept nogil:
    if floating is float:
        return tanhf(x)
    else:
        return tanh(x)


# Row-major GEMM wrappers over the column-major BLAS (swap-operand trick).
# All leading dimensions are row strides of the row-major operands.

cdef void _mm(floating* a, floating* b, floating* c,
              int m, int k, int n, int lda, int ldb, int ldc,
              floating beta) noexcept nogil:
    # c[m,n] = a[m,k] @ b[k,n] + beta * c
    cdef char tn = b'N'
    cdef floating alpha = <floating>1.0
    if floating is float:
        sgemm(&tn, &tn, &n, &m, &k, &alpha, b, &ldb, a, &lda, &beta, c, &ldc)
    else:
        dgemm(&tn, &tn, &n, &m, &k, &alpha, b, &ldb, a, &lda, &beta, c, &ldc)


cdef void _mm_at_b(floating* a, floating* b, floating* c,
                   int m, int k, int n, int lda, int ldb, int ldc,
                   floating beta) noexcept nogil:
    # c[k,n] = a[m,k]^T @ b[m,n] + beta * c
    cdef char tn = b'N'
    cdef char tt = b'T'
    cdef floating alpha = <floating>1.0
    if floating is float:
        sgemm(&tn, &tt, &n, &k, &m, &alpha, b, &ldb, a, &lda, &beta, c, &ldc)
    else:
        dgemm(&tn, &tt, &n, &k, &m, &alpha, b, &ldb, a, &lda, &beta, c, &ldc)


cdef void _mm_a_bt(floating* a, floating* b, floating* c,
                   int m, int k, int n, int lda, int ldb, int ldc,
                   floating beta) noexcept nogil:
    # c[m,n] = a[m,k] @ b[n,k]^T + beta * c
    cdef char tn = b'N'
    cdef char tt = b'T'
    cdef floating alpha = <floating>1.0
    if floating is float:
        sgemm(&tt, &tn, &n, &m, &k, &alpha, b, &ldb, a, &lda, &beta, c, &ldc)
    else:
        dgemm(&tt, &tn, &n, &m, &k, &alpha, b, &ldb, a, &lda, &beta, c, &ldc)


def gru_forward(floating[:, :, ::1] gx, floating[:, ::1] wh,
                floating[::1] bh, floating[:, ::1] h0):
    """Run a GRU over gx [B,T,3H]; returns (hseq, (r, z, n, ghn))."""
    cdef int B = gx.shape[0]
    cdef int T = gx.shape[1]
    cdef int H = wh.shape[0]
    cdef int H3 = 3 * H
    dtype = np.float32 if floating is float else np.float64
    hseq_arr = np.empty((B, T, H), dtype=dtype)
    r_arr = np.empty((B, T, H), dtype=dtype)
    z_arr = np.empty((B, T, H), dtype=dtype)
    n_arr = np.empty((B, T, H), dtype=dtype)
    ghn_arr = np.empty((B, T, H), dtype=dtype)
    gh_arr = np.empty((B, H3), dtype=dtype)
    cdef floating[:, :, ::1] hseq = hseq_arr
    cdef floating[:, :, ::1] r_c = r_arr
    cdef floating[:, :, ::1] z_c = z_arr
    cdef floating[:, :, ::1] n_c = n_arr
    cdef floating[:, :, ::1] ghn_c = ghn_arr
    cdef floating[:, ::1] gh = gh_arr
    cdef int t, b, j, ld_prev
    cdef floating rr, zz, nn, gn, hp
    cdef floating* h_prev
    with nogil:
        for t in range(T):
            if t == 0:
                h_prev = &h0[0, 0]
                ld_prev = H
            else:
                h_prev = &hseq[0, t - 1, 0]
                ld_prev = T * H
            _mm(h_prev, &wh[0, 0], &gh[0, 0], B, H, H3, ld_prev, H3, H3,
                <floating>0.0)
            for b in range(B):
                for j in range(H):
                    rr = _sig(gx[b, t, j] + gh[b, j] + bh[j])
                    zz = _sig(gx[b, t, H + j] + gh[b, H + j] + bh[H + j])
                    gn = gh[b, 2 * H + j] + bh[2 * H + j]
                    nn = _th(gx[b, t, 2 * H + j] + rr * gn)
                    hp = h0[b, j] if t == 0 else hseq[b, t - 1, j]
                    hseq[b, t, j] = (<floating>1.0 - zz) * nn + zz * hp
                    r_c[b, t, j] = rr
                    z_c[b, t, j] = zz
                    n_c[b, t, j] = nn
                    ghn_c[b, t, j] = gn
    return hseq_arr, (r_arr, z_arr, n_arr, ghn_arr)


def gru_backward(floating[:, :, ::1] dh_seq, floating[:, :, ::1] gx,
                 floating[:, :, ::1] hseq, floating[:, ::1] wh,
                 floating[:, ::1] h0, cache):
    """Backprop through the GRU recurrence; returns (dgx, dwh, dbh, dh0)."""
    cdef int B = gx.shape[0]
    cdef int T = gx.shape[1]
    cdef int H = wh.shape[0]
    cdef int H3 = 3 * H
    dtype = np.float32 if floating is float else np.float64
    r_arr, z_arr, n_arr, ghn_arr = cache
    cdef floating[:, :, ::1] r_c = r_arr
    cdef floating[:, :, ::1] z_c = z_arr
    cdef floating[:, :, ::1] n_c = n_arr
    cdef floating[:, :, ::1] ghn_c = ghn_arr
    dgx_arr = np.empty((B, T, H3), dtype=dtype)
    dwh_arr = np.zeros((H, H3), dtype=dtype)
    dbh_arr = np.zeros(H3, dtype=dtype)
    dgh_arr = np.empty((B, H3), dtype=dtype)
    carry_arr = np.zeros((B, H), dtype=dtype)
    cdef floating[:, :, ::1] dgx = dgx_arr
    cdef floating[:, ::1] dwh = dwh_arr
    cdef floating[::1] dbh = dbh_arr
    cdef floating[:, ::1] dgh = dgh_arr
    cdef floating[:, ::1] carry = carry_arr
    cdef int t, b, j, ld_prev
    cdef floating dh, hp, rr, zz, nn, gn, dn, dz, dan, dr, daz, dar, dghn
    cdef floating* h_prev
    with nogil:
        for t in range(T - 1, -1, -1):
            if t == 0:
                h_prev = &h0[0, 0]
                ld_prev = H
            else:
                h_prev = &hseq[0, t - 1, 0]
                ld_prev = T * H
            for b in range(B):
                for j in range(H):
                    dh = dh_seq[b, t, j] + carry[b, j]
                    hp = h0[b, j] if t == 0 else hseq[b, t - 1, j]
                    rr = r_c[b, t, j]
                    zz = z_c[b, t, j]
                    nn = n_c[b, t, j]
                    gn = ghn_c[b, t, j]
                    dn = dh * (<floating>1.0 - zz)
                    dz = dh * (hp - nn)
                    dan = dn * (<floating>1.0 - nn * nn)
                    dr = dan * gn
                    daz = dz * zz * (<floating>1.0 - zz)
                    dar = dr * rr * (<floating>1.0 - rr)
                    dghn = dan * rr
                    dgx[b, t, j] = dar
                    dgx[b, t, H + j] = daz
                    dgx[b, t, 2 * H + j] = dan
                    dgh[b, j] = dar
                    dgh[b, H + j] = daz
                    dgh[b, 2 * H + j] = dghn
                    dbh[j] += dar
                    dbh[H + j] += daz
                    dbh[2 * H + j] += dghn
                    carry[b, j] = dh * zz
            _mm_at_b(h_prev, &dgh[0, 0], &dwh[0, 0], B, H, H3,
                     ld_prev, H3, H3, <floating>1.0)
            _mm_a_bt(&dgh[0, 0], &wh[0, 0], &carry[0, 0], B, H3, H,
                     H3, H3, H, <floating>1.0)
    return dgx_arr, dwh_arr, dbh_arr, carry_arr


def lstm_forward(floating[:, :, ::1] gx, floating[:, ::1] wh,
                 floating[::1] bh, floating[:, ::1] h0, floating[:, ::1] c0):
    """Run an LSTM over gx [B,T,4H]; returns (hseq, (i, f, g, o, c, tanh_c))."""
    cdef int B = gx.shape[0]
    cdef int T = gx.shape[1]
    cdef int H = wh.shape[0]
    cdef int H4 = 4 * H
    dtype = np.float32 if floating is float else np.float64
    hseq_arr = np.empty((B, T, H), dtype=dtype)
    i_arr = np.empty((B, T, H), dtype=dtype)
    f_arr = np.empty((B, T, H), dtype=dtype)
    g_arr = np.empty((B, T, H), dtype=dtype)
    o_arr = np.empty((B, T, H), dtype=dtype)
    c_arr = np.empty((B, T, H), dtype=dtype)
    th_arr = np.empty((B, T, H), dtype=dtype)
    ga_arr = np.empty((B, H4), dtype=dtype)
    cdef floating[:, :, ::1] hseq = hseq_arr
    cdef floating[:, :, ::1] i_c = i_arr
    cdef floating[:, :, ::1] f_c = f_arr
    cdef floating[:, :, ::1] g_c = g_arr
    cdef floating[:, :, ::1] o_c = o_arr
    cdef floating[:, :, ::1] c_c = c_arr
    cdef floating[:, :, ::1] th_c = th_arr
    cdef floating[:, ::1] ga = ga_arr
    cdef int t, b, j, ld_prev
    cdef floating ii, ff, gg, oo, cc, tt, cp
    cdef floating* h_prev
    with nogil:
        for t in range(T):
            if t == 0:
                h_prev = &h0[0, 0]
                ld_prev = H
            else:
                h_prev = &hseq[0, t - 1, 0]
                ld_prev = T * H
            _mm(h_prev, &wh[0, 0], &ga[0, 0], B, H, H4, ld_prev, H4, H4,
                <floating>0.0)
            for b in range(B):
                for j in range(H):
                    ii = _sig(gx[b, t, j] + ga[b, j] + bh[j])
                    ff = _sig(gx[b, t, H + j] + ga[b, H + j] + bh[H + j])
                    gg = _th(gx[b, t, 2 * H + j] + ga[b, 2 * H + j] + bh[2 * H + j])
                    oo = _sig(gx[b, t, 3 * H + j] + ga[b, 3 * H + j] + bh[3 * H + j])
                    cp = c0[b, j] if t == 0 else c_c[b, t - 1, j]
                    cc = ff * cp + ii * gg
                    tt = _th(cc)
                    hseq[b, t, j] = oo * tt
                    i_c[b, t, j] = ii
                    f_c[b, t, j] = ff
                    g_c[b, t, j] = gg
                    o_c[b, t, j] = oo
                    c_c[b, t, j] = cc
                    th_c[b, t, j] = tt
    return hseq_arr, (i_arr, f_arr, g_arr, o_arr, c_arr, th_arr)


def lstm_backward(floating[:, :, ::1] dh_seq, floating[:, :, ::1] gx,
                  floating[:, :, ::1] hseq, floating[:, ::1] wh,
                  floating[:, ::1] h0, floating[:, ::1] c0, cache):
    """Backprop through the LSTM recurrence; returns (dgx, dwh, dbh, dh0, dc0)."""
    cdef int B = gx.shape[0]
    cdef int T = gx.shape[1]
    cdef int H = wh.shape[0]
    cdef int H4 = 4 * H
    dtype = np.float32 if floating is float else np.float64
    i_arr, f_arr, g_arr, o_arr, c_arr, th_arr = cache
    cdef floating[:, :, ::1] i_c = i_arr
    cdef floating[:, :, ::1] f_c = f_arr
    cdef floating[:, :, ::1] g_c = g_arr
    cdef floating[:, :, ::1] o_c = o_arr
    cdef floating[:, :, ::1] c_c = c_arr
    cdef floating[:, :, ::1] th_c = th_arr
    dgx_arr = np.empty((B, T, H4), dtype=dtype)
    dwh_arr = np.zeros((H, H4), dtype=dtype)
    dbh_arr = np.zeros(H4, dtype=dtype)
    da_arr = np.empty((B, H4), dtype=dtype)
    carry_h_arr = np.zeros((B, H), dtype=dtype)
    carry_c_arr = np.zeros((B, H), dtype=dtype)
    cdef floating[:, :, ::1] dgx = dgx_arr
    cdef floating[:, ::1] dwh = dwh_arr
    cdef floating[::1] dbh = dbh_arr
    cdef floating[:, ::1] da = da_arr
    cdef floating[:, ::1] carry_h = carry_h_arr
    cdef floating[:, ::1] carry_c = carry_c_arr
    cdef int t, b, j, ld_prev
    cdef floating dh, dc, ii, ff, gg, oo, tt, cp, do_
    cdef floating dai, daf, dag, dao
    cdef floating* h_prev
    with nogil:
        for t in range(T - 1, -1, -1):
            if t == 0:
                h_prev = &h0[0, 0]
                ld_prev = H
            else:
                h_prev = &hseq[0, t - 1, 0]
                ld_prev = T * H
            for b in range(B):
                for j in range(H):
                    dh = dh_seq[b, t, j] + carry_h[b, j]
                    ii = i_c[b, t, j]
                    ff = f_c[b, t, j]
                    gg = g_c[b, t, j]
                    oo = o_c[b, t, j]
                    tt = th_c[b, t, j]
                    cp = c0[b, j] if t == 0 else c_c[b, t - 1, j]
                    do_ = dh * tt
                    dc = carry_c[b, j] + dh * oo * (<floating>1.0 - tt * tt)
                    dai = dc * gg * ii * (<floating>1.0 - ii)
                    daf = dc * cp * ff * (<floating>1.0 - ff)
                    dag = dc * ii * (<floating>1.0 - gg * gg)
                    dao = do_ * oo * (<floating>1.0 - oo)
                    carry_c[b, j] = dc * ff
                    da[b, j] = dai
                    da[b, H + j] = daf
                    da[b, 2 * H + j] = dag
                    da[b, 3 * H + j] = dao
                    dgx[b, t, j] = dai
                    dgx[b, t, H + j] = daf
                    dgx[b, t, 2 * H + j] = dag
                    dgx[b, t, 3 * H + j] = dao
                    dbh[j] += dai
                    dbh[H + j] += daf
                    dbh[2 * H + j] += dag
                    dbh[3 * H + j] += dao
            _mm_at_b(h_prev, &da[0, 0], &dwh[0, 0], B, H, H4,
                     ld_prev, H4, H4, <floating>1.0)
            _mm_a_bt(&da[0, 0], &wh[0, 0], &carry_h[0, 0], B, H4, H,
                     H4, H4, H, <floating>0.0)
    return dgx_arr, dwh_arr, dbh_arr, carry_h_arr, carry_c_arr
