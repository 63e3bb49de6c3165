"""Pure-numpy GRU/LSTM time-step kernels (fallback backend).

Same contracts as the compiled module ``_kernels``: the caller precomputes
the input-side projection gx = x @ Wx + bx for all timesteps; these kernels
run the recurrence and return the caches the backward pass needs.

Gate conventions follow the dual-bias form, with the GRU candidate gate
using r * (h @ Wh + bh) on the hidden side.
"""

from __future__ import annotations

import numpy as np


def _sigmoid(x):
    # exp overflow for very negative inputs saturates to 0.0, which is the
    # correct limit; silence the warning instead of branching.
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-x))


def gru_forward(gx, wh, bh, h0):
    """Run a GRU over gx [B,T,3H] (gate order r,z,n).

    Returns (hseq [B,T,H], cache) where cache = (r, z, n, ghn) per step.
    """
    B, T, H3 = gx.shape
    H = H3 // 3
    dtype = gx.dtype
    hseq = np.empty((B, T, H), dtype=dtype)
    r_c = np.empty((B, T, H), dtype=dtype)
    z_c = np.empty((B, T, H), dtype=dtype)
    n_c = np.empty((B, T, H), dtype=dtype)
    ghn_c = np.empty((B, T, H), dtype=dtype)
    h = h0
    for t in range(T):
        gh = h @ wh + bh
        r = _sigmoid(gx[:, t, :H] + gh[:, :H])
        z = _sigmoid(gx[:, t, H:2 * H] + gh[:, H:2 * H])
        ghn = gh[:, 2 * H:]
        n = np.tanh(gx[:, t, 2 * H:] + r * ghn)
        h = (1.0 - z) * n + z * h
        hseq[:, t] = h
        r_c[:, t] = r
        z_c[:, t] = z
        n_c[:, t] = n
        ghn_c[:, t] = ghn
    return hseq, (r_c, z_c, n_c, ghn_c)


def gru_backward(dh_seq, gx, hseq, wh, h0, cache):
    """Backprop through the GRU recurrence.

    dh_seq carries the incoming gradient at every timestep (zero where the
    output was not consumed). Returns (dgx, dwh, dbh, dh0).
    """
    r_c, z_c, n_c, ghn_c = cache
    B, T, H = hseq.shape
    dtype = gx.dtype
    dgx = np.empty_like(gx)
    dwh = np.zeros_like(wh)
    dbh = np.zeros(3 * H, dtype=dtype)
    dgh = np.empty((B, 3 * H), dtype=dtype)
    carry = np.zeros((B, H), dtype=dtype)
    for t in range(T - 1, -1, -1):
        dh = dh_seq[:, t] + carry
        h_prev = hseq[:, t - 1] if t > 0 else h0
        r = r_c[:, t]
        z = z_c[:, t]
        n = n_c[:, t]
        ghn = ghn_c[:, t]
        dn = dh * (1.0 - z)
        dz = dh * (h_prev - n)
        dan = dn * (1.0 - n * n)
        dr = dan * ghn
        daz = dz * z * (1.0 - z)
        dar = dr * r * (1.0 - r)
        dgx[:, t, :H] = dar
        dgx[:, t, H:2 * H] = daz
        dgx[:, t, 2 * H:] = dan
        dgh[:, :H] = dar
        dgh[:, H:2 * H] = daz
        dgh[:, 2 * H:] = dan * r
        dwh += h_prev.T @ dgh
        dbh += dgh.sum(axis=0)
        carry = dh * z + dgh @ wh.T
    return dgx, dwh, dbh, carry


def lstm_forward(gx, wh, bh, h0, c0):
    """Run an LSTM over gx [B,T,4H] (gate order i,f,g,o).

    Returns (hseq, cache) with cache = (i, f, g, o, c, tanh_c) per step.
    """
    B, T, H4 = gx.shape
    H = H4 // 4
    dtype = gx.dtype
    hseq = np.empty((B, T, H), dtype=dtype)
    i_c = np.empty((B, T, H), dtype=dtype)
    f_c = np.empty((B, T, H), dtype=dtype)
    g_c = np.empty((B, T, H), dtype=dtype)
    o_c = np.empty((B, T, H), dtype=dtype)
    c_c = np.empty((B, T, H), dtype=dtype)
    th_c = np.empty((B, T, H), dtype=dtype)
    h, c = h0, c0
    for t in range(T):
        a = gx[:, t] + h @ wh + bh
        i = _sigmoid(a[:, :H])
        f = _sigmoid(a[:, H:2 * H])
        g = np.tanh(a[:, 2 * H:3 * H])
        o = _sigmoid(a[:, 3 * H:])
        c = f * c + i * g
        th = np.tanh(c)
        h = o * th
        hseq[:, t] = h
        i_c[:, t] = i
        f_c[:, t] = f
        g_c[:, t] = g
        o_c[:, t] = o
        c_c[:, t] = c
        th_c[:, t] = th
    return hseq, (i_c, f_c, g_c, o_c, c_c, th_c)


def lstm_backward(dh_seq, gx, hseq, wh, h0, c0, cache):
    """Backprop through the LSTM recurrence; returns (dgx, dwh, dbh, dh0, dc0)."""
    i_c, f_c, g_c, o_c, c_c, th_c = cache
    B, T, H = hseq.shape
    dtype = gx.dtype
    dgx = np.empty_like(gx)
    dwh = np.zeros_like(wh)
    dbh = np.zeros(4 * H, dtype=dtype)
    da = np.empty((B, 4 * H), dtype=dtype)
    carry_h = np.zeros((B, H), dtype=dtype)
    carry_c = np.zeros((B, H), dtype=dtype)
    for t in range(T - 1, -1, -1):
        dh = dh_seq[:, t] + carry_h
        i = i_c[:, t]
        f = f_c[:, t]
        g = g_c[:, t]
        o = o_c[:, t]
        th = th_c[:, t]
        c_prev = c_c[:, t - 1] if t > 0 else c0
        h_prev = hseq[:, t - 1] if t > 0 else h0
        do = dh * th
        dc = carry_c + dh * o * (1.0 - th * th)
        da[:, :H] = dc * g * i * (1.0 - i)
        da[:, H:2 * H] = dc * c_prev * f * (1.0 - f)
        da[:, 2 * H:3 * H] = dc * i * (1.0 - g * g)
        da[:, 3 * H:] = do * o * (1.0 - o)
        carry_c = dc * f
        dgx[:, t] = da
        dwh += h_prev.T @ da
        dbh += da.sum(axis=0)
        carry_h = da @ wh.T
    return dgx, dwh, dbh, carry_h, carry_c
