"""Layer forward/backward passes with hand-derived gradients.

Temporal layers map sequences [B,T,C] -> [B,T,units]; Dense maps vectors
[B,C] -> [B,units]. Each layer exposes param_defs() (name -> (shape,
fan_in)), forward() returning (output, cache), and backward() returning
(d_input, grads). Dropout lives in the Model, not here.
"""

from __future__ import annotations

import math

import numpy as np

from . import backend


class DenseLayer:
    """y = act(x @ W + b); ReLU for hidden layers, linear for the head."""

    kind = "dense"
    temporal = False

    def __init__(self, in_width, units, relu=True):
        self.in_width = in_width
        self.units = units
        self.relu = relu

    def param_defs(self):
        return {
            "W": ((self.in_width, self.units), self.in_width),
            "b": ((self.units,), self.in_width),
        }

    def forward(self, x, p, training=False):
        a = x @ p["W"] + p["b"]
        y = np.maximum(a, 0.0) if self.relu else a
        return y, (x, a)

    def backward(self, dy, cache, p):
        x, a = cache
        da = dy * (a > 0) if self.relu else dy
        grads = {"W": x.T @ da, "b": da.sum(axis=0)}
        dx = da @ p["W"].T
        return dx, grads


class Conv1DLayer:
    """Temporal convolution, kernel 3, same-padding over time, ReLU."""

    kind = "conv"
    temporal = True
    kernel = 3

    def __init__(self, in_width, units):
        self.in_width = in_width
        self.units = units

    def param_defs(self):
        k = self.kernel
        return {
            "W": ((k, self.in_width, self.units), k * self.in_width),
            "b": ((self.units,), k * self.in_width),
        }

    def _im2col(self, x):
        B, T, C = x.shape
        xp = np.zeros((B, T + 2, C), dtype=x.dtype)
        xp[:, 1:T + 1] = x
        # column block dt holds the input shifted by dt-1 hours
        return np.concatenate([xp[:, 0:T], xp[:, 1:T + 1], xp[:, 2:T + 2]], axis=2)

    def forward(self, x, p, training=False):
        B, T, C = x.shape
        cols = self._im2col(x)
        w2 = p["W"].reshape(self.kernel * C, self.units)
        a = cols.reshape(B * T, -1) @ w2 + p["b"]
        a = a.reshape(B, T, self.units)
        y = np.maximum(a, 0.0)
        return y, (cols, a, x.shape)

    def backward(self, dy, cache, p):
        cols, a, x_shape = cache
        B, T, C = x_shape
        da = (dy * (a > 0)).reshape(B * T, self.units)
        w2 = p["W"].reshape(self.kernel * C, self.units)
        dw2 = cols.reshape(B * T, -1).T @ da
        grads = {"W": dw2.reshape(p["W"].shape), "b": da.sum(axis=0)}
        dcols = (da @ w2.T).reshape(B, T, self.kernel * C)
        dxp = np.zeros((B, T + 2, C), dtype=dy.dtype)
        for dt in range(self.kernel):
            dxp[:, dt:dt + T] += dcols[:, :, dt * C:(dt + 1) * C]
        return dxp[:, 1:T + 1], grads


class GRULayer:
    """Gated recurrent unit; input projection here, recurrence in the backend."""

    kind = "gru"
    temporal = True

    def __init__(self, in_width, units):
        self.in_width = in_width
        self.units = units

    def param_defs(self):
        H = self.units
        return {
            "Wx": ((self.in_width, 3 * H), self.in_width),
            "Wh": ((H, 3 * H), H),
            "bx": ((3 * H,), self.in_width),
            "bh": ((3 * H,), H),
        }

    def forward(self, x, p, training=False):
        B, T, C = x.shape
        gx = (x.reshape(B * T, C) @ p["Wx"] + p["bx"]).reshape(B, T, 3 * self.units)
        h0 = np.zeros((B, self.units), dtype=x.dtype)
        hseq, rec_cache = backend.gru_forward(gx, p["Wh"], p["bh"], h0)
        return hseq, (x, gx, hseq, h0, rec_cache)

    def backward(self, dhseq, cache, p):
        x, gx, hseq, h0, rec_cache = cache
        B, T, C = x.shape
        dhseq = np.ascontiguousarray(dhseq)
        dgx, dwh, dbh, _ = backend.gru_backward(dhseq, gx, hseq, p["Wh"], h0, rec_cache)
        dgx2 = dgx.reshape(B * T, -1)
        grads = {
            "Wx": x.reshape(B * T, C).T @ dgx2,
            "Wh": dwh,
            "bx": dgx2.sum(axis=0),
            "bh": dbh,
        }
        dx = (dgx2 @ p["Wx"].T).reshape(B, T, C)
        return dx, grads


class LSTMLayer:
    kind = "lstm"
    temporal = True

    def __init__(self, in_width, units):
        self.in_width = in_width
        self.units = units

    def param_defs(self):
        H = self.units
        return {
            "Wx": ((self.in_width, 4 * H), self.in_width),
            "Wh": ((H, 4 * H), H),
            "bx": ((4 * H,), self.in_width),
            "bh": ((4 * H,), H),
        }

    def forward(self, x, p, training=False):
        B, T, C = x.shape
        gx = (x.reshape(B * T, C) @ p["Wx"] + p["bx"]).reshape(B, T, 4 * self.units)
        h0 = np.zeros((B, self.units), dtype=x.dtype)
        c0 = np.zeros((B, self.units), dtype=x.dtype)
        hseq, rec_cache = backend.lstm_forward(gx, p["Wh"], p["bh"], h0, c0)
        return hseq, (x, gx, hseq, h0, c0, rec_cache)

    def backward(self, dhseq, cache, p):
        x, gx, hseq, h0, c0, rec_cache = cache
        B, T, C = x.shape
        dhseq = np.ascontiguousarray(dhseq)
        dgx, dwh, dbh, _, _ = backend.lstm_backward(
            dhseq, gx, hseq, p["Wh"], h0, c0, rec_cache)
        dgx2 = dgx.reshape(B * T, -1)
        grads = {
            "Wx": x.reshape(B * T, C).T @ dgx2,
            "Wh": dwh,
            "bx": dgx2.sum(axis=0),
            "bh": dbh,
        }
        dx = (dgx2 @ p["Wx"].T).reshape(B, T, C)
        return dx, grads


class AttentionLayer:
    """Multi-head self-attention over the window's timesteps.

    Input projection to the layer width, then 4 heads of scaled dot-product
    attention and an output projection. No positional encoding: 24-step
    windows are short and ordering information already enters through the
    surrounding temporal layers.
    """

    kind = "attn"
    temporal = True
    heads = 4

    def __init__(self, in_width, units):
        if units % self.heads:
            raise ValueError(f"attention width {units} not divisible by {self.heads} heads")
        self.in_width = in_width
        self.units = units

    def param_defs(self):
        d = self.units
        defs = {"Win": ((self.in_width, d), self.in_width), "bin": ((d,), self.in_width)}
        for name in ("Wq", "Wk", "Wv", "Wo"):
            defs[name] = ((d, d), d)
        for name in ("bq", "bk", "bv", "bo"):
            defs[name] = ((d,), d)
        return defs

    def _split(self, m):
        B, T, d = m.shape
        dk = d // self.heads
        return m.reshape(B, T, self.heads, dk).transpose(0, 2, 1, 3)

    def _merge(self, m):
        B, h, T, dk = m.shape
        return m.transpose(0, 2, 1, 3).reshape(B, T, h * dk)

    def forward(self, x, p, training=False):
        xp = x @ p["Win"] + p["bin"]
        q = self._split(xp @ p["Wq"] + p["bq"])
        k = self._split(xp @ p["Wk"] + p["bk"])
        v = self._split(xp @ p["Wv"] + p["bv"])
        # python-float scale: a numpy scalar would promote float32 to float64
        scale = 1.0 / math.sqrt(q.shape[-1])
        scores = (q @ k.transpose(0, 1, 3, 2)) * scale
        scores -= scores.max(axis=-1, keepdims=True)
        attn = np.exp(scores)
        attn /= attn.sum(axis=-1, keepdims=True)
        ctx = self._merge(attn @ v)
        y = ctx @ p["Wo"] + p["bo"]
        return y, (x, xp, q, k, v, attn, ctx)

    def backward(self, dy, cache, p):
        x, xp, q, k, v, attn, ctx = cache
        B, T, _ = x.shape
        scale = 1.0 / math.sqrt(q.shape[-1])
        flat = lambda m: m.reshape(B * T, -1)

        grads = {"Wo": flat(ctx).T @ flat(dy), "bo": flat(dy).sum(axis=0)}
        dctx = self._split(dy @ p["Wo"].T)
        dattn = dctx @ v.transpose(0, 1, 3, 2)
        dv = attn.transpose(0, 1, 3, 2) @ dctx
        dscores = attn * (dattn - (dattn * attn).sum(axis=-1, keepdims=True))
        dq = (dscores @ k) * scale
        dk = (dscores.transpose(0, 1, 3, 2) @ q) * scale

        dq, dk, dv = self._merge(dq), self._merge(dk), self._merge(dv)
        grads["Wq"] = flat(xp).T @ flat(dq)
        grads["bq"] = flat(dq).sum(axis=0)
        grads["Wk"] = flat(xp).T @ flat(dk)
        grads["bk"] = flat(dk).sum(axis=0)
        grads["Wv"] = flat(xp).T @ flat(dv)
        grads["bv"] = flat(dv).sum(axis=0)
        dxp = dq @ p["Wq"].T + dk @ p["Wk"].T + dv @ p["Wv"].T
        grads["Win"] = flat(x).T @ flat(dxp)
        grads["bin"] = flat(dxp).sum(axis=0)
        dx = dxp @ p["Win"].T
        return dx, grads


LAYER_CLASSES = {
    "dense": DenseLayer,
    "conv": Conv1DLayer,
    "gru": GRULayer,
    "lstm": LSTMLayer,
    "attn": AttentionLayer,
}
