"""Architecture descriptions and the assembled forecasting model.

A ModelSpec is an ordered stack of 1-4 layers (temporal layers first, then
dense layers) plus an implicit linear output head projecting to the 8
forecast features. Sequence outputs are reduced before the dense stage:
recurrent layers contribute their last hidden state, conv/attention layers
their time-mean. Specs with no temporal layer flatten the whole window.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..features import LOOKBACK, N_FEATURES
from .layers import LAYER_CLASSES

TEMPORAL_KINDS = ("conv", "gru", "lstm", "attn")
RECURRENT_KINDS = ("gru", "lstm")
KINDS = ("dense",) + TEMPORAL_KINDS

# Discrete search-space choices; the engine itself accepts any positive
# units (gradient checks use tiny layers), the search enforces these.
UNIT_CHOICES = (32, 64, 128, 256)
DROPOUT_CHOICES = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5)


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    units: int
    dropout: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.units < 1:
            raise ValueError(f"units must be positive, got {self.units}")
        if not 0.0 <= self.dropout <= 0.5:
            raise ValueError(f"dropout must be in [0, 0.5], got {self.dropout}")


@dataclass(frozen=True)
class ModelSpec:
    layers: tuple[LayerSpec, ...]

    def __post_init__(self):
        if not 1 <= len(self.layers) <= 4:
            raise ValueError(f"depth must be 1-4, got {len(self.layers)}")
        seen_dense = False
        for layer in self.layers:
            if layer.kind == "dense":
                seen_dense = True
            elif seen_dense:
                raise ValueError("temporal layers must precede dense layers")

    @property
    def depth(self) -> int:
        return len(self.layers)

    def descriptor(self) -> list[dict]:
        return [{"kind": l.kind, "units": l.units, "dropout": l.dropout} for l in self.layers]

    @classmethod
    def from_descriptor(cls, desc) -> "ModelSpec":
        return cls(tuple(LayerSpec(d["kind"], int(d["units"]), float(d["dropout"])) for d in desc))

    def __str__(self):
        return "-".join(f"{l.kind}{l.units}" + (f"d{l.dropout}" if l.dropout else "")
                        for l in self.layers)


def in_search_space(spec: ModelSpec) -> bool:
    """True when every layer uses the discrete search-space choices."""
    return all(l.units in UNIT_CHOICES and
               round(l.dropout, 1) in DROPOUT_CHOICES for l in spec.layers)


def count_params(spec: ModelSpec, input_features: int = N_FEATURES,
                 lookback: int = LOOKBACK) -> int:
    """Exact trainable-parameter count for a spec (head included)."""
    has_temporal = any(l.kind in TEMPORAL_KINDS for l in spec.layers)
    width = input_features if has_temporal else lookback * input_features
    total = 0
    for l in spec.layers:
        u = l.units
        if l.kind == "gru":
            total += 3 * u * (width + u + 2)
        elif l.kind == "lstm":
            total += 4 * u * (width + u + 2)
        elif l.kind == "conv":
            total += width * 3 * u + u
        elif l.kind == "attn":
            total += width * u + u + 4 * (u * u + u)
        else:  # dense
            total += width * u + u
        width = u
    total += width * input_features + input_features  # linear head
    return total


class Model:
    """Buildable network for a ModelSpec: parameter layout, forward, backward."""

    def __init__(self, spec: ModelSpec, n_features: int = N_FEATURES,
                 lookback: int = LOOKBACK, dtype=np.float32):
        self.spec = spec
        self.n_features = n_features
        self.lookback = lookback
        self.dtype = np.dtype(dtype)
        self.temporal = []  # (prefix, layer, dropout)
        self.dense = []
        width = n_features
        has_temporal = any(l.kind in TEMPORAL_KINDS for l in spec.layers)
        if not has_temporal:
            width = lookback * n_features
        for i, ls in enumerate(spec.layers):
            cls = LAYER_CLASSES[ls.kind]
            layer = cls(width, ls.units)
            (self.temporal if ls.kind in TEMPORAL_KINDS else self.dense).append(
                (f"l{i}", layer, ls.dropout))
            width = ls.units
        self.head = LAYER_CLASSES["dense"](width, n_features, relu=False)
        if self.temporal:
            last_kind = spec.layers[len(self.temporal) - 1].kind
            self.reduce = "last" if last_kind in RECURRENT_KINDS else "mean"
        else:
            self.reduce = "flatten"

    # -- parameters --------------------------------------------------------

    def param_defs(self):
        defs = {}
        for prefix, layer, _ in self.temporal + self.dense:
            for name, (shape, fan_in) in layer.param_defs().items():
                defs[f"{prefix}.{name}"] = (shape, fan_in)
        for name, (shape, fan_in) in self.head.param_defs().items():
            defs[f"head.{name}"] = (shape, fan_in)
        return defs

    def init_params(self, seed: int) -> dict[str, np.ndarray]:
        """Uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)] per tensor, seeded."""
        rng = np.random.default_rng(seed)
        params = {}
        for name, (shape, fan_in) in self.param_defs().items():
            bound = 1.0 / np.sqrt(fan_in)
            params[name] = rng.uniform(-bound, bound, size=shape).astype(self.dtype)
        return params

    def n_params(self) -> int:
        return sum(int(np.prod(shape)) for shape, _ in self.param_defs().values())

    def _sub(self, params, prefix):
        plen = len(prefix) + 1
        return {k[plen:]: v for k, v in params.items() if k.startswith(prefix + ".")}

    # -- forward / backward -------------------------------------------------

    def forward(self, X, params, training=False, rng=None):
        X = np.asarray(X, dtype=self.dtype)
        if X.ndim != 3 or X.shape[1] != self.lookback or X.shape[2] != self.n_features:
            raise ValueError(
                f"expected input [B x {self.lookback} x {self.n_features}], got {X.shape}")
        if not np.isfinite(X).all():
            raise ValueError("non-finite values in input")
        if training and rng is None and any(d > 0 for _, _, d in self.temporal + self.dense):
            raise ValueError("training forward with dropout needs an rng")
        caches = {"temporal": [], "dense": [], "B": X.shape[0]}
        h = X
        n_temporal = len(self.temporal)
        for i, (prefix, layer, drop) in enumerate(self.temporal):
            h, c = layer.forward(h, self._sub(params, prefix), training)
            if i == n_temporal - 1:
                h = h[:, -1, :] if self.reduce == "last" else h.mean(axis=1)
            h, mask = self._dropout(h, drop, training, rng)
            caches["temporal"].append((c, mask))
        if not self.temporal:
            h = h.reshape(h.shape[0], -1)
        for prefix, layer, drop in self.dense:
            h, c = layer.forward(h, self._sub(params, prefix), training)
            h, mask = self._dropout(h, drop, training, rng)
            caches["dense"].append((c, mask))
        y, c = self.head.forward(h, self._sub(params, "head"), training)
        caches["head"] = c
        return y, caches

    def backward(self, dY, caches, params):
        """Gradients of a scalar loss w.r.t. params and input, given dL/dY."""
        grads = {}
        dh, head_grads = self.head.backward(dY, caches["head"], self._sub(params, "head"))
        for name, g in head_grads.items():
            grads[f"head.{name}"] = g
        for (prefix, layer, _), (cache, mask) in zip(
                reversed(self.dense), reversed(caches["dense"])):
            if mask is not None:
                dh = dh * mask
            dh, layer_grads = layer.backward(dh, cache, self._sub(params, prefix))
            for name, g in layer_grads.items():
                grads[f"{prefix}.{name}"] = g
        n_temporal = len(self.temporal)
        for rev_i, ((prefix, layer, _), (cache, mask)) in enumerate(zip(
                reversed(self.temporal), reversed(caches["temporal"]))):
            if mask is not None:
                dh = dh * mask
            if rev_i == 0:  # undo the sequence reduction of the last temporal layer
                B = caches["B"]
                T, H = self.lookback, dh.shape[-1]
                dseq = np.zeros((B, T, H), dtype=self.dtype)
                if self.reduce == "last":
                    dseq[:, -1, :] = dh
                else:
                    dseq += (dh / T)[:, None, :]
                dh = dseq
            dh, layer_grads = layer.backward(dh, cache, self._sub(params, prefix))
            for name, g in layer_grads.items():
                grads[f"{prefix}.{name}"] = g
        if not self.temporal:
            dh = dh.reshape(caches["B"], self.lookback, self.n_features)
        return dh, grads

    def predict(self, X, params):
        y, _ = self.forward(X, params, training=False)
        return y

    def _dropout(self, h, rate, training, rng):
        if not training or rate <= 0.0:
            return h, None
        keep = (rng.random(h.shape) >= rate).astype(self.dtype) / self.dtype.type(1.0 - rate)
        return h * keep, keep


def init_weights(spec: ModelSpec, seed: int, dtype=np.float32) -> dict[str, np.ndarray]:
    """Initialize a fresh parameter set for a spec (see Model.init_params)."""
    return Model(spec, dtype=dtype).init_params(seed)
