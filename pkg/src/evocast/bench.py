"""Deployment benchmarks: single-window inference latency, artifact size,
and a training-step comparison of the kernel backends."""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .features import LOOKBACK, N_FEATURES
from .nn import backend
from .nn.model import Model
from .nn.optim import adam_init, adam_step


@dataclass
class BenchResult:
    model_id: str
    mean_ms: float
    median_ms: float
    p95_ms: float
    artifact_bytes: int | None
    param_count: int


def measure_latency(model, model_id: str = "", warmup: int = 100,
                    iters: int = 1000, artifact_path=None, rng_seed: int = 0) -> BenchResult:
    """Wall-clock per-inference statistics for a single window (B=1).

    Timed calls follow ``warmup`` untimed calls; run this serially, never
    alongside other work in the process.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    if warmup < 0:
        raise ValueError("warmup must be >= 0")
    rng = np.random.default_rng(rng_seed)
    x = rng.random((1, LOOKBACK, N_FEATURES), dtype=np.float32)
    predict = model.predict
    for _ in range(warmup):
        predict(x)
    samples = np.empty(iters)
    for i in range(iters):
        t0 = time.perf_counter()
        predict(x)
        samples[i] = time.perf_counter() - t0
    samples *= 1e3  # to milliseconds
    size = model_size(artifact_path) if artifact_path else None
    return BenchResult(
        model_id=model_id,
        mean_ms=float(samples.mean()),
        median_ms=float(np.median(samples)),
        p95_ms=float(np.percentile(samples, 95)),
        artifact_bytes=size,
        param_count=model.n_params(),
    )


def model_size(path) -> int:
    """On-disk byte count of a serialized artifact."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no artifact at {path}")
    return path.stat().st_size


def compare_backends(spec, batch_size: int = 256, iters: int = 20, seed: int = 0):
    """Time one forward+backward+Adam step per backend for a spec.

    Returns {backend: seconds_per_step}; only meaningful for specs with
    recurrent layers (other layers share one code path).
    """
    results = {}
    model = Model(spec)
    params = model.init_params(seed)
    rng = np.random.default_rng(seed)
    x = rng.random((batch_size, LOOKBACK, N_FEATURES), dtype=np.float32)
    y = rng.random((batch_size, N_FEATURES), dtype=np.float32)
    previous = backend.active_backend()
    try:
        for name in backend.available_backends():
            backend.use_backend(name)
            run_params = {k: v.copy() for k, v in params.items()}
            state = adam_init(run_params)
            _step(model, run_params, state, x, y, rng)  # warm the caches
            t0 = time.perf_counter()
            for _ in range(iters):
                _step(model, run_params, state, x, y, rng)
            results[name] = (time.perf_counter() - t0) / iters
    finally:
        backend.use_backend(previous)
    return results


def _step(model, params, state, x, y, rng):
    pred, caches = model.forward(x, params, training=True, rng=rng)
    dY = (2.0 / pred.size) * (pred - y)
    _, grads = model.backward(dY.astype(np.float32), caches, params)
    adam_step(params, grads, state)
