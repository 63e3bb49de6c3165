"""Selects the recurrent-kernel backend at import time.

The compiled module is preferred when present; the numpy twin is the
fallback. Set EVOCAST_KERNELS=python to force the fallback, or call
use_backend() (tests use it to exercise both paths).
"""

from __future__ import annotations

import os

from . import _kernels_np as _py_impl

try:
    from . import _kernels as _cy_impl
except ImportError:
    _cy_impl = None

_FORCE = os.environ.get("EVOCAST_KERNELS", "").strip().lower()
if _FORCE in ("py", "python", "numpy"):
    _impl = _py_impl
elif _FORCE in ("compiled", "cython", "c"):
    if _cy_impl is None:
        raise ImportError("EVOCAST_KERNELS requested the compiled backend, but it is not built")
    _impl = _cy_impl
else:
    _impl = _cy_impl if _cy_impl is not None else _py_impl


def active_backend() -> str:
    return "compiled" if _impl is _cy_impl and _cy_impl is not None else "python"


def available_backends() -> tuple[str, ...]:
    return ("python", "compiled") if _cy_impl is not None else ("python",)


def use_backend(name: str) -> str:
    """Switch backends at runtime; returns the previously active one."""
    global _impl
    previous = active_backend()
    if name == "python":
        _impl = _py_impl
    elif name == "compiled":
        if _cy_impl is None:
            raise ValueError("compiled backend is not built")
        _impl = _cy_impl
    else:
        raise ValueError(f"unknown backend {name!r}")
    return previous


def gru_forward(gx, wh, bh, h0):
    return _impl.gru_forward(gx, wh, bh, h0)


def gru_backward(dh_seq, gx, hseq, wh, h0, cache):
    return _impl.gru_backward(dh_seq, gx, hseq, wh, h0, cache)


def lstm_forward(gx, wh, bh, h0, c0):
    return _impl.lstm_forward(gx, wh, bh, h0, c0)


def lstm_backward(dh_seq, gx, hseq, wh, h0, c0, cache):
    return _impl.lstm_backward(dh_seq, gx, hseq, wh, h0, c0, cache)
