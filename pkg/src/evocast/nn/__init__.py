"""Minimal neural-network engine: dense/conv/recurrent/attention layers with
hand-derived analytic gradients, Adam, early stopping, and artifact I/O.

The GRU/LSTM time-step loops have a compiled core (``_kernels``) with a
numpy twin (``_kernels_np``); ``backend`` picks one at import time.
"""

from .model import LayerSpec, ModelSpec, Model, count_params, init_weights
from .training import TrainConfig, TrainedModel, train, loss_mse
from .optim import AdamState, adam_init, adam_step
from .serialize import save_model, load_model
from . import backend

__all__ = [
    "LayerSpec", "ModelSpec", "Model", "count_params", "init_weights",
    "TrainConfig", "TrainedModel", "train", "loss_mse",
    "AdamState", "adam_init", "adam_step",
    "save_model", "load_model", "backend",
]
