"""Mini-batch training loop: Adam, seeded shuffling, early stopping on
validation RMSE, best-weight restoration. Deterministic per seed."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import TrainingDivergedError
from ..metrics import rmse
from .model import Model, ModelSpec
from .optim import adam_init, adam_step

EVAL_BATCH = 4096


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    max_epochs: int = 50
    patience: int = 10
    batch_size: int = 256
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.max_epochs > 0 and not 0 < self.patience < self.max_epochs:
            raise ValueError("patience must satisfy 0 < patience < max_epochs")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")


@dataclass
class TrainedModel:
    """A spec plus learned weights; the serializable end product."""

    spec: ModelSpec
    params: dict[str, np.ndarray]
    train_meta: dict = field(default_factory=dict)
    scaler_ids: tuple[str, ...] = ()
    _model: Model | None = field(default=None, repr=False, compare=False)

    def model(self) -> Model:
        if self._model is None:
            self._model = Model(self.spec)
        return self._model

    def predict(self, X) -> np.ndarray:
        return _batched_predict(self.model(), self.params, X)

    def n_params(self) -> int:
        return int(sum(v.size for v in self.params.values()))


def loss_mse(pred: np.ndarray, truth: np.ndarray) -> float:
    """Mean squared error over all batch x feature elements."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {truth.shape}")
    if pred.size == 0:
        raise ValueError("loss of an empty batch is undefined")
    return float(np.mean((np.asarray(pred, dtype=np.float64) - truth) ** 2))


def _batched_predict(model, params, X):
    outs = [model.predict(X[i:i + EVAL_BATCH], params) for i in range(0, len(X), EVAL_BATCH)]
    return np.concatenate(outs, axis=0)


def train(spec: ModelSpec, train_set, val_set, config: TrainConfig,
          init_params=None, scaler_ids=()) -> TrainedModel:
    """Train a spec on WindowedDatasets; returns the best-validation weights.

    ``init_params`` warm-starts from existing weights (transfer); otherwise
    weights are freshly initialized from config.seed.
    """
    if train_set.n == 0 or val_set.n == 0:
        raise ValueError("train and validation sets must be nonempty")
    model = Model(spec)
    if init_params is None:
        params = model.init_params(config.seed)
    else:
        params = {k: np.array(v, dtype=model.dtype) for k, v in init_params.items()}
    state = adam_init(params)
    rng = np.random.default_rng([config.seed, 0x5EED])
    Xtr = np.asarray(train_set.X, dtype=model.dtype)
    Ytr = np.asarray(train_set.Y, dtype=model.dtype)

    best_params = {k: v.copy() for k, v in params.items()}
    best_rmse = np.inf
    epochs_run = 0
    bad_epochs = 0
    history = []
    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(train_set.n)
        for lo in range(0, train_set.n, config.batch_size):
            idx = order[lo:lo + config.batch_size]
            xb, yb = Xtr[idx], Ytr[idx]
            pred, caches = model.forward(xb, params, training=True, rng=rng)
            dY = (2.0 / pred.size) * (pred - yb)
            _, grads = model.backward(dY.astype(model.dtype), caches, params)
            adam_step(params, grads, state, lr=config.learning_rate,
                      beta1=config.beta1, beta2=config.beta2, eps=config.eps)
        val_pred = _batched_predict(model, params, val_set.X)
        val_rmse = rmse(val_pred, val_set.Y)
        if not np.isfinite(val_rmse):
            raise TrainingDivergedError(
                f"validation RMSE became non-finite at epoch {epoch} for spec {spec}")
        epochs_run = epoch
        history.append(val_rmse)
        if val_rmse < best_rmse:
            best_rmse = val_rmse
            best_params = {k: v.copy() for k, v in params.items()}
            bad_epochs = 0
        else:
            bad_epochs += 1
        if bad_epochs >= config.patience:
            break

    if config.max_epochs == 0:
        best_params = params
        val_pred = _batched_predict(model, params, val_set.X)
        best_rmse = rmse(val_pred, val_set.Y)

    meta = {
        "epochs_run": epochs_run,
        "best_val_rmse": float(best_rmse),
        "seed": config.seed,
        "val_history": [float(v) for v in history],
    }
    return TrainedModel(spec=spec, params=best_params, train_meta=meta,
                        scaler_ids=tuple(scaler_ids))
