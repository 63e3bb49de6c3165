"""Pretrain-on-source / fine-tune-on-target experiments.

For each data fraction and trial, a contiguous block of each target city's
adaptation pool is drawn (months of history, not scattered rows), and the
same block trains both a from-scratch model and a fine-tuned copy of the
pretrained model. Both are scored on the fixed target test windows, giving
paired per-trial RMSEs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import stats

from .dataset import WindowedDataset, apply_scaler, make_windows
from .features import LOOKBACK
from .metrics import rmse
from .nn.training import TrainConfig, TrainedModel, train

DEFAULT_FRACTIONS = (0.01, 0.10, 0.50, 1.00)


@dataclass
class FractionResult:
    fraction: float
    sample_count: int
    scratch_rmses: np.ndarray   # [N] per trial
    transfer_rmses: np.ndarray  # [N]
    t_stat: float
    p_value: float
    wilcoxon_p: float | None

    @property
    def scratch_mean(self):
        return float(self.scratch_rmses.mean())

    @property
    def scratch_std(self):
        return float(self.scratch_rmses.std(ddof=1)) if len(self.scratch_rmses) > 1 else 0.0

    @property
    def transfer_mean(self):
        return float(self.transfer_rmses.mean())

    @property
    def transfer_std(self):
        return float(self.transfer_rmses.std(ddof=1)) if len(self.transfer_rmses) > 1 else 0.0

    @property
    def improvement_pct(self):
        return (self.scratch_mean - self.transfer_mean) / self.scratch_mean * 100.0


@dataclass
class TransferReport:
    fractions: list[FractionResult]
    trials: int


def paired_ttest(scratch, transfer):
    """Two-sided paired t-test on per-trial RMSEs; returns (t, p).

    Conventions: all-zero differences give p = 1.0; zero variance with a
    nonzero mean gives the smallest representable positive p.
    """
    scratch = np.asarray(scratch, dtype=np.float64)
    transfer = np.asarray(transfer, dtype=np.float64)
    if scratch.shape != transfer.shape or scratch.ndim != 1:
        raise ValueError("need two equal-length 1-D sample vectors")
    n = len(scratch)
    if n < 2:
        raise ValueError("paired t-test needs at least 2 trials")
    d = scratch - transfer
    mean = d.mean()
    sd = d.std(ddof=1)
    if sd == 0.0:
        if mean == 0.0:
            return 0.0, 1.0
        t = math.inf if mean > 0 else -math.inf
        return t, float(np.finfo(np.float64).tiny)
    t = mean / (sd / math.sqrt(n))
    p = 2.0 * float(stats.t.sf(abs(t), df=n - 1))
    return float(t), p


def pretrain(spec, pooled_train, pooled_val, config: TrainConfig) -> TrainedModel:
    """Full-protocol training on the pooled source cities."""
    return train(spec, pooled_train, pooled_val, config,
                 scaler_ids=_origin_cities(pooled_train))


def finetune(pretrained: TrainedModel, ft_train, ft_val, config: TrainConfig) -> TrainedModel:
    """Continue training from pretrained weights; all weights stay trainable.

    A zero-epoch config returns the pretrained weights unchanged.
    """
    return train(pretrained.spec, ft_train, ft_val, config,
                 init_params=pretrained.params, scaler_ids=pretrained.scaler_ids)


def _origin_cities(ds) -> tuple[str, ...]:
    return tuple(dict.fromkeys(c for c, _ in ds.origin)) if ds.origin else ()


def draw_adaptation_block(series, params, split, fraction, rng, T=LOOKBACK):
    """Contiguous random block covering ``fraction`` of one city's adaptation
    pool (the pre-test segment), scaled and windowed."""
    pool_end = split.val_end  # train+val rows form the adaptation pool
    block_len = max(int(round(pool_end * fraction)), T + 1)
    if block_len > pool_end:
        raise ValueError(
            f"{series.city.name}: fraction {fraction} block needs {block_len} rows, "
            f"pool has {pool_end}")
    start = int(rng.integers(0, pool_end - block_len + 1))
    scaled = apply_scaler(series.values[start:start + block_len], params)
    return make_windows(scaled, T=T, city=series.city.name, row_offset=start)


def _split_block(block: WindowedDataset) -> tuple[WindowedDataset, WindowedDataset]:
    """Chronological 80/20 train/val split of a block (>= 1 window each)."""
    n_val = max(1, block.n // 5)
    n_train = block.n - n_val
    if n_train < 1:
        n_train, n_val = 1, block.n - 1
    if n_train < 1 or n_val < 1:
        raise ValueError("adaptation block too small to split for early stopping")
    tr = WindowedDataset(block.X[:n_train], block.Y[:n_train], block.origin[:n_train])
    va = WindowedDataset(block.X[n_train:], block.Y[n_train:], block.origin[n_train:])
    return tr, va


def run_transfer_experiment(spec, source_cities, target_cities, config: TrainConfig,
                            fractions=DEFAULT_FRACTIONS, trials: int = 10,
                            pretrained: TrainedModel | None = None,
                            progress=None) -> TransferReport:
    """Scratch-vs-transfer comparison across data fractions.

    ``source_cities`` / ``target_cities`` are lists of (HourlySeries,
    ScalerParams, SplitSpec). The pretrained model is shared (read-only)
    across fractions and trials; per-trial seeds vary the block draw and
    the weight initialization, and each trial's scratch and transfer run
    consume the identical block and identical test windows (paired design).
    """
    from .dataset import assemble_pooled, city_segment_windows

    if pretrained is None:
        pooled_train = assemble_pooled(source_cities, "train")
        pooled_val = assemble_pooled(source_cities, "val")
        pretrained = pretrain(spec, pooled_train, pooled_val, config)

    test_parts = [city_segment_windows(series, params, split, "test")
                  for series, params, split in target_cities]
    test_X = np.concatenate([p.X for p in test_parts])
    test_Y = np.concatenate([p.Y for p in test_parts])

    results = []
    for fraction in fractions:
        scratch_scores = np.empty(trials)
        transfer_scores = np.empty(trials)
        sq_err_scratch = np.zeros(len(test_X))
        sq_err_transfer = np.zeros(len(test_X))
        sample_count = 0
        for trial in range(trials):
            trial_seed = int(np.random.default_rng(
                [config.seed, int(fraction * 10_000), trial]).integers(2 ** 31))
            rng = np.random.default_rng(trial_seed)
            blocks = [draw_adaptation_block(series, params, split, fraction, rng)
                      for series, params, split in target_cities]
            block = WindowedDataset(
                np.concatenate([b.X for b in blocks]),
                np.concatenate([b.Y for b in blocks]),
                [o for b in blocks for o in b.origin])
            sample_count = block.n
            ft_train, ft_val = _split_block(block)
            trial_config = replace(config, seed=trial_seed)
            scratch = train(spec, ft_train, ft_val, trial_config)
            adapted = finetune(pretrained, ft_train, ft_val, trial_config)
            pred_s = scratch.predict(test_X)
            pred_t = adapted.predict(test_X)
            scratch_scores[trial] = rmse(pred_s, test_Y)
            transfer_scores[trial] = rmse(pred_t, test_Y)
            sq_err_scratch += np.mean((pred_s - test_Y) ** 2, axis=1)
            sq_err_transfer += np.mean((pred_t - test_Y) ** 2, axis=1)
            if progress:
                progress(fraction, trial, scratch_scores[trial], transfer_scores[trial])
        t_stat, p_value = paired_ttest(scratch_scores, transfer_scores)
        wilcoxon_p = _wilcoxon_per_window(sq_err_scratch, sq_err_transfer)
        results.append(FractionResult(
            fraction=fraction,
            sample_count=sample_count,
            scratch_rmses=scratch_scores,
            transfer_rmses=transfer_scores,
            t_stat=t_stat,
            p_value=p_value,
            wilcoxon_p=wilcoxon_p,
        ))
    return TransferReport(fractions=results, trials=trials)


def _wilcoxon_per_window(err_scratch, err_transfer) -> float | None:
    """Large-sample supplement: signed-rank test over per-window errors
    (averaged across trials)."""
    diff = err_scratch - err_transfer
    if np.allclose(diff, 0.0):
        return 1.0
    try:
        return float(stats.wilcoxon(diff).pvalue)
    except ValueError:
        return None
