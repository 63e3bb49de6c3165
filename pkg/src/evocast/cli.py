"""Command-line pipeline orchestration.

Subcommands: fetch, prepare, search, train, transfer, conformal, explain,
horizon, bench, report. Every run writes a manifest.json into the run
directory with enough context (seed, config, data fingerprint, backend,
host) to re-execute the stage.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import platform
import re
import sys
import time
from dataclasses import dataclass
from datetime import date, datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import climatology_fit, climatology_forecast, persistence_forecast
from .cities import default_cities, load_city_config
from .dataset import (WindowedDataset, apply_scaler, assemble_pooled,
                      chronological_split, conformal_split_windows, fit_scaler,
                      save_container)
from .errors import EvocastError
from .features import FEATURE_NAMES, LOOKBACK
from .ingest import (SYNTHETIC_PROFILES, cache_get_or_fetch, fill_short_gaps,
                     generate_synthetic_city)
from .metrics import rmse
from .nn import backend
from .nn.model import LayerSpec, ModelSpec, count_params, in_search_space
from .nn.serialize import load_model, save_model
from .nn.training import TrainConfig, train
from .report import (emit_bench_csv, emit_comparison_report, emit_coverage_csv,
                     emit_horizon_csv, emit_importance, emit_pareto_plot,
                     emit_transfer_report, front_rows, read_front_csv,
                     write_front_csv, write_history_jsonl)
from .robustness import (conformal_calibrate, conformal_interval,
                         empirical_coverage, horizon_rmse,
                         permutation_importance)
from .search import SearchBudget, decode_genome, evolve, pareto_front
from .transfer import run_transfer_experiment
from . import bench as benchmod

log = logging.getLogger("evocast")

SOURCE_FRACTIONS = (0.70, 0.15, 0.15)
# Targets keep the last 30% as a fixed test segment; the first 70% is the
# adaptation pool that transfer experiments draw from.
TARGET_FRACTIONS = (0.55, 0.15, 0.30)

ARCH_ALIASES = {
    "gru128x2": "gru128-gru128",
    "cnn128": "conv128",
    "cnn32": "conv32",
    "lstm64x2": "lstm64-lstm64",
}


_ARCH_TOKEN = re.compile(r"^([a-z]+?)(\d+)(?:d(\d(?:\.\d+)?))?$")


def parse_arch(text: str) -> ModelSpec:
    """Parse an alias (gru128x2) or a compact spec string (gru64-dense32,
    conv128d0.2)."""
    text = ARCH_ALIASES.get(text.lower().strip(), text.lower().strip())
    layers = []
    for token in text.split("-"):
        m = _ARCH_TOKEN.match(token)
        if not m:
            raise ValueError(f"cannot parse architecture token {token!r}")
        kind, units_s, drop_s = m.groups()
        kind = {"cnn": "conv"}.get(kind, kind)
        layers.append(LayerSpec(kind=kind, units=int(units_s),
                                dropout=float(drop_s) if drop_s else 0.0))
    return ModelSpec(tuple(layers))


# ---------------------------------------------------------------------------
# Data corpus assembly


@dataclass
class Corpus:
    sources: list  # (HourlySeries, ScalerParams, SplitSpec) triples
    targets: list
    fingerprint: str


def _prepare_city(series, role):
    fractions = SOURCE_FRACTIONS if role == "source" else TARGET_FRACTIONS
    split = chronological_split(series.n_hours, fractions)
    # target scalers may see the whole adaptation pool (its training-role
    # rows); source scalers see the train segment only
    fit_end = split.train_end if role == "source" else split.val_end
    scaler = fit_scaler(series, (0, fit_end))
    return series, scaler, split


def build_synthetic_corpus(seed: int, n_cities: int, hours: int,
                           n_targets: int | None = None) -> Corpus:
    if n_cities < 2:
        raise ValueError("need at least 2 synthetic cities (1 source + 1 target)")
    n_targets = n_targets if n_targets is not None else max(1, n_cities // 4)
    if not 0 < n_targets < n_cities:
        raise ValueError("target count must leave at least one source city")
    sources, targets = [], []
    for i in range(n_cities):
        profile = SYNTHETIC_PROFILES[i % len(SYNTHETIC_PROFILES)]
        role = "target" if i >= n_cities - n_targets else "source"
        series = generate_synthetic_city(seed * 1000 + i, hours, profile,
                                         name=f"syn{i}-{profile}", role=role)
        (targets if role == "target" else sources).append(_prepare_city(series, role))
    fingerprint = f"synthetic:seed={seed}:cities={n_cities}:hours={hours}:targets={n_targets}"
    return Corpus(sources=sources, targets=targets, fingerprint=fingerprint)


def build_cache_corpus(cities, start: date, end: date, cache_dir) -> Corpus:
    sources, targets = [], []
    fp = hashlib.sha256()
    for city in cities:
        series = cache_get_or_fetch(city, start, end, cache_dir)
        series = fill_short_gaps(series)
        fp.update(f"{city.name}:{series.n_hours}:".encode())
        fp.update(series.values.tobytes())
        entry = _prepare_city(series, city.role)
        (sources if city.role == "source" else targets).append(entry)
    if not sources or not targets:
        raise ValueError("city config must produce nonempty source and target sets")
    fingerprint = f"cache:{start}:{end}:sha256={fp.hexdigest()[:16]}"
    return Corpus(sources=sources, targets=targets, fingerprint=fingerprint)


def load_corpus(args) -> Corpus:
    if args.data == "synthetic":
        return build_synthetic_corpus(args.seed, args.synthetic_cities, args.hours)
    cities = load_city_config(args.cities_config) if args.cities_config else default_cities()
    cache_dir = args.cache_dir or os.environ.get("EVOCAST_CACHE") or "cache"
    Path(cache_dir).mkdir(parents=True, exist_ok=True)
    return build_cache_corpus(cities, args.start, args.end, cache_dir)


def _pooled_conformal_windows(corpus):
    calib_parts, eval_parts = [], []
    for series, scaler, split in corpus.targets:
        cal, ev = conformal_split_windows(series, scaler, split)
        calib_parts.append(cal)
        eval_parts.append(ev)
    cat = lambda parts: (np.concatenate([p.X for p in parts]),
                         np.concatenate([p.Y for p in parts]))
    return cat(calib_parts), cat(eval_parts)


# ---------------------------------------------------------------------------
# Run directory and manifest


def make_run_dir(args) -> Path:
    if args.out:
        run_dir = Path(args.out)
    else:
        stamp = datetime.now(timezone.utc).strftime("%Y%m%d-%H%M%S")
        run_dir = Path("runs") / f"{stamp}-s{args.seed}"
    run_dir.mkdir(parents=True, exist_ok=True)
    return run_dir


def write_manifest(run_dir: Path, stage: str, args, fingerprint: str, outputs: dict):
    manifest = {
        "tool_version": __version__,
        "stage": stage,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "seed": args.seed,
        "config": {k: str(v) for k, v in sorted(vars(args).items()) if k != "func"},
        "data_fingerprint": fingerprint,
        "kernel_backend": backend.active_backend(),
        "host": {
            "platform": platform.platform(),
            "python": platform.python_version(),
            "machine": platform.machine(),
        },
        "outputs": {k: str(v) for k, v in outputs.items()},
    }
    path = run_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2))
    return path


def _default_train_config(args, **overrides) -> TrainConfig:
    base = dict(learning_rate=1e-3, max_epochs=50, patience=10,
                batch_size=256, seed=args.seed)
    base.update(overrides)
    return TrainConfig(**base)


# ---------------------------------------------------------------------------
# Stages


def cmd_fetch(args) -> int:
    run_dir = make_run_dir(args)
    cities = load_city_config(args.cities_config) if args.cities_config else default_cities()
    cache_dir = args.cache_dir or os.environ.get("EVOCAST_CACHE") or "cache"
    Path(cache_dir).mkdir(parents=True, exist_ok=True)
    fetched = []
    for city in cities:
        series = cache_get_or_fetch(city, args.start, args.end, cache_dir)
        fetched.append((city.name, series.n_hours, int(series.missing_mask.sum())))
        print(f"{city.name}: {series.n_hours} hours "
              f"({int(series.missing_mask.any(axis=1).sum())} rows with gaps)")
    outputs = {"cache_dir": cache_dir}
    write_manifest(run_dir, "fetch", args,
                   f"cache:{args.start}:{args.end}:{len(fetched)} cities", outputs)
    return 0


def cmd_prepare(args) -> int:
    run_dir = make_run_dir(args)
    corpus = load_corpus(args)
    prepared = run_dir / "prepared"
    prepared.mkdir(exist_ok=True)
    source_segments = {seg: assemble_pooled(corpus.sources, seg)
                       for seg in ("train", "val", "test")}
    save_container(prepared / "source.gnds", source_segments)
    (calib_X, calib_Y), (eval_X, eval_Y) = _pooled_conformal_windows(corpus)
    target_segments = {
        "calib": WindowedDataset(calib_X, calib_Y),
        "eval": WindowedDataset(eval_X, eval_Y),
    }
    save_container(prepared / "target.gnds", target_segments)
    scalers = [scaler.to_dict() for _, scaler, _ in corpus.sources + corpus.targets]
    (prepared / "scalers.json").write_text(json.dumps(scalers, indent=1))
    for seg, ds in source_segments.items():
        print(f"source {seg}: {ds.n} windows")
    print(f"target calib: {target_segments['calib'].n} windows, "
          f"eval: {target_segments['eval'].n} windows")
    write_manifest(run_dir, "prepare", args, corpus.fingerprint,
                   {"source": prepared / "source.gnds", "target": prepared / "target.gnds",
                    "scalers": prepared / "scalers.json"})
    return 0


def cmd_search(args) -> int:
    run_dir = make_run_dir(args)
    corpus = load_corpus(args)
    search_train = assemble_pooled(corpus.sources, "train")
    search_val = assemble_pooled(corpus.sources, "val")
    config = _default_train_config(args)
    budget = SearchBudget(subsample=args.budget_subsample,
                          max_epochs=args.budget_epochs,
                          patience=args.budget_patience)

    def progress(gen, population, cache):
        best = min(ind.objectives.val_rmse for ind in population)
        print(f"generation {gen}: best val RMSE {best:.4f} "
              f"({cache.misses} trainings, {cache.hits} cache hits)")

    t0 = time.perf_counter()
    population, cache, history = evolve(
        search_train, search_val, config,
        population_size=args.pop, generations=args.gens,
        budget=budget, workers=args.workers, progress=progress)
    front = pareto_front(population)
    rows = front_rows(front)
    write_front_csv(run_dir / "front.csv", rows)
    write_history_jsonl(run_dir / "history.jsonl", history)
    emit_pareto_plot(run_dir, rows, highlight=_representatives(rows))
    print(f"search finished in {time.perf_counter() - t0:.1f}s: "
          f"front size {len(front)}, unique trainings {cache.misses}")

    outputs = {"front": run_dir / "front.csv", "history": run_dir / "history.jsonl"}
    if args.retrain_top > 0:
        models_dir = run_dir / "models"
        models_dir.mkdir(exist_ok=True)
        full_config = _default_train_config(args)
        for row in _representative_rows(rows)[:args.retrain_top]:
            spec = decode_genome_key(row["genome"])
            model = train(spec, search_train, search_val, full_config,
                          scaler_ids=_corpus_scaler_ids(corpus))
            path = models_dir / f"{_slug(row['genome'])}.gnas"
            save_model(model, path)
            print(f"retrained {row['genome']}: val RMSE "
                  f"{model.train_meta['best_val_rmse']:.4f} -> {path}")
            outputs[f"model:{row['genome']}"] = path
    write_manifest(run_dir, "search", args, corpus.fingerprint, outputs)
    return 0


def _corpus_scaler_ids(corpus):
    return tuple(s.city for _, s, _ in corpus.sources)


def _slug(genome_key: str) -> str:
    return genome_key.replace("|", "_").replace(".", "")


def decode_genome_key(key: str) -> ModelSpec:
    """Inverse of Genome.key() for the non-empty slots."""
    layers = []
    for part in key.split("|"):
        if part == "-":
            continue
        m = _ARCH_TOKEN.match(part)
        if not m:
            raise ValueError(f"cannot parse genome slot {part!r}")
        kind, units_s, drop_s = m.groups()
        kind = {"cnn": "conv"}.get(kind, kind)
        layers.append(LayerSpec(kind=kind, units=int(units_s),
                                dropout=float(drop_s) if drop_s else 0.0))
    return ModelSpec(tuple(layers))


def _representative_rows(rows):
    """Lowest RMSE, best balance (rank sum), smallest model - in that order."""
    if not rows:
        return []
    by_rmse = sorted(rows, key=lambda r: r["val_rmse"])
    by_params = sorted(rows, key=lambda r: r["param_count"])
    rmse_rank = {id(r): i for i, r in enumerate(by_rmse)}
    param_rank = {id(r): i for i, r in enumerate(by_params)}
    balanced = min(rows, key=lambda r: rmse_rank[id(r)] + param_rank[id(r)])
    picks = []
    for r in (by_rmse[0], balanced, by_params[0]):
        if r not in picks:
            picks.append(r)
    return picks


def _representatives(rows):
    return {r["genome"] for r in _representative_rows(rows)}


def cmd_train(args) -> int:
    run_dir = make_run_dir(args)
    corpus = load_corpus(args)
    spec = parse_arch(args.arch)
    if not in_search_space(spec):
        log.warning("architecture %s uses values outside the search space", args.arch)
    pooled_train = assemble_pooled(corpus.sources, "train")
    pooled_val = assemble_pooled(corpus.sources, "val")
    config = _default_train_config(args, max_epochs=args.epochs, patience=args.patience)
    model = train(spec, pooled_train, pooled_val, config,
                  scaler_ids=_corpus_scaler_ids(corpus))
    models_dir = run_dir / "models"
    models_dir.mkdir(exist_ok=True)
    path = models_dir / f"{args.arch}.gnas"
    n_bytes = save_model(model, path)
    print(f"{args.arch}: {count_params(spec):,} parameters, "
          f"val RMSE {model.train_meta['best_val_rmse']:.4f}, "
          f"{model.train_meta['epochs_run']} epochs, artifact {n_bytes:,} bytes")
    write_manifest(run_dir, "train", args, corpus.fingerprint, {"model": path})
    return 0


def cmd_transfer(args) -> int:
    run_dir = make_run_dir(args)
    corpus = load_corpus(args)
    spec = parse_arch(args.arch)
    config = _default_train_config(args, max_epochs=args.epochs, patience=args.patience)
    fractions = tuple(float(f) for f in args.fractions.split(","))

    def progress(fraction, trial, s, t):
        print(f"fraction {fraction:g} trial {trial}: scratch {s:.4f} transfer {t:.4f}")

    report = run_transfer_experiment(
        spec, corpus.sources, corpus.targets, config,
        fractions=fractions, trials=args.trials, progress=progress)
    csv_path, svg_path = emit_transfer_report(run_dir, report)
    for fr in report.fractions:
        print(f"fraction {fr.fraction:g}: scratch {fr.scratch_mean:.4f}"
              f" transfer {fr.transfer_mean:.4f} ({fr.improvement_pct:+.1f}%,"
              f" p={fr.p_value:.2e})")
    write_manifest(run_dir, "transfer", args, corpus.fingerprint,
                   {"csv": csv_path, "svg": svg_path})
    return 0


def cmd_conformal(args) -> int:
    run_dir = make_run_dir(args)
    corpus = load_corpus(args)
    model = load_model(args.model)
    (calib_X, calib_Y), (eval_X, eval_Y) = _pooled_conformal_windows(corpus)
    calibration = conformal_calibrate(model, calib_X, calib_Y, alpha=args.alpha)
    lower, upper = conformal_interval(model, eval_X, calibration)
    per_feature, macro, width = empirical_coverage(lower, upper, eval_Y)
    path = emit_coverage_csv(run_dir, Path(args.model).stem, per_feature, macro, width)
    print(f"coverage: macro {macro:.3f} (target {1 - args.alpha:.2f}), "
          f"mean width {width:.4f}, n_cal={calibration.n_cal}")
    write_manifest(run_dir, "conformal", args, corpus.fingerprint, {"coverage": path})
    return 0


def cmd_explain(args) -> int:
    run_dir = make_run_dir(args)
    corpus = load_corpus(args)
    model = load_model(args.model)
    _, (eval_X, eval_Y) = _pooled_conformal_windows(corpus)
    report = permutation_importance(model, eval_X, eval_Y,
                                    repeats=args.repeats, seed=args.seed)
    csv_path, svg_path = emit_importance(run_dir, report)
    order = np.argsort(-report.deltas)
    top = ", ".join(FEATURE_NAMES[f] for f in order[:2])
    print(f"baseline RMSE {report.baseline_rmse:.4f}; dominant features: {top}")
    write_manifest(run_dir, "explain", args, corpus.fingerprint,
                   {"csv": csv_path, "svg": svg_path})
    return 0


def cmd_horizon(args) -> int:
    run_dir = make_run_dir(args)
    corpus = load_corpus(args)
    model = load_model(args.model)
    series, scaler, split = corpus.targets[0]
    lo, hi = split.segment_range("test")
    lo, hi = _longest_valid_run(series, lo, hi)
    scaled = apply_scaler(series.values[lo:hi], scaler)
    rmses = horizon_rmse(model, scaled, horizon=args.horizon,
                         max_windows=args.max_windows)
    path = emit_horizon_csv(run_dir, rmses)
    print("per-horizon RMSE: " + ", ".join(f"h{h + 1}={v:.4f}"
                                           for h, v in enumerate(rmses)))
    write_manifest(run_dir, "horizon", args, corpus.fingerprint, {"horizon": path})
    return 0


def cmd_bench(args) -> int:
    run_dir = make_run_dir(args)
    results = []
    for model_path in args.model:
        model = load_model(model_path)
        result = benchmod.measure_latency(model, model_id=Path(model_path).stem,
                                          warmup=args.warmup, iters=args.iters,
                                          artifact_path=model_path)
        results.append(result)
        print(f"{result.model_id}: mean {result.mean_ms:.3f} ms, "
              f"median {result.median_ms:.3f} ms, p95 {result.p95_ms:.3f} ms, "
              f"{result.param_count:,} params, {result.artifact_bytes:,} bytes")
    path = emit_bench_csv(run_dir, results)
    outputs = {"bench": path}
    if args.backends:
        spec = parse_arch(args.backends_arch)
        timings = benchmod.compare_backends(spec, iters=args.backend_iters)
        lines = ["backend,sec_per_step"]
        for name, sec in timings.items():
            print(f"kernel backend {name}: {sec * 1e3:.2f} ms/step ({args.backends_arch})")
            lines.append(f"{name},{sec:.6f}")
        kb = run_dir / "kernel_bench.csv"
        kb.write_text("\n".join(lines) + "\n")
        outputs["kernel_bench"] = kb
    write_manifest(run_dir, "bench", args, "models:" + ",".join(args.model), outputs)
    return 0


def cmd_report(args) -> int:
    run_dir = make_run_dir(args)
    corpus = load_corpus(args)
    _, (eval_X, eval_Y) = _pooled_conformal_windows(corpus)

    rows = []
    rows.append({"model": "persistence", "params": 0,
                 "rmse": rmse(persistence_forecast(eval_X), eval_Y),
                 "latency_ms": None, "size_bytes": None})
    rows.append({"model": "climatology", "params": 0,
                 "rmse": _climatology_rmse(corpus), "latency_ms": None, "size_bytes": None})
    model_dir = Path(args.models) if args.models else run_dir / "models"
    for path in sorted(model_dir.glob("*.gnas")) if model_dir.is_dir() else []:
        model = load_model(path)
        pred = model.predict(eval_X)
        result = benchmod.measure_latency(model, model_id=path.stem,
                                          warmup=50, iters=args.iters,
                                          artifact_path=path)
        rows.append({"model": path.stem, "params": model.n_params(),
                     "rmse": rmse(pred, eval_Y), "latency_ms": result.mean_ms,
                     "size_bytes": result.artifact_bytes})
    csv_path, svg_path = emit_comparison_report(run_dir, rows)
    for r in rows:
        lat = f"{r['latency_ms']:.3f} ms" if r["latency_ms"] is not None else "-"
        print(f"{r['model']:>24s}  params {r['params']:>9,d}  RMSE {r['rmse']:.4f}  {lat}")
    outputs = {"comparison": csv_path, "comparison_svg": svg_path}
    front_path = Path(args.front) if args.front else run_dir / "front.csv"
    if front_path.is_file():
        rows_front = read_front_csv(front_path)
        pareto_csv, pareto_svg = emit_pareto_plot(run_dir, rows_front,
                                                  highlight=_representatives(rows_front))
        outputs["pareto"] = pareto_csv
        outputs["pareto_svg"] = pareto_svg
    write_manifest(run_dir, "report", args, corpus.fingerprint, outputs)
    return 0


def _longest_valid_run(series, lo, hi):
    """Largest gap-free [a, b) inside [lo, hi); real data may keep long gaps."""
    valid = ~series.missing_mask[lo:hi].any(axis=1)
    best = (lo, lo)
    start = None
    for i, ok in enumerate(list(valid) + [False]):
        if ok and start is None:
            start = i
        elif not ok and start is not None:
            if i - start > best[1] - best[0]:
                best = (lo + start, lo + i)
            start = None
    return best


def _climatology_rmse(corpus) -> float:
    """Per-city hour/month climatology on each target's test-eval windows."""
    sq_sum = 0.0
    count = 0
    for series, scaler, split in corpus.targets:
        pool_scaled = apply_scaler(series.values[:split.val_end], scaler)
        stamps = series.timestamps()
        table = climatology_fit(pool_scaled, stamps[:split.val_end])
        _, ev = conformal_split_windows(series, scaler, split)
        target_rows = np.array([r + LOOKBACK for _, r in ev.origin])
        pred = climatology_forecast(table, stamps[target_rows])
        err = pred - ev.Y
        sq_sum += float(np.sum(err ** 2))
        count += err.size
    return float(np.sqrt(sq_sum / count))


# ---------------------------------------------------------------------------
# Argument parsing


def _iso_date(text: str) -> date:
    return date.fromisoformat(text)


def _add_data_args(p):
    p.add_argument("--data", choices=("synthetic", "cache"), default="synthetic",
                   help="data source (default: synthetic)")
    p.add_argument("--synthetic-cities", type=int, default=4,
                   help="number of synthetic cities (default 4, last quarter are targets)")
    p.add_argument("--hours", type=int, default=4000,
                   help="hours per synthetic city (default 4000)")
    p.add_argument("--cities-config", default=None,
                   help="city config CSV (default: built-in 24 cities)")
    p.add_argument("--cache-dir", default=None,
                   help="weather cache directory (default: $EVOCAST_CACHE or ./cache)")
    p.add_argument("--start", type=_iso_date, default=date(2019, 1, 1))
    p.add_argument("--end", type=_iso_date, default=date(2024, 12, 31))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evocast",
        description="Multi-objective evolutionary search for compact hourly "
                    "weather forecasters.")
    parser.add_argument("--version", action="version", version=f"evocast {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def stage(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--seed", type=int, default=42)
        p.add_argument("--out", default=None, help="run directory (default: runs/<ts>-s<seed>)")
        return p

    p = stage("fetch", "download hourly history for the configured cities into the cache")
    p.add_argument("--cities-config", default=None)
    p.add_argument("--cache-dir", default=None)
    p.add_argument("--start", type=_iso_date, default=date(2019, 1, 1))
    p.add_argument("--end", type=_iso_date, default=date(2024, 12, 31))
    p.set_defaults(func=cmd_fetch)

    p = stage("prepare", "scale, window and split the corpus; write dataset containers")
    _add_data_args(p)
    p.set_defaults(func=cmd_prepare)

    p = stage("search", "run the NSGA-II architecture search")
    _add_data_args(p)
    p.add_argument("--pop", type=int, default=20, help="population size (default 20)")
    p.add_argument("--gens", type=int, default=10, help="generations (default 10)")
    p.add_argument("--budget-subsample", type=float, default=0.10)
    p.add_argument("--budget-epochs", type=int, default=20)
    p.add_argument("--budget-patience", type=int, default=5)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--retrain-top", type=int, default=3,
                   help="retrain this many representative front members in full (default 3)")
    p.set_defaults(func=cmd_search)

    p = stage("train", "train one architecture with the full protocol")
    _add_data_args(p)
    p.add_argument("--arch", required=True,
                   help="alias (gru128x2, cnn128, cnn32, lstm64x2) or spec string "
                        "like gru64-dense32")
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--patience", type=int, default=10)
    p.set_defaults(func=cmd_train)

    p = stage("transfer", "scratch-vs-pretrained comparison across data fractions")
    _add_data_args(p)
    p.add_argument("--arch", default="gru32")
    p.add_argument("--fractions", default="0.01,0.10,0.50,1.00")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--patience", type=int, default=10)
    p.set_defaults(func=cmd_transfer)

    p = stage("conformal", "calibrate prediction intervals and evaluate coverage")
    _add_data_args(p)
    p.add_argument("--model", required=True, help="path to a .gnas artifact")
    p.add_argument("--alpha", type=float, default=0.05)
    p.set_defaults(func=cmd_conformal)

    p = stage("explain", "permutation feature importance on target test data")
    _add_data_args(p)
    p.add_argument("--model", required=True)
    p.add_argument("--repeats", type=int, default=5)
    p.set_defaults(func=cmd_explain)

    p = stage("horizon", "recursive multi-step forecast degradation")
    _add_data_args(p)
    p.add_argument("--model", required=True)
    p.add_argument("--horizon", type=int, default=12)
    p.add_argument("--max-windows", type=int, default=512)
    p.set_defaults(func=cmd_horizon)

    p = stage("bench", "inference latency and artifact size")
    p.add_argument("--model", nargs="+", required=True)
    p.add_argument("--warmup", type=int, default=100)
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--backends", action="store_true",
                   help="also compare the compiled and python recurrent kernels")
    p.add_argument("--backends-arch", default="gru128x2")
    p.add_argument("--backend-iters", type=int, default=10)
    p.set_defaults(func=cmd_bench)

    p = stage("report", "emit the comparison table/figures from run artifacts")
    _add_data_args(p)
    p.add_argument("--models", default=None, help="directory of .gnas artifacts")
    p.add_argument("--front", default=None, help="front.csv from a search run")
    p.add_argument("--iters", type=int, default=200, help="latency iterations")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("EVOCAST_LOGLEVEL", "WARNING"))
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args) or 0
    except (EvocastError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
