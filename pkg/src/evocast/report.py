"""CSV and SVG report emission.

Every figure has a CSV twin holding the same numbers; plots are decorative,
CSVs are canonical.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .features import FEATURE_NAMES
from .svg import PALETTE, Axes, Canvas, log_decades, nice_ticks


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return Path(path)


def front_rows(front) -> list[dict]:
    """Individuals -> plain rows (genome, val_rmse, param_count, depth)."""
    return [{"genome": ind.genome.key(), "val_rmse": ind.objectives.val_rmse,
             "param_count": ind.objectives.param_count, "depth": ind.objectives.depth}
            for ind in front]


def write_front_csv(path, rows) -> Path:
    return _write_csv(path, ["genome", "val_rmse", "param_count", "depth"],
                      [(r["genome"], f"{r['val_rmse']:.6f}", r["param_count"], r["depth"])
                       for r in rows])


def read_front_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [{"genome": row["genome"], "val_rmse": float(row["val_rmse"]),
                 "param_count": int(row["param_count"]), "depth": int(row["depth"])}
                for row in csv.DictReader(fh)]


def write_history_jsonl(path, history) -> Path:
    with open(path, "w", encoding="utf-8") as fh:
        for snapshot in history:
            fh.write(json.dumps(snapshot, separators=(",", ":")) + "\n")
    return Path(path)


def emit_pareto_plot(out_dir, rows, highlight=()) -> tuple[Path, Path]:
    """Scatter of RMSE (linear y) vs parameter count (log x).

    ``rows`` as from front_rows(); ``highlight`` names genomes drawn as stars.
    """
    if not rows:
        raise ValueError("front must be nonempty")
    out_dir = Path(out_dir)
    csv_path = write_front_csv(out_dir / "pareto.csv", rows)

    params = [r["param_count"] for r in rows]
    rmses = [r["val_rmse"] for r in rows]
    c = Canvas(560, 400)
    c.text(280, 22, "Discovered architectures: accuracy vs size", size=14)
    xlim = (min(params) / 1.5, max(params) * 1.5)
    pad = (max(rmses) - min(rmses)) * 0.15 or max(rmses) * 0.1 or 0.01
    ylim = (min(rmses) - pad, max(rmses) + pad)
    ax = Axes(c, 70, 40, 530, 350, xlim, ylim, logx=True)
    ax.frame(log_decades(*xlim), nice_ticks(*ylim),
             xlabel="parameters (log scale)", ylabel="validation RMSE")
    for r in rows:
        x = ax.px(r["param_count"])
        y = ax.py(r["val_rmse"])
        if r["genome"] in highlight:
            c.star(x, y, 8, PALETTE[0])
        else:
            c.circle(x, y, 4, PALETTE[2])
    svg_path = out_dir / "pareto.svg"
    svg_path.write_text(c.render())
    return csv_path, svg_path


def emit_comparison_report(out_dir, rows) -> tuple[Path, Path]:
    """Model comparison table + three-panel bar figure.

    rows: dicts with model, params, rmse, latency_ms (optional),
    size_bytes (optional).
    """
    if not rows:
        raise ValueError("need at least one evaluated model")
    out_dir = Path(out_dir)
    csv_path = _write_csv(
        out_dir / "comparison.csv",
        ["model", "params", "rmse", "latency_ms", "size_bytes"],
        [(r["model"], r["params"], f"{r['rmse']:.6f}",
          "" if r.get("latency_ms") is None else f"{r['latency_ms']:.4f}",
          "" if r.get("size_bytes") is None else r["size_bytes"]) for r in rows],
    )

    c = Canvas(980, 380)
    c.text(490, 22, "Model comparison", size=14)
    panels = [
        ("RMSE", [r["rmse"] for r in rows], False),
        ("parameters (log scale)", [max(r["params"], 1) for r in rows], True),
        ("latency (ms)", [r.get("latency_ms") or 0.0 for r in rows], False),
    ]
    names = [r["model"] for r in rows]
    for p, (title, values, logy) in enumerate(panels):
        x0 = 70 + p * 310
        _bar_panel(c, x0, 50, x0 + 250, 310, names, values, title, logy)
    svg_path = out_dir / "comparison.svg"
    svg_path.write_text(c.render())
    return csv_path, svg_path


def _bar_panel(c, x0, y0, x1, y1, names, values, title, logy):
    import math

    c.text((x0 + x1) / 2, y0 - 8, title, size=12)
    vmax = max(values) or 1.0
    if logy:
        floor = min(v for v in values if v > 0) / 2
        heights = [math.log10(max(v, floor) / floor) / math.log10(vmax / floor) for v in values]
    else:
        heights = [v / vmax for v in values]
    c.line(x0, y1, x1, y1)
    n = len(values)
    slot = (x1 - x0) / n
    for i, (name, v, h) in enumerate(zip(names, values, heights)):
        bx = x0 + i * slot + slot * 0.15
        bh = (y1 - y0) * h
        c.rect(bx, y1 - bh, slot * 0.7, bh, PALETTE[i % len(PALETTE)])
        from .svg import fmt_num
        c.text(bx + slot * 0.35, y1 - bh - 4, fmt_num(round(v, 4)), size=9)
        c.text(bx + slot * 0.35, y1 + 14, name, size=9, rotate=25)


def emit_transfer_report(out_dir, report) -> tuple[Path, Path]:
    """Table II-style CSV plus mean +/- std line chart per fraction."""
    out_dir = Path(out_dir)
    csv_path = _write_csv(
        out_dir / "transfer.csv",
        ["fraction", "samples", "scratch_mean", "scratch_std", "transfer_mean",
         "transfer_std", "improvement_pct", "t_stat", "p_value", "wilcoxon_p"],
        [(f"{fr.fraction:g}", fr.sample_count, f"{fr.scratch_mean:.6f}",
          f"{fr.scratch_std:.6f}", f"{fr.transfer_mean:.6f}", f"{fr.transfer_std:.6f}",
          f"{fr.improvement_pct:.2f}", f"{fr.t_stat:.4f}", f"{fr.p_value:.3e}",
          "" if fr.wilcoxon_p is None else f"{fr.wilcoxon_p:.3e}")
         for fr in report.fractions],
    )

    c = Canvas(560, 400)
    c.text(280, 22, f"Transfer vs scratch (N={report.trials} trials)", size=14)
    fracs = [fr.fraction for fr in report.fractions]
    xs = list(range(len(fracs)))
    series = [
        ("scratch", [fr.scratch_mean for fr in report.fractions],
         [fr.scratch_std for fr in report.fractions], PALETTE[1]),
        ("transfer", [fr.transfer_mean for fr in report.fractions],
         [fr.transfer_std for fr in report.fractions], PALETTE[0]),
    ]
    all_vals = [m + s for _, ms, ss, _ in series for m, s in zip(ms, ss)] + \
               [m - s for _, ms, ss, _ in series for m, s in zip(ms, ss)]
    pad = (max(all_vals) - min(all_vals)) * 0.15 or 0.01
    ylim = (min(all_vals) - pad, max(all_vals) + pad)
    ax = Axes(c, 70, 40, 530, 350, (-0.3, len(fracs) - 0.7), ylim)
    ax.frame(xs, nice_ticks(*ylim), xlabel="target data fraction",
             ylabel="test RMSE", xtick_labels=[f"{f:.0%}" for f in fracs])
    for si, (label, means, stds, color) in enumerate(series):
        pts = [(ax.px(x), ax.py(m)) for x, m in zip(xs, means)]
        ax.c.polyline(pts, color)
        for x, m, s in zip(xs, means, stds):
            px = ax.px(x)
            ax.c.line(px, ax.py(m - s), px, ax.py(m + s), color=color, width=1.5)
            ax.c.circle(px, ax.py(m), 3.5, color)
        ax.c.text(480, 56 + si * 16, label, size=11, anchor="start", color=color)
    svg_path = out_dir / "transfer.svg"
    svg_path.write_text(c.render())
    return csv_path, svg_path


def emit_coverage_csv(out_dir, model_id, per_feature, macro, mean_width) -> Path:
    header = ["model"] + [f"coverage_{n}" for n in FEATURE_NAMES] + ["macro_coverage", "mean_width"]
    row = [model_id] + [f"{v:.4f}" for v in per_feature] + [f"{macro:.4f}", f"{mean_width:.4f}"]
    return _write_csv(Path(out_dir) / "coverage.csv", header, [row])


def emit_importance(out_dir, report) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    csv_path = _write_csv(
        out_dir / "importance.csv",
        ["feature", "baseline_rmse", "permuted_mean", "permuted_std", "delta"],
        [(name, f"{report.baseline_rmse:.6f}", f"{report.permuted_mean[f]:.6f}",
          f"{report.permuted_std[f]:.6f}", f"{report.deltas[f]:.6f}")
         for f, name in enumerate(FEATURE_NAMES)],
    )

    order = sorted(range(len(FEATURE_NAMES)), key=lambda f: -report.deltas[f])
    c = Canvas(640, 400)
    c.text(320, 22, "Permutation importance (RMSE increase)", size=14)
    vmax = max(max(report.deltas), 1e-9)
    ax_x0, ax_y0, ax_x1, ax_y1 = 190, 50, 600, 370
    c.line(ax_x0, ax_y0, ax_x0, ax_y1)
    slot = (ax_y1 - ax_y0) / len(order)
    for i, f in enumerate(order):
        y = ax_y0 + i * slot + slot * 0.2
        w = max(report.deltas[f], 0.0) / vmax * (ax_x1 - ax_x0)
        c.rect(ax_x0, y, w, slot * 0.6, PALETTE[0] if i < 2 else PALETTE[2])
        c.text(ax_x0 - 6, y + slot * 0.45, FEATURE_NAMES[f], size=10, anchor="end")
        c.text(ax_x0 + w + 6, y + slot * 0.45, f"{report.deltas[f]:.4f}", size=9, anchor="start")
    svg_path = out_dir / "importance.svg"
    svg_path.write_text(c.render())
    return csv_path, svg_path


def emit_horizon_csv(out_dir, rmses) -> Path:
    return _write_csv(Path(out_dir) / "horizon.csv", ["horizon_hours", "rmse"],
                      [(h + 1, f"{v:.6f}") for h, v in enumerate(rmses)])


def emit_bench_csv(out_dir, results) -> Path:
    return _write_csv(
        Path(out_dir) / "bench.csv",
        ["model", "mean_ms", "median_ms", "p95_ms", "artifact_bytes", "param_count"],
        [(r.model_id, f"{r.mean_ms:.4f}", f"{r.median_ms:.4f}", f"{r.p95_ms:.4f}",
          "" if r.artifact_bytes is None else r.artifact_bytes, r.param_count)
         for r in results],
    )
