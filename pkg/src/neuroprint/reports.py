"""CSV / JSON serialization of evaluation and analysis results.

All writers produce canonical bytes (sorted JSON keys, fixed float
formatting) so identical results serialize identically.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .evaluation import EvalReport
from .neurofeat import ContrastResult, EnvelopeSummary, PLVResult


def write_json(obj, path: str | Path) -> None:
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _float(x) -> float:
    return float(x)


def eval_report_dict(report: EvalReport) -> dict:
    return {
        "fold_accuracies": [_float(a) for a in report.fold_accuracies],
        "mean_accuracy": _float(report.mean_accuracy),
        "std_accuracy": _float(report.std_accuracy),
        "overall_accuracy": _float(report.overall_accuracy),
        "confusion": report.confusion.tolist(),
        "metadata": report.metadata,
    }


def write_fold_csv(report: EvalReport, path: str | Path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["fold", "accuracy_percent"])
        for i, acc in enumerate(report.fold_accuracies):
            writer.writerow([i, f"{acc:.6f}"])
        writer.writerow(["mean", f"{report.mean_accuracy:.6f}"])
        writer.writerow(["std", f"{report.std_accuracy:.6f}"])


def write_confusion_csv(report: EvalReport, path: str | Path) -> None:
    s = report.confusion.shape[0]
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["true\\predicted"] + [f"s{j}" for j in range(s)])
        for i in range(s):
            writer.writerow([f"s{i}"] + [int(v) for v in report.confusion[i]])


def write_sweep_csv(rows: list[tuple[str, float, float]], path: str | Path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["channel", "mean_accuracy_percent", "std"])
        for label, mean, std in rows:
            writer.writerow([label, f"{mean:.6f}", f"{std:.6f}"])


def write_plv_csv(result: PLVResult, path: str | Path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["channel_a", "channel_b", "mean_plv", "n_trials"])
        for (a, b), mean in zip(result.pairs, result.mean):
            writer.writerow([a, b, f"{mean:.6f}", result.values.shape[1]])


def contrast_dict(result: ContrastResult) -> dict:
    def clean(x: float) -> float | str:
        return _float(x) if np.isfinite(x) else ("inf" if x > 0 else "-inf")

    return {
        "cond_a": result.cond_a.value,
        "cond_b": result.cond_b.value,
        "alpha": _float(result.alpha),
        "pairs": [
            {
                "channel_a": a,
                "channel_b": b,
                "t": clean(result.t_values[i]),
                "p": _float(result.p_values[i]),
                "mean_diff": _float(result.mean_diff[i]),
                "significant": bool(result.significant[i]),
                "direction": "increase" if result.mean_diff[i] > 0 else "decrease",
            }
            for i, (a, b) in enumerate(result.pairs)
        ],
    }


def write_envelope_csv(
    summaries: list[EnvelopeSummary], pre_onset_ms: float, path: str | Path
) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["subject", "time_ms", "mean", "upper", "lower"])
        for summary in summaries:
            times = summary.time_ms(pre_onset_ms)
            for t, m, u, lo in zip(times, summary.mean, summary.upper,
                                   summary.lower):
                writer.writerow(
                    [summary.subject, f"{t:.3f}", f"{m:.6f}", f"{u:.6f}",
                     f"{lo:.6f}"]
                )


def direction_matrix(result: ContrastResult, labels: list[str]) -> np.ndarray:
    """Symmetric matrix of significant contrast directions (+1/-1/0)."""
    index = {lab: i for i, lab in enumerate(labels)}
    mat = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for i, (a, b) in enumerate(result.pairs):
        if result.significant[i]:
            d = 1 if result.mean_diff[i] > 0 else -1
            mat[index[a], index[b]] = d
            mat[index[b], index[a]] = d
    return mat
