"""Command-line entry point wiring the modules into reproducible experiments.

Subcommands: synth, preprocess, train, sweep, plv, envelope, ablate.  Every
command takes ``--config`` (JSON file), overridable by flags (precedence:
flags > file > defaults), writes ``report.json`` plus CSV/SVG artifacts into
``--out``, and is byte-reproducible under a fixed seed.

Exit codes: 0 success, 1 data errors, 2 configuration/usage errors.
``NEUROPRINT_THREADS`` caps numerical thread pools (applied before numpy
loads, which is why heavyweight imports live inside the command functions).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, DataError

_THREAD_ENV_TARGETS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
)


def _apply_thread_cap() -> None:
    cap = os.environ.get("NEUROPRINT_THREADS")
    if not cap:
        return
    if not cap.isdigit() or int(cap) < 1:
        raise ConfigError(f"NEUROPRINT_THREADS must be a positive integer, got {cap!r}")
    for var in _THREAD_ENV_TARGETS:
        os.environ.setdefault(var, cap)


COMMAND_DEFAULTS: dict[str, dict] = {
    "synth": {
        "subjects": 9,
        "trials": 40,
        "fs": 500.0,
        "target_fs": 250.0,
        "band": [30.0, 120.0],
        "order": 5,
        "informative_channels": None,
        "seed": 0,
    },
    "preprocess": {
        "target_fs": 250.0,
        "band": [30.0, 120.0],
        "order": 5,
        "epoch_ms": 2000.0,
        "baseline_ms": 500.0,
        "seed": 0,
    },
    "train": {
        "folds": 5,
        "epochs": 1000,
        "lr": 1e-3,
        "batch": 64,
        "channels": None,
        "condition": "imagined_speech",
        "no_spectral_block": False,
        "seed": 0,
    },
    "sweep": {
        "folds": 5,
        "epochs": 1000,
        "lr": 1e-3,
        "batch": 64,
        "channels": None,
        "condition": "imagined_speech",
        "no_spectral_block": False,
        "seed": 0,
    },
    "plv": {
        "alpha": 0.05,
        "channels": None,
        "cond_a": "imagined_speech",
        "cond_b": "resting_state",
        "seed": 0,
    },
    "envelope": {
        "condition": "imagined_speech",
        "n_taps": 30,
        "seed": 0,
    },
    "ablate": {
        "folds": 5,
        "epochs": 1000,
        "lr": 1e-3,
        "batch": 64,
        "channels": None,
        "condition": "imagined_speech",
        "alpha": 0.05,
        "n_perm": 10000,
        "seed": 0,
    },
}


@dataclass(frozen=True)
class RunConfig:
    """Resolved parameters of one CLI invocation."""

    command: str
    out: Path
    params: dict = field(default_factory=dict)

    @property
    def seed(self) -> int:
        return int(self.params.get("seed", 0))


def resolve_config(command: str, args: argparse.Namespace) -> RunConfig:
    """Merge defaults, an optional JSON config file, and explicit flags."""
    params = dict(COMMAND_DEFAULTS[command])
    config_path = getattr(args, "config", None)
    if config_path:
        try:
            file_params = json.loads(Path(config_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {config_path}: {exc}")
        if not isinstance(file_params, dict):
            raise ConfigError(f"config file {config_path} must hold a JSON object")
        unknown = sorted(set(file_params) - set(params))
        if unknown:
            raise ConfigError(
                f"unknown config keys for {command!r}: {', '.join(unknown)}"
            )
        params.update(file_params)
    for key in params:
        value = getattr(args, key, None)
        if value is not None:
            params[key] = value
    return RunConfig(command=command, out=Path(args.out), params=params)


def _parse_channels(value):
    if value is None:
        return None
    labels = [v.strip() for v in value.split(",") if v.strip()]
    if not labels:
        raise ConfigError("--channels given but empty")
    return labels


def _condition(name: str):
    from .data import Condition

    try:
        return Condition(name)
    except ValueError:
        valid = ", ".join(c.value for c in Condition)
        raise ConfigError(f"unknown condition {name!r} (one of: {valid})")


def _load(path: str):
    from .data import load_dataset

    return load_dataset(path)


def _maybe_select(dataset, labels):
    from .data import select_channels

    return dataset if labels is None else select_channels(dataset, labels)


def _print_accuracy(report, n_subjects: int) -> None:
    chance = 100.0 / n_subjects
    print(
        f"accuracy: {report.mean_accuracy:.2f} +- {report.std_accuracy:.2f} % "
        f"(chance level {chance:.2f}% for S={n_subjects})"
    )


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_synth(args) -> int:
    cfg = resolve_config("synth", args)
    from .data import SPEECH_MONTAGE, save_dataset, save_recording
    from .pipeline import PreprocessConfig, preprocess
    from .synth import SynthConfig, generate

    p = cfg.params
    informative = p["informative_channels"]
    if informative is not None:
        if isinstance(informative, str):
            informative = _parse_channels(informative)
        indices = []
        for lab in informative:
            if lab not in SPEECH_MONTAGE:
                raise ConfigError(
                    f"informative channel {lab!r} not in speech montage "
                    f"{list(SPEECH_MONTAGE)}"
                )
            indices.append(SPEECH_MONTAGE.index(lab))
    else:
        indices = None
    synth_cfg = SynthConfig(
        n_subjects=int(p["subjects"]),
        trials_per_condition=int(p["trials"]),
        fs=float(p["fs"]),
        seed=cfg.seed,
        informative_channels=indices,
    )
    recording = generate(synth_cfg)
    pre_cfg = PreprocessConfig(
        target_fs=float(p["target_fs"]),
        band=(float(p["band"][0]), float(p["band"][1])),
        order=int(p["order"]),
    )
    dataset = preprocess(recording, pre_cfg)
    cfg.out.mkdir(parents=True, exist_ok=True)
    save_recording(recording, cfg.out / "recording")
    save_dataset(dataset, cfg.out)
    from .reports import write_json

    write_json(
        {
            "command": "synth",
            "params": {k: p[k] for k in sorted(p)},
            "n_epochs": len(dataset.epochs),
            "n_channels": dataset.n_channels,
            "fs": dataset.fs,
        },
        cfg.out / "report.json",
    )
    print(
        f"wrote dataset: {len(dataset.epochs)} epochs, "
        f"{dataset.n_channels} channels @ {dataset.fs:g} Hz -> {cfg.out}"
    )
    return 0


def cmd_preprocess(args) -> int:
    cfg = resolve_config("preprocess", args)
    from .data import load_recording, save_dataset
    from .pipeline import PreprocessConfig, preprocess
    from .reports import write_json

    p = cfg.params
    recording = load_recording(args.data)
    pre_cfg = PreprocessConfig(
        target_fs=float(p["target_fs"]),
        band=(float(p["band"][0]), float(p["band"][1])),
        order=int(p["order"]),
        epoch_ms=float(p["epoch_ms"]),
        baseline_ms=float(p["baseline_ms"]),
    )
    dataset = preprocess(recording, pre_cfg)
    save_dataset(dataset, cfg.out)
    write_json(
        {
            "command": "preprocess",
            "params": {k: p[k] for k in sorted(p)},
            "n_epochs": len(dataset.epochs),
            "fs": dataset.fs,
        },
        cfg.out / "report.json",
    )
    print(f"preprocessed {len(dataset.epochs)} epochs -> {cfg.out}")
    return 0


def _train_config(p):
    from .nn import TrainConfig

    return TrainConfig(epochs=int(p["epochs"]), batch_size=int(p["batch"]),
                       lr=float(p["lr"]))


def _spec_template(dataset, p):
    from .nn import NetworkSpec

    return NetworkSpec.for_dataset(
        dataset, use_spectral_block=not bool(p.get("no_spectral_block", False))
    )


def cmd_train(args) -> int:
    cfg = resolve_config("train", args)
    from .evaluation import cross_validate
    from .reports import (
        eval_report_dict,
        write_confusion_csv,
        write_fold_csv,
        write_json,
    )
    from . import svg

    p = cfg.params
    dataset = _maybe_select(_load(args.data), _parse_channels(p["channels"]))
    subset = dataset.filter(condition=_condition(p["condition"]))
    if not subset.epochs:
        raise DataError(f"no epochs for condition {p['condition']!r}")
    report = cross_validate(
        subset,
        spec=_spec_template(subset, p),
        cfg=_train_config(p),
        k=int(p["folds"]),
        seed=cfg.seed,
    )
    cfg.out.mkdir(parents=True, exist_ok=True)
    write_json(
        {"command": "train", "params": {k: p[k] for k in sorted(p)},
         "report": eval_report_dict(report)},
        cfg.out / "report.json",
    )
    write_fold_csv(report, cfg.out / "folds.csv")
    write_confusion_csv(report, cfg.out / "confusion.csv")
    s = dataset.n_subjects
    (cfg.out / "confusion.svg").write_text(
        svg.heatmap(
            report.normalized_confusion(),
            [f"s{i}" for i in range(s)],
            [f"s{i}" for i in range(s)],
            f"Normalized confusion ({p['condition']})",
        )
    )
    _print_accuracy(report, s)
    return 0


def cmd_sweep(args) -> int:
    cfg = resolve_config("sweep", args)
    from .evaluation import channel_sweep
    from .reports import write_json, write_sweep_csv
    from . import svg

    p = cfg.params
    dataset = _load(args.data)
    subset = dataset.filter(condition=_condition(p["condition"]))
    if not subset.epochs:
        raise DataError(f"no epochs for condition {p['condition']!r}")
    labels = _parse_channels(p["channels"])
    rows = channel_sweep(
        subset,
        labels=labels,
        spec=_spec_template(subset, p),
        cfg=_train_config(p),
        k=int(p["folds"]),
        seed=cfg.seed,
    )
    cfg.out.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(rows, cfg.out / "sweep.csv")
    write_json(
        {
            "command": "sweep",
            "params": {k: p[k] for k in sorted(p)},
            "rows": [
                {"channel": lab, "mean_accuracy": m, "std": sd}
                for lab, m, sd in rows
            ],
        },
        cfg.out / "report.json",
    )
    (cfg.out / "sweep.svg").write_text(
        svg.bar_chart(
            [r[0] for r in rows],
            [r[1] for r in rows],
            [r[2] for r in rows],
            f"Single-channel accuracy ({p['condition']})",
            "accuracy (%)",
        )
    )
    best = max(rows, key=lambda r: r[1])
    for lab, mean, std in rows:
        marker = " *" if lab == best[0] else ""
        print(f"{lab:>5s}  {mean:6.2f} +- {std:5.2f} %{marker}")
    return 0


def cmd_plv(args) -> int:
    cfg = resolve_config("plv", args)
    from .neurofeat import plv_contrast, plv_matrix
    from .reports import contrast_dict, direction_matrix, write_json, write_plv_csv
    from . import svg

    p = cfg.params
    dataset = _load(args.data)
    labels = _parse_channels(p["channels"])
    cond_a, cond_b = _condition(p["cond_a"]), _condition(p["cond_b"])
    alpha = float(p["alpha"])
    cfg.out.mkdir(parents=True, exist_ok=True)
    result_a = plv_matrix(dataset, cond_a, labels=labels)
    result_b = plv_matrix(dataset, cond_b, labels=labels)
    write_plv_csv(result_a, cfg.out / f"plv_{cond_a.value}.csv")
    write_plv_csv(result_b, cfg.out / f"plv_{cond_b.value}.csv")
    pooled = plv_contrast(dataset, cond_a, cond_b, alpha=alpha, labels=labels)
    per_subject = {}
    for subj in sorted({ep.subject for ep in dataset.epochs}):
        res = plv_contrast(
            dataset, cond_a, cond_b, alpha=alpha, labels=labels, subject=subj
        )
        per_subject[str(subj)] = contrast_dict(res)
    write_json(
        {
            "command": "plv",
            "params": {k: p[k] for k in sorted(p)},
            "pooled": contrast_dict(pooled),
            "per_subject": per_subject,
        },
        cfg.out / "contrast.json",
    )
    from .data import SPEECH_MONTAGE

    grid_labels = labels or [
        ch for ch in SPEECH_MONTAGE if ch in dataset.channel_labels
    ]
    (cfg.out / "plv_grid.svg").write_text(
        svg.significance_grid(
            grid_labels,
            direction_matrix(pooled, grid_labels),
            f"PLV contrast {cond_a.value} vs {cond_b.value} (alpha={alpha:g})",
        )
    )
    n_sig = int(pooled.significant.sum())
    print(
        f"{len(pooled.pairs)} channel pairs, {n_sig} significant at "
        f"alpha={alpha:g} ({cond_a.value} vs {cond_b.value})"
    )
    return 0


def cmd_envelope(args) -> int:
    cfg = resolve_config("envelope", args)
    from .neurofeat import envelope_summary
    from .reports import write_envelope_csv, write_json
    from . import svg

    p = cfg.params
    dataset = _load(args.data)
    condition = _condition(p["condition"])
    subjects = sorted(
        {ep.subject for ep in dataset.epochs if ep.condition == condition}
    )
    if not subjects:
        raise DataError(f"no epochs for condition {p['condition']!r}")
    summaries = [
        envelope_summary(dataset, condition, subj, n_taps=int(p["n_taps"]))
        for subj in subjects
    ]
    pre_ms = dataset.epochs[0].pre_onset_ms
    cfg.out.mkdir(parents=True, exist_ok=True)
    write_envelope_csv(summaries, pre_ms, cfg.out / "envelope.csv")
    series = [
        (f"s{sm.subject}", sm.time_ms(pre_ms), sm.mean) for sm in summaries
    ]
    (cfg.out / "envelope.svg").write_text(
        svg.line_plot(
            series,
            f"Grand-averaged envelope ({condition.value})",
            "time from onset (ms)",
            "envelope (uV)",
        )
    )
    write_json(
        {
            "command": "envelope",
            "params": {k: p[k] for k in sorted(p)},
            "subjects": subjects,
            "n_trials": {str(sm.subject): sm.n_trials for sm in summaries},
        },
        cfg.out / "report.json",
    )
    print(f"envelope traces for {len(subjects)} subjects -> {cfg.out}")
    return 0


def cmd_ablate(args) -> int:
    cfg = resolve_config("ablate", args)
    from .evaluation import ablation_compare
    from .reports import eval_report_dict, write_json
    from .stats import permutation_ttest
    from . import svg

    p = cfg.params
    dataset = _load(args.data)
    subset = dataset.filter(condition=_condition(p["condition"]))
    if not subset.epochs:
        raise DataError(f"no epochs for condition {p['condition']!r}")
    channels = _parse_channels(p["channels"])
    single = channels[0] if channels else None
    arms = ablation_compare(
        subset,
        cfg=_train_config(p),
        k=int(p["folds"]),
        seed=cfg.seed,
        single_channel=single,
    )
    cfg.out.mkdir(parents=True, exist_ok=True)

    def arm_key(scope: str, on: bool) -> str:
        return f"{scope}_spectral_{'on' if on else 'off'}"

    import math

    comparisons = {}
    for scope in ("all", "single"):
        on = arms[(scope, True)].fold_accuracies
        off = arms[(scope, False)].fold_accuracies
        res = permutation_ttest(
            on, off, n_perm=int(p["n_perm"]), seed=cfg.seed, paired=True
        )
        t = float(res.statistic)
        comparisons[scope] = {
            "t": t if math.isfinite(t) else ("inf" if t > 0 else "-inf"),
            "p": float(res.p),
            "n_permutations": res.n_permutations,
        }
    write_json(
        {
            "command": "ablate",
            "params": {k: p[k] for k in sorted(p)},
            "arms": {
                arm_key(scope, on): eval_report_dict(arms[(scope, on)])
                for scope in ("all", "single")
                for on in (True, False)
            },
            "spectral_on_vs_off": comparisons,
        },
        cfg.out / "report.json",
    )
    labels = []
    values = []
    errors = []
    for scope in ("all", "single"):
        for on in (True, False):
            labels.append(arm_key(scope, on))
            values.append(arms[(scope, on)].mean_accuracy)
            errors.append(arms[(scope, on)].std_accuracy)
    (cfg.out / "ablation.svg").write_text(
        svg.bar_chart(labels, values, errors,
                      f"Spectral-block ablation ({p['condition']})",
                      "accuracy (%)")
    )
    for lab, v, e in zip(labels, values, errors):
        print(f"{lab:>24s}: {v:6.2f} +- {e:5.2f} %")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_common(sub, data_required=True):
    sub.add_argument("--out", required=True, help="output directory")
    sub.add_argument("--config", help="JSON config file (flags override it)")
    sub.add_argument("--seed", type=int, help="global random seed")
    if data_required:
        sub.add_argument("--data", required=True, help="input directory")


def _add_training_flags(sub):
    sub.add_argument("--folds", type=int, help="cross-validation folds")
    sub.add_argument("--epochs", type=int, help="training epochs")
    sub.add_argument("--lr", type=float, help="Adam learning rate")
    sub.add_argument("--batch", type=int, help="mini-batch size")
    sub.add_argument("--channels", help="comma-separated channel labels")
    sub.add_argument("--condition", help="condition to analyse")
    sub.add_argument(
        "--no-spectral-block",
        dest="no_spectral_block",
        action="store_const",
        const=True,
        help="ablate the separable-convolution stage",
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="neuroprint",
        description="EEG speaker identification: preprocessing, compact CNN "
        "classification, connectivity and envelope analyses.",
    )
    subs = parser.add_subparsers(dest="command")

    s = subs.add_parser("synth", help="generate a synthetic dataset")
    _add_common(s, data_required=False)
    s.add_argument("--subjects", type=int, help="number of subjects")
    s.add_argument("--trials", type=int, help="trials per subject per condition")
    s.add_argument(
        "--informative-channels",
        dest="informative_channels",
        help="restrict subject signatures to these channels (comma-separated)",
    )
    s.set_defaults(func=cmd_synth)

    s = subs.add_parser("preprocess", help="decimate/filter/epoch a recording")
    _add_common(s)
    s.set_defaults(func=cmd_preprocess)

    s = subs.add_parser("train", help="k-fold cross-validated training")
    _add_common(s)
    _add_training_flags(s)
    s.set_defaults(func=cmd_train)

    s = subs.add_parser("sweep", help="single-channel accuracy sweep")
    _add_common(s)
    _add_training_flags(s)
    s.set_defaults(func=cmd_sweep)

    s = subs.add_parser("plv", help="phase-locking contrast between conditions")
    _add_common(s)
    s.add_argument("--alpha", type=float, help="significance level")
    s.add_argument("--channels", help="comma-separated channel labels")
    s.add_argument("--cond-a", dest="cond_a", help="first condition")
    s.add_argument("--cond-b", dest="cond_b", help="second condition")
    s.set_defaults(func=cmd_plv)

    s = subs.add_parser("envelope", help="grand-averaged envelope per subject")
    _add_common(s)
    s.add_argument("--condition", help="condition to analyse")
    s.set_defaults(func=cmd_envelope)

    s = subs.add_parser("ablate", help="spectral-block ablation (4 arms)")
    _add_common(s)
    _add_training_flags(s)
    s.add_argument("--alpha", type=float, help="significance level")
    s.add_argument("--n-perm", dest="n_perm", type=int,
                   help="permutations for arm comparison")
    s.set_defaults(func=cmd_ablate)

    return parser


def main(argv=None) -> int:
    try:
        _apply_thread_cap()
        parser = _build_parser()
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            parser.print_usage(sys.stderr)
            return 2
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
