"""Experiment harness: stratified k-fold CV, channel sweep, ablation.

Folds are stratified by subject (the class label).  A fold assignment can be
built once and reused across sweep/ablation arms so arm differences are
attributable to the manipulated factor only.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .data import Dataset, select_channels
from .errors import ConfigError, DataError
from .nn import Network, NetworkSpec, TrainConfig, build_network, predict, train


@dataclass(frozen=True)
class FoldAssignment:
    """Fold id (0..k-1) per epoch; disjoint, covering, per-subject balanced."""

    folds: np.ndarray
    k: int

    def __post_init__(self):
        folds = np.asarray(self.folds, dtype=np.int64)
        object.__setattr__(self, "folds", folds)
        if folds.size and (folds.min() < 0 or folds.max() >= self.k):
            raise DataError("fold ids out of range")

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.folds == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.folds != fold)


@dataclass
class EvalReport:
    """Cross-validation outcome.

    ``confusion`` is the unnormalized S x S count matrix (rows = true
    subject) accumulated over all held-out folds; accuracies are percent.
    """

    fold_accuracies: list[float]
    confusion: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.fold_accuracies))

    @property
    def std_accuracy(self) -> float:
        if len(self.fold_accuracies) < 2:
            return 0.0
        return float(np.std(self.fold_accuracies, ddof=1))

    @property
    def overall_accuracy(self) -> float:
        total = self.confusion.sum()
        return 100.0 * float(np.trace(self.confusion)) / total if total else 0.0

    def normalized_confusion(self) -> np.ndarray:
        """Rows scaled to sum to 1 (rows with no trials stay zero)."""
        sums = self.confusion.sum(axis=1, keepdims=True).astype(np.float64)
        out = np.zeros_like(self.confusion, dtype=np.float64)
        np.divide(self.confusion, sums, out=out, where=sums > 0)
        return out


def stratified_kfold(dataset: Dataset, k: int = 5, seed: int = 0) -> FoldAssignment:
    """Assign epochs to k folds, round-robin per subject after a seeded shuffle.

    Per-subject counts across folds differ by at most one.  Requires k >= 2
    and at least k epochs for every subject present.
    """
    if k < 2:
        raise ConfigError(f"k must be >= 2 (k={k} leaves no held-out data)")
    subjects = np.array([ep.subject for ep in dataset.epochs], dtype=np.int64)
    if subjects.size == 0:
        raise DataError("empty dataset")
    rng = np.random.default_rng(seed)
    folds = np.full(subjects.size, -1, dtype=np.int64)
    for subj in np.unique(subjects):
        idx = np.flatnonzero(subjects == subj)
        if idx.size < k:
            raise DataError(
                f"subject {subj} has {idx.size} epochs, needs >= {k} for {k}-fold"
            )
        rng.shuffle(idx)
        folds[idx] = np.arange(idx.size) % k
    return FoldAssignment(folds=folds, k=k)


def _resolve_spec(dataset: Dataset, spec: NetworkSpec | None) -> NetworkSpec:
    if spec is None:
        return NetworkSpec.for_dataset(dataset)
    resolved = NetworkSpec.for_dataset(
        dataset,
        f1=spec.f1,
        depth_mult=spec.depth_mult,
        f2=spec.f2,
        temporal_kernel=spec.temporal_kernel,
        sep_kernel=spec.sep_kernel,
        dropout_p=spec.dropout_p,
        use_spectral_block=spec.use_spectral_block,
    )
    return resolved


def cross_validate(
    dataset: Dataset,
    spec: NetworkSpec | None = None,
    cfg: TrainConfig | None = None,
    k: int = 5,
    seed: int = 0,
    folds: FoldAssignment | None = None,
) -> EvalReport:
    """Train k models, each tested on its held-out fold.

    ``spec`` acts as a hyperparameter template; its geometry is re-derived
    from the dataset.  Results are keyed by fold id and independent of
    training order.
    """
    cfg = cfg or TrainConfig()
    spec = _resolve_spec(dataset, spec)
    folds = folds or stratified_kfold(dataset, k=k, seed=seed)
    if folds.folds.size != len(dataset.epochs):
        raise DataError(
            f"fold assignment covers {folds.folds.size} epochs, dataset has "
            f"{len(dataset.epochs)}"
        )
    x, labels = dataset.classification_tensor()
    s = dataset.n_subjects
    confusion = np.zeros((s, s), dtype=np.int64)
    fold_accuracies = []
    for fold in range(folds.k):
        tr, te = folds.train_indices(fold), folds.test_indices(fold)
        net = build_network(spec, seed=seed * 1000003 + fold)
        net, _ = train(net, dataset.subset(tr), cfg, seed=seed * 7919 + fold)
        pred = predict(net, x[te])
        fold_accuracies.append(100.0 * float(np.mean(pred == labels[te])))
        for true, hat in zip(labels[te], pred):
            confusion[true, hat] += 1
    return EvalReport(
        fold_accuracies=fold_accuracies,
        confusion=confusion,
        metadata={
            "k": folds.k,
            "seed": seed,
            "channels": dataset.channel_labels,
            "spectral_block": spec.use_spectral_block,
            "epochs": cfg.epochs,
        },
    )


def channel_sweep(
    dataset: Dataset,
    labels: list[str] | None = None,
    spec: NetworkSpec | None = None,
    cfg: TrainConfig | None = None,
    k: int = 5,
    seed: int = 0,
) -> list[tuple[str, float, float]]:
    """Cross-validate every single-channel projection; one shared fold split.

    Rows come back in the given label order as (label, mean accuracy, std).
    Defaults to the ten speech-area channels present in the montage.
    """
    from .data import SPEECH_MONTAGE

    if labels is None:
        labels = [ch for ch in SPEECH_MONTAGE if ch in dataset.channel_labels]
    folds = stratified_kfold(dataset, k=k, seed=seed)
    rows = []
    for label in labels:
        sub = select_channels(dataset, [label])
        report = cross_validate(sub, spec=spec, cfg=cfg, k=k, seed=seed, folds=folds)
        rows.append((label, report.mean_accuracy, report.std_accuracy))
    return rows


def ablation_compare(
    dataset: Dataset,
    spec: NetworkSpec | None = None,
    cfg: TrainConfig | None = None,
    k: int = 5,
    seed: int = 0,
    single_channel: str | None = None,
) -> dict[tuple[str, bool], EvalReport]:
    """Four arms: {all channels, one channel} x {spectral block on, off}.

    All arms reuse one fold assignment built on the full dataset, so the
    only differences between arms are the manipulated factors.  Keys are
    (scope, spectral_on) with scope in {"all", "single"}.
    """
    spec = _resolve_spec(dataset, spec)
    if single_channel is None:
        single_channel = "T7" if "T7" in dataset.channel_labels else \
            dataset.channel_labels[0]
    folds = stratified_kfold(dataset, k=k, seed=seed)
    single = select_channels(dataset, [single_channel])
    arms: dict[tuple[str, bool], EvalReport] = {}
    for scope, ds in (("all", dataset), ("single", single)):
        for spectral_on in (True, False):
            arm_spec = replace(spec, use_spectral_block=spectral_on)
            report = cross_validate(
                ds, spec=arm_spec, cfg=cfg, k=k, seed=seed, folds=folds
            )
            report.metadata["scope"] = scope
            report.metadata["single_channel"] = single_channel
            arms[(scope, spectral_on)] = report
    return arms
