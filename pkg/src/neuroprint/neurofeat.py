"""Phase-locking connectivity and envelope analyses.

PLV is the magnitude of the time-averaged unit phasor of the phase
difference between two channels, computed per trial over the post-onset
window with FFT-analytic phases.  Envelopes come from the FIR Hilbert route
and are baseline-corrected against the pre-onset window.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from . import dsp, stats
from .data import SPEECH_MONTAGE, Condition, Dataset, Epoch
from .errors import ConfigError, DataError


@dataclass
class PLVResult:
    """Per-trial phase locking for every unordered channel pair.

    ``values`` has shape (n_pairs, n_trials); ``mean`` is the across-trial
    average per pair.  Values are in [0, 1] by construction.
    """

    pairs: list[tuple[str, str]]
    values: np.ndarray
    condition: Condition

    @property
    def mean(self) -> np.ndarray:
        return self.values.mean(axis=1)


@dataclass
class ContrastResult:
    """Paired-test outcome per channel pair for condition A versus B."""

    pairs: list[tuple[str, str]]
    t_values: np.ndarray
    p_values: np.ndarray
    mean_diff: np.ndarray
    alpha: float
    cond_a: Condition
    cond_b: Condition

    @property
    def significant(self) -> np.ndarray:
        return self.p_values < self.alpha

    def significant_pairs(self) -> list[tuple[str, str]]:
        return [p for p, sig in zip(self.pairs, self.significant) if sig]


@dataclass
class EnvelopeSummary:
    """Grand-averaged envelope for one (condition, subject).

    ``upper``/``lower`` are mean +/- std across trials, so the three traces
    are pointwise ordered.  ``edge_samples`` marks how many samples at each
    end are inside the Hilbert-filter transient and therefore unreliable.
    """

    subject: int
    condition: Condition
    fs: float
    mean: np.ndarray
    upper: np.ndarray
    lower: np.ndarray
    n_trials: int
    edge_samples: int

    def time_ms(self, pre_onset_ms: float) -> np.ndarray:
        """Time axis in ms relative to trial onset."""
        return np.arange(self.mean.size) / self.fs * 1000.0 - pre_onset_ms


def _channel_row(epoch_channels: list[str], label: str) -> int:
    try:
        return epoch_channels.index(label)
    except ValueError:
        raise DataError(f"missing channel {label!r}") from None


def plv_pair(epoch: Epoch, ch_a: int, ch_b: int) -> float:
    """PLV between two channel rows of one epoch, over the post-onset window."""
    window = epoch.analysis_window()
    n_ch = window.shape[0]
    for ch in (ch_a, ch_b):
        if not 0 <= ch < n_ch:
            raise DataError(f"missing channel index {ch} (epoch has {n_ch})")
    phase = dsp.analytic_phase_fft(window[[ch_a, ch_b]])
    return float(np.abs(np.mean(np.exp(1j * (phase[0] - phase[1])))))


def _plv_all_pairs(window: np.ndarray, pair_rows: list[tuple[int, int]]):
    phase = dsp.analytic_phase_fft(window)
    phasor = np.exp(1j * phase)
    out = np.empty(len(pair_rows))
    for i, (a, b) in enumerate(pair_rows):
        out[i] = np.abs(np.mean(phasor[a] * np.conj(phasor[b])))
    return out


def plv_matrix(
    dataset: Dataset,
    condition: Condition,
    labels: list[str] | None = None,
    subject: int | None = None,
) -> PLVResult:
    """Per-trial PLV for every unordered pair of the given channels.

    Ten channels give the 45 pairs of the speech-area analysis.
    """
    if labels is None:
        labels = [ch for ch in SPEECH_MONTAGE if ch in dataset.channel_labels]
    rows = [_channel_row(dataset.channel_labels, lab) for lab in labels]
    epochs = dataset.filter(condition=condition, subject=subject).epochs
    if not epochs:
        raise DataError(f"no epochs for condition {condition.value}")
    pair_labels = list(combinations(labels, 2))
    pair_rows = list(combinations(rows, 2))
    values = np.empty((len(pair_labels), len(epochs)))
    for j, ep in enumerate(epochs):
        values[:, j] = _plv_all_pairs(ep.analysis_window(), pair_rows)
    return PLVResult(pairs=pair_labels, values=values, condition=condition)


def plv_contrast(
    dataset: Dataset,
    cond_a: Condition = Condition.IMAGINED_SPEECH,
    cond_b: Condition = Condition.RESTING_STATE,
    alpha: float = 0.05,
    labels: list[str] | None = None,
    subject: int | None = None,
) -> ContrastResult:
    """Paired t-test per channel pair on per-trial PLV differences.

    Trials are paired by index within each subject, which requires equal
    trial counts per condition per subject.  A positive mean difference
    means higher locking in ``cond_a``.  Pass ``subject`` to restrict the
    contrast to one subject's trials.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ConfigError(f"alpha must be in [0, 1], got {alpha}")
    subjects = [subject] if subject is not None else sorted(
        {ep.subject for ep in dataset.epochs}
    )
    if not subjects:
        raise DataError("no epochs to contrast")
    pairs: list[tuple[str, str]] = []
    per_subject_a, per_subject_b = [], []
    for subj in subjects:
        res_a = plv_matrix(dataset, cond_a, labels=labels, subject=subj)
        res_b = plv_matrix(dataset, cond_b, labels=labels, subject=subj)
        if res_a.values.shape[1] != res_b.values.shape[1]:
            raise DataError(
                f"degenerate pairing: subject {subj} has "
                f"{res_a.values.shape[1]} {cond_a.value} trials but "
                f"{res_b.values.shape[1]} {cond_b.value} trials"
            )
        per_subject_a.append(res_a.values)
        per_subject_b.append(res_b.values)
        pairs = res_a.pairs
    values_a = np.concatenate(per_subject_a, axis=1)
    values_b = np.concatenate(per_subject_b, axis=1)
    n_pairs = len(pairs)
    t_values = np.empty(n_pairs)
    p_values = np.empty(n_pairs)
    for i in range(n_pairs):
        d = values_a[i] - values_b[i]
        if np.all(d == d[0]):
            # identical data in both conditions: no evidence either way
            t_values[i], p_values[i] = (0.0, 1.0) if d[0] == 0.0 else (
                np.inf * np.sign(d[0]), 0.0,
            )
        else:
            res = stats.paired_ttest(values_a[i], values_b[i])
            t_values[i], p_values[i] = res.statistic, res.p
    return ContrastResult(
        pairs=pairs,
        t_values=t_values,
        p_values=p_values,
        mean_diff=values_a.mean(axis=1) - values_b.mean(axis=1),
        alpha=alpha,
        cond_a=cond_a,
        cond_b=cond_b,
    )


def envelope_summary(
    dataset: Dataset,
    condition: Condition,
    subject: int,
    n_taps: int = 30,
) -> EnvelopeSummary:
    """Grand-averaged FIR-Hilbert envelope over trials of one subject.

    Per trial: the envelope of each channel, averaged across channels, then
    baseline-corrected by its own mean over the pre-onset window.  Upper and
    lower traces are the across-trial mean +/- one standard deviation.
    """
    epochs = dataset.filter(condition=condition, subject=subject).epochs
    if not epochs:
        raise DataError(
            f"no epochs for condition {condition.value}, subject {subject}"
        )
    fir = dsp.hilbert_fir(n_taps)
    traces = []
    for ep in epochs:
        env = dsp.analytic_envelope(ep.data, fir).mean(axis=0)
        env = env - env[: ep.n_pre].mean() if ep.n_pre > 0 else env
        traces.append(env)
    traces = np.asarray(traces)
    mean = traces.mean(axis=0)
    std = traces.std(axis=0)
    return EnvelopeSummary(
        subject=subject,
        condition=condition,
        fs=dataset.fs,
        mean=mean,
        upper=mean + std,
        lower=mean - std,
        n_trials=len(epochs),
        edge_samples=int(np.ceil(fir.group_delay)),
    )
