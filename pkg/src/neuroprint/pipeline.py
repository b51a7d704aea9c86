"""Preprocessing chain: decimate, band-pass, epoch, baseline-correct.

Filtering is applied to the continuous recording before epoching so cut
epochs carry no per-trial filter transients.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import dsp
from .data import Dataset, Epoch, Recording
from .errors import ConfigError, DataError


@dataclass(frozen=True)
class PreprocessConfig:
    """Parameters of the preprocessing chain.

    Defaults: 250 Hz target rate, 5th-order Butterworth band-pass over the
    30-120 Hz high-gamma band, 2 s epochs with a 500 ms baseline margin.
    """

    target_fs: float = 250.0
    band: tuple[float, float] = (30.0, 120.0)
    order: int = 5
    epoch_ms: float = 2000.0
    baseline_ms: float = 500.0

    def __post_init__(self):
        low, high = self.band
        if not (0.0 < low < high < self.target_fs / 2.0):
            raise ConfigError(
                f"band {self.band} must lie within (0, {self.target_fs / 2.0}) Hz"
            )
        if self.order < 1:
            raise ConfigError(f"order must be >= 1, got {self.order}")
        if self.epoch_ms <= 0 or self.baseline_ms < 0:
            raise ConfigError("epoch_ms must be positive and baseline_ms >= 0")


def baseline_correct(epoch: Epoch) -> Epoch:
    """Subtract each channel's pre-onset mean from the whole epoch."""
    if epoch.pre_onset_ms < 500.0 or epoch.n_pre < 1:
        raise DataError(
            f"missing pre-onset margin: epoch has {epoch.pre_onset_ms} ms, "
            f"baseline correction needs >= 500 ms"
        )
    offsets = epoch.data[:, : epoch.n_pre].mean(axis=1, keepdims=True)
    return replace(epoch, data=epoch.data - offsets)


def preprocess(recording: Recording, cfg: PreprocessConfig | None = None) -> Dataset:
    """Run the full chain on a continuous recording.

    Per channel: decimate to ``target_fs``, band-pass (zero-phase), then cut
    one epoch of ``baseline_ms + epoch_ms`` per event and subtract the
    per-channel baseline mean.  Deterministic: equal inputs give bitwise
    equal outputs.
    """
    cfg = cfg or PreprocessConfig()
    if recording.fs < cfg.target_fs:
        raise ConfigError(
            f"recording fs {recording.fs} Hz below target {cfg.target_fs} Hz"
        )
    ratio = recording.fs / cfg.target_fs
    k = int(round(ratio))
    if abs(ratio - k) > 1e-9:
        raise ConfigError(
            f"non-integer decimation: {recording.fs} / {cfg.target_fs} = {ratio:.6g}"
        )

    x = dsp.decimate(recording.samples, recording.fs, cfg.target_fs, axis=-1)
    bandpass = dsp.design_butterworth_bandpass(
        cfg.order, cfg.band[0], cfg.band[1], cfg.target_fs
    )
    x = dsp.filtfilt(bandpass, x, axis=-1)

    fs = cfg.target_fs
    n_pre = int(round(cfg.baseline_ms * fs / 1000.0))
    n_post = int(round(cfg.epoch_ms * fs / 1000.0))
    n_total = x.shape[1]

    epochs = []
    for ev in recording.events:
        onset = ev.onset // k
        if onset - n_pre < 0:
            raise DataError(
                f"insufficient pre-onset margin: event at sample {onset} "
                f"({fs} Hz) needs {n_pre} samples before onset"
            )
        if onset + n_post > n_total:
            raise DataError(
                f"epoch exceeds recording end: event at sample {onset} needs "
                f"{n_post} samples after onset, recording has {n_total}"
            )
        data = x[:, onset - n_pre : onset + n_post].copy()
        if n_pre > 0:
            data -= data[:, :n_pre].mean(axis=1, keepdims=True)
        epochs.append(
            Epoch(
                data=data,
                fs=fs,
                subject=ev.subject,
                condition=ev.condition,
                session=ev.session,
                word=ev.word,
                pre_onset_ms=cfg.baseline_ms,
            )
        )

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return Dataset(
            epochs=epochs,
            montage=list(recording.montage),
            fs=fs,
            n_subjects=recording.n_subjects,
            epoch_ms=cfg.epoch_ms,
        )
