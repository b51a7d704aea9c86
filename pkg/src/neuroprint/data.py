"""Core domain types and on-disk formats for epoch-based EEG datasets.

A :class:`Recording` is a continuous multichannel signal with event markers;
a :class:`Dataset` is the epoched, labelled form consumed by the classifier
and the analysis code.  Samples are microvolts, stored on disk as 32-bit
little-endian floats; everything in memory is float64.
"""

from __future__ import annotations

import json
import warnings
from collections import Counter
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import DataError

#: The ten channels over Broca's and Wernicke's areas used for single-channel
#: speaker identification and for the connectivity analysis.
SPEECH_MONTAGE: tuple[str, ...] = (
    "AF3", "F3", "F5", "FC3", "FC5", "T7", "C5", "TP7", "CP5", "P5",
)

#: Recognized 10-20 / 10-10 electrode labels (superset used for validation).
KNOWN_CHANNEL_LABELS: frozenset[str] = frozenset(
    """
    Fp1 Fpz Fp2 AF7 AF3 AFz AF4 AF8
    F9 F7 F5 F3 F1 Fz F2 F4 F6 F8 F10
    FT9 FT7 FC5 FC3 FC1 FCz FC2 FC4 FC6 FT8 FT10
    T9 T7 C5 C3 C1 Cz C2 C4 C6 T8 T10
    TP9 TP7 CP5 CP3 CP1 CPz CP2 CP4 CP6 TP8 TP10
    P9 P7 P5 P3 P1 Pz P2 P4 P6 P8 P10
    PO7 PO3 POz PO4 PO8 O1 Oz O2 Iz
    T3 T4 T5 T6 A1 A2 M1 M2
    """.split()
)

_HEADER_NAME = "header.json"
_RECORDING_HEADER = "recording.json"
_RECORDING_SAMPLES = "samples.bin"


class Condition(Enum):
    """The four experimental conditions."""

    IMAGINED_SPEECH = "imagined_speech"
    OVERT_SPEECH = "overt_speech"
    SPEECH_PERCEPTION = "speech_perception"
    RESTING_STATE = "resting_state"

    @classmethod
    def from_string(cls, name: str) -> "Condition":
        try:
            return cls(name)
        except ValueError:
            valid = ", ".join(c.value for c in cls)
            raise DataError(f"unknown condition {name!r} (expected one of: {valid})")


@dataclass(frozen=True)
class ChannelId:
    """A named electrode position and its row index within a montage."""

    label: str
    index: int


@dataclass(frozen=True)
class Event:
    """Trial marker on a continuous recording. ``onset`` is a sample index."""

    onset: int
    subject: int
    condition: Condition
    session: int = 0
    word: int = 0


def make_montage(labels: list[str] | tuple[str, ...]) -> list[ChannelId]:
    """Build a montage from channel labels, validating names and uniqueness."""
    if len(set(labels)) != len(labels):
        raise DataError(f"duplicate channel labels in montage: {list(labels)}")
    for lab in labels:
        if lab not in KNOWN_CHANNEL_LABELS:
            raise DataError(f"unknown channel label {lab!r}")
    return [ChannelId(label=lab, index=i) for i, lab in enumerate(labels)]


@dataclass
class Recording:
    """Continuous multichannel EEG with event markers.

    Attributes:
        samples: (n_channels, n_samples) float64 array, microvolts.
        fs: Sampling rate in Hz.
        montage: Ordered channel identities; one per row of ``samples``.
        events: Trial markers; onsets are sample indices into ``samples``.
        n_subjects: Number of distinct subjects the events refer to.
    """

    samples: np.ndarray
    fs: float
    montage: list[ChannelId]
    events: list[Event]
    n_subjects: int = 0

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 2:
            raise DataError(f"samples must be 2-D, got shape {self.samples.shape}")
        if self.fs <= 0:
            raise DataError(f"sampling rate must be positive, got {self.fs}")
        if self.samples.shape[0] != len(self.montage):
            raise DataError(
                f"montage has {len(self.montage)} channels but samples has "
                f"{self.samples.shape[0]} rows"
            )
        n = self.samples.shape[1]
        for ev in self.events:
            if not 0 <= ev.onset < n:
                raise DataError(f"event onset {ev.onset} outside recording [0, {n})")
        if self.n_subjects <= 0:
            self.n_subjects = 1 + max((ev.subject for ev in self.events), default=-1)

    @property
    def channel_labels(self) -> list[str]:
        return [ch.label for ch in self.montage]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]


@dataclass
class Epoch:
    """One fixed-length labelled trial, including its pre-onset margin.

    The classified window is the post-onset slice; the pre-onset margin exists
    so baseline correction is self-contained.
    """

    data: np.ndarray
    fs: float
    subject: int
    condition: Condition
    session: int = 0
    word: int = 0
    pre_onset_ms: float = 500.0

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2:
            raise DataError(f"epoch data must be 2-D, got shape {self.data.shape}")
        if self.fs <= 0:
            raise DataError(f"sampling rate must be positive, got {self.fs}")
        if self.subject < 0:
            raise DataError(f"subject id must be non-negative, got {self.subject}")
        if not 0 <= self.n_pre < self.data.shape[1]:
            raise DataError(
                f"pre-onset margin ({self.n_pre} samples) does not fit epoch of "
                f"length {self.data.shape[1]}"
            )

    @property
    def n_pre(self) -> int:
        """Pre-onset margin in samples."""
        return int(round(self.pre_onset_ms * self.fs / 1000.0))

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]

    def baseline_window(self) -> np.ndarray:
        """The pre-onset slice, (n_channels, n_pre)."""
        return self.data[:, : self.n_pre]

    def analysis_window(self) -> np.ndarray:
        """The post-onset slice used for classification and analyses."""
        return self.data[:, self.n_pre :]


@dataclass
class Dataset:
    """Homogeneous collection of epochs sharing montage, rate and length.

    Attributes:
        epochs: The trials.
        montage: Channel identities shared by every epoch.
        fs: Sampling rate in Hz.
        n_subjects: Subject count S (chance level is 1/S).
        epoch_ms: Post-onset window duration in milliseconds.
    """

    epochs: list[Epoch]
    montage: list[ChannelId]
    fs: float
    n_subjects: int = 0
    epoch_ms: float = 2000.0

    def __post_init__(self):
        if self.fs <= 0:
            raise DataError(f"sampling rate must be positive, got {self.fs}")
        if len({ch.label for ch in self.montage}) != len(self.montage):
            raise DataError("duplicate channel labels in montage")
        if self.n_subjects <= 0:
            self.n_subjects = 1 + max((e.subject for e in self.epochs), default=-1)
        self._validate_epochs()

    def _validate_epochs(self):
        if not self.epochs:
            return
        lengths = Counter(e.n_samples for e in self.epochs)
        majority_len = lengths.most_common(1)[0][0]
        for i, ep in enumerate(self.epochs):
            if ep.fs != self.fs:
                raise DataError(f"epoch {i}: fs {ep.fs} != dataset fs {self.fs}")
            if ep.data.shape[0] != len(self.montage):
                raise DataError(
                    f"epoch {i}: {ep.data.shape[0]} channels, montage has "
                    f"{len(self.montage)}"
                )
            if ep.n_samples != majority_len:
                raise DataError(
                    f"epoch {i}: length {ep.n_samples} differs from majority "
                    f"{majority_len}"
                )
            expected = int(round((ep.pre_onset_ms + self.epoch_ms) * self.fs / 1000.0))
            if ep.n_samples != expected:
                raise DataError(
                    f"epoch {i}: length {ep.n_samples} != expected {expected} "
                    f"(pre_onset_ms={ep.pre_onset_ms}, epoch_ms={self.epoch_ms}, "
                    f"fs={self.fs})"
                )
            if ep.subject >= self.n_subjects:
                raise DataError(
                    f"epoch {i}: subject {ep.subject} >= n_subjects {self.n_subjects}"
                )
        self._warn_if_unbalanced()

    def _warn_if_unbalanced(self):
        by_condition: dict[Condition, Counter] = {}
        for ep in self.epochs:
            by_condition.setdefault(ep.condition, Counter())[ep.subject] += 1
        for cond, counts in by_condition.items():
            if len(set(counts.values())) > 1:
                warnings.warn(
                    f"unbalanced classes in condition {cond.value}: "
                    f"per-subject counts {dict(sorted(counts.items()))}",
                    stacklevel=3,
                )

    def __len__(self) -> int:
        return len(self.epochs)

    @property
    def channel_labels(self) -> list[str]:
        return [ch.label for ch in self.montage]

    @property
    def n_channels(self) -> int:
        return len(self.montage)

    def filter(
        self,
        condition: Condition | None = None,
        subject: int | None = None,
        session: int | None = None,
    ) -> "Dataset":
        """Subset by condition / subject / session, keeping metadata."""
        kept = [
            ep
            for ep in self.epochs
            if (condition is None or ep.condition == condition)
            and (subject is None or ep.subject == subject)
            and (session is None or ep.session == session)
        ]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return Dataset(
                epochs=kept,
                montage=list(self.montage),
                fs=self.fs,
                n_subjects=self.n_subjects,
                epoch_ms=self.epoch_ms,
            )

    def subset(self, indices) -> "Dataset":
        """New dataset containing the epochs at ``indices``, in that order."""
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return Dataset(
                epochs=[self.epochs[int(i)] for i in indices],
                montage=list(self.montage),
                fs=self.fs,
                n_subjects=self.n_subjects,
                epoch_ms=self.epoch_ms,
            )

    def classification_tensor(self) -> tuple[np.ndarray, np.ndarray]:
        """Stack post-onset windows into (N, C, T) with subject labels (N,)."""
        if not self.epochs:
            raise DataError("dataset has no epochs")
        x = np.stack([ep.analysis_window() for ep in self.epochs])
        y = np.array([ep.subject for ep in self.epochs], dtype=np.int64)
        return x, y


def select_channels(dataset: Dataset, labels: list[str]) -> Dataset:
    """Project a dataset onto the given channels, in the given order."""
    index_of = {ch.label: ch.index for ch in dataset.montage}
    rows = []
    for lab in labels:
        if lab not in index_of:
            raise DataError(f"unknown channel label {lab!r} (montage has "
                            f"{dataset.channel_labels})")
        rows.append(index_of[lab])
    rows = np.array(rows, dtype=np.intp)
    new_montage = [ChannelId(label=lab, index=i) for i, lab in enumerate(labels)]
    new_epochs = [replace(ep, data=ep.data[rows].copy()) for ep in dataset.epochs]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return Dataset(
            epochs=new_epochs,
            montage=new_montage,
            fs=dataset.fs,
            n_subjects=dataset.n_subjects,
            epoch_ms=dataset.epoch_ms,
        )


# ---------------------------------------------------------------------------
# On-disk dataset format: header.json + one raw float32-LE binary per epoch
# ---------------------------------------------------------------------------

def _dump_json(obj, path: Path) -> None:
    # sort_keys + fixed separators so identical inputs give identical bytes
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def save_dataset(dataset: Dataset, path: str | Path) -> None:
    """Write a dataset directory: ``header.json`` plus one binary per epoch.

    Epoch binaries are row-major (channels x time) float32 little-endian with
    no padding.  Output bytes are a pure function of the dataset contents.
    """
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, ep in enumerate(dataset.epochs):
        fname = f"epoch_{i:05d}.bin"
        (root / fname).write_bytes(ep.data.astype("<f4").tobytes(order="C"))
        entries.append(
            {
                "file": fname,
                "subject": ep.subject,
                "condition": ep.condition.value,
                "session": ep.session,
                "word": ep.word,
            }
        )
    header = {
        "fs": dataset.fs,
        "channels": dataset.channel_labels,
        "subjects": dataset.n_subjects,
        "pre_onset_ms": dataset.epochs[0].pre_onset_ms if dataset.epochs else 500.0,
        "epoch_ms": dataset.epoch_ms,
        "epochs": entries,
    }
    _dump_json(header, root / _HEADER_NAME)


def load_dataset(path: str | Path) -> Dataset:
    """Read a dataset directory written by :func:`save_dataset`.

    Raises DataError on a malformed header, an epoch binary whose size does
    not match the header geometry, or an unknown channel label.  Unbalanced
    per-subject counts produce a warning, not an error.
    """
    root = Path(path)
    header_path = root / _HEADER_NAME
    if not header_path.is_file():
        raise DataError(f"no {_HEADER_NAME} in {root}")
    try:
        header = json.loads(header_path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"malformed header: {exc}") from exc
    for key in ("fs", "channels", "subjects", "pre_onset_ms", "epoch_ms", "epochs"):
        if key not in header:
            raise DataError(f"malformed header: missing field {key!r}")
    fs = float(header["fs"])
    montage = make_montage(list(header["channels"]))
    n_ch = len(montage)
    pre_ms = float(header["pre_onset_ms"])
    epoch_ms = float(header["epoch_ms"])
    n_samples = int(round((pre_ms + epoch_ms) * fs / 1000.0))
    epochs = []
    for entry in header["epochs"]:
        raw = (root / entry["file"]).read_bytes()
        expected = n_ch * n_samples * 4
        if len(raw) != expected:
            raise DataError(
                f"sample-count mismatch in {entry['file']}: {len(raw)} bytes, "
                f"header implies {expected} ({n_ch} ch x {n_samples} samples)"
            )
        data = np.frombuffer(raw, dtype="<f4").reshape(n_ch, n_samples)
        epochs.append(
            Epoch(
                data=data.astype(np.float64),
                fs=fs,
                subject=int(entry["subject"]),
                condition=Condition.from_string(entry["condition"]),
                session=int(entry["session"]),
                word=int(entry["word"]),
                pre_onset_ms=pre_ms,
            )
        )
    return Dataset(
        epochs=epochs,
        montage=montage,
        fs=fs,
        n_subjects=int(header["subjects"]),
        epoch_ms=epoch_ms,
    )


# ---------------------------------------------------------------------------
# On-disk recording format (input to the preprocessing command)
# ---------------------------------------------------------------------------

def save_recording(recording: Recording, path: str | Path) -> None:
    """Write a recording directory: ``recording.json`` + ``samples.bin``."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    (root / _RECORDING_SAMPLES).write_bytes(
        recording.samples.astype("<f4").tobytes(order="C")
    )
    header = {
        "fs": recording.fs,
        "channels": recording.channel_labels,
        "subjects": recording.n_subjects,
        "n_samples": recording.n_samples,
        "events": [
            {
                "onset": ev.onset,
                "subject": ev.subject,
                "condition": ev.condition.value,
                "session": ev.session,
                "word": ev.word,
            }
            for ev in recording.events
        ],
    }
    _dump_json(header, root / _RECORDING_HEADER)


def load_recording(path: str | Path) -> Recording:
    """Read a recording directory written by :func:`save_recording`."""
    root = Path(path)
    header_path = root / _RECORDING_HEADER
    if not header_path.is_file():
        raise DataError(f"no {_RECORDING_HEADER} in {root}")
    try:
        header = json.loads(header_path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"malformed header: {exc}") from exc
    for key in ("fs", "channels", "subjects", "n_samples", "events"):
        if key not in header:
            raise DataError(f"malformed header: missing field {key!r}")
    montage = make_montage(list(header["channels"]))
    n_ch, n_samples = len(montage), int(header["n_samples"])
    raw = (root / _RECORDING_SAMPLES).read_bytes()
    if len(raw) != n_ch * n_samples * 4:
        raise DataError(
            f"sample-count mismatch in {_RECORDING_SAMPLES}: {len(raw)} bytes, "
            f"header implies {n_ch * n_samples * 4}"
        )
    samples = np.frombuffer(raw, dtype="<f4").reshape(n_ch, n_samples)
    events = [
        Event(
            onset=int(e["onset"]),
            subject=int(e["subject"]),
            condition=Condition.from_string(e["condition"]),
            session=int(e["session"]),
            word=int(e["word"]),
        )
        for e in header["events"]
    ]
    return Recording(
        samples=samples.astype(np.float64),
        fs=float(header["fs"]),
        montage=montage,
        events=events,
        n_subjects=int(header["subjects"]),
    )
