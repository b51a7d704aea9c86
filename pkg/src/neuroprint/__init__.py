"""neuroprint: speaker identification from EEG, desk-scale and reproducible.

The package mirrors a speech-EEG analysis pipeline end to end: high-gamma
preprocessing, a compact temporal-spectral-spatial CNN trained with a
squared-hinge margin loss, stratified cross-validation with single-channel
sweeps and a spectral-block ablation, phase-locking connectivity, envelope
summaries, nonparametric statistics, and a deterministic synthetic-EEG
generator that provides ground truth for all of it.
"""

from . import dsp, neurofeat, nn, pipeline, reports, stats, svg, synth
from .data import (
    SPEECH_MONTAGE,
    ChannelId,
    Condition,
    Dataset,
    Epoch,
    Event,
    Recording,
    load_dataset,
    load_recording,
    make_montage,
    save_dataset,
    save_recording,
    select_channels,
)
from .errors import ConfigError, DataError, NeuroprintError
from .evaluation import (
    EvalReport,
    FoldAssignment,
    ablation_compare,
    channel_sweep,
    cross_validate,
    stratified_kfold,
)
from .pipeline import PreprocessConfig, baseline_correct, preprocess
from .synth import SubjectProfile, SynthConfig, generate, make_profiles

__version__ = "0.1.0"

__all__ = [
    "SPEECH_MONTAGE",
    "ChannelId",
    "Condition",
    "ConfigError",
    "DataError",
    "Dataset",
    "Epoch",
    "EvalReport",
    "Event",
    "FoldAssignment",
    "NeuroprintError",
    "PreprocessConfig",
    "Recording",
    "SubjectProfile",
    "SynthConfig",
    "ablation_compare",
    "baseline_correct",
    "channel_sweep",
    "cross_validate",
    "dsp",
    "generate",
    "load_dataset",
    "load_recording",
    "make_montage",
    "make_profiles",
    "neurofeat",
    "nn",
    "pipeline",
    "preprocess",
    "reports",
    "save_dataset",
    "save_recording",
    "select_channels",
    "stats",
    "stratified_kfold",
    "svg",
    "synth",
]
