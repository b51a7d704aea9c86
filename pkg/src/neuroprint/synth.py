"""Deterministic synthetic EEG with subject-distinct high-gamma signatures.

Each trial is pink-noise background plus a subject-specific oscillator
(condition-scaled SNR, envelope bump at the subject's peak latency) plus
phase-locked pair injections during imagined speech.  The generator exists
to give the classifier, connectivity and envelope machinery a ground truth;
it is not a biophysical simulator.

Within a subject the oscillator is detuned per channel (evenly spaced
offsets within +/- 2 Hz): two channels carrying the exact same frequency
would hold a constant phase difference for a whole trial and spuriously
lock every channel pair.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import SPEECH_MONTAGE, Condition, Event, Recording, make_montage
from .errors import ConfigError

FREQ_GRID_HZ = np.arange(30.0, 120.0, 5.0)          # 18 slots: 30, 35, .. 115
LATENCY_GRID_MS = np.arange(300.0, 1800.0, 150.0)   # 10 slots: 300, 450, .. 1650
DETUNE_SPREAD_HZ = 2.0
BUMP_SIGMA_MS = 180.0
BUMP_HEIGHT = 1.5


@dataclass(frozen=True)
class Oscillator:
    """A narrowband component: base frequency, relative amplitude, and the
    per-channel phase lags and detune offsets."""

    freq_hz: float
    amplitude: float
    phase_lags: np.ndarray
    detune_hz: np.ndarray


@dataclass(frozen=True)
class SubjectProfile:
    """Ground-truth signature of one synthetic subject."""

    oscillators: list[Oscillator]
    envelope_peak_ms: float
    locked_pairs: list[tuple[tuple[str, str], float]]

    def __post_init__(self):
        for osc in self.oscillators:
            if not 30.0 <= osc.freq_hz <= 120.0:
                raise ConfigError(f"oscillator frequency {osc.freq_hz} outside band")
        for _, strength in self.locked_pairs:
            if not 0.0 <= strength <= 1.0:
                raise ConfigError(f"locking strength {strength} outside [0, 1]")

    @property
    def peak_freq_hz(self) -> float:
        return self.oscillators[0].freq_hz


def _default_snr() -> dict[Condition, float]:
    # speech production carries strong signatures, passive conditions weak
    return {
        Condition.IMAGINED_SPEECH: 0.8,
        Condition.OVERT_SPEECH: 0.6,
        Condition.SPEECH_PERCEPTION: 0.15,
        Condition.RESTING_STATE: 0.05,
    }


@dataclass
class SynthConfig:
    """Generator parameters.  ``snr`` is band power of the subject oscillator
    relative to the background's 30-120 Hz power, per condition."""

    n_subjects: int = 9
    trials_per_condition: int = 40
    fs: float = 500.0
    snr: dict[Condition, float] = field(default_factory=_default_snr)
    seed: int = 0
    pre_onset_ms: float = 500.0
    epoch_ms: float = 2000.0
    gap_ms: float = 250.0
    informative_channels: list[int] | None = None
    pair_gain: float = 1.6

    def __post_init__(self):
        if self.n_subjects < 2:
            raise ConfigError(f"need >= 2 subjects, got {self.n_subjects}")
        if self.trials_per_condition < 1:
            raise ConfigError("trials_per_condition must be >= 1")
        if self.fs <= 0:
            raise ConfigError(f"fs must be positive, got {self.fs}")
        if set(self.snr) != set(Condition):
            raise ConfigError("snr must define all four conditions")
        if any(v <= 0 for v in self.snr.values()):
            raise ConfigError("snr values must be positive")


def make_profiles(n_subjects: int, seed: int = 0) -> list[SubjectProfile]:
    """Deterministic profiles with >= 5 Hz frequency and >= 150 ms latency
    spacing between subjects; errors out when either grid is exhausted."""
    if n_subjects < 2:
        raise ConfigError(f"need >= 2 subjects, got {n_subjects}")
    if n_subjects > FREQ_GRID_HZ.size:
        raise ConfigError(
            f"grid exhaustion: {n_subjects} subjects need distinct frequency "
            f"slots but only {FREQ_GRID_HZ.size} exist with 5 Hz spacing in "
            f"[30, 120) Hz"
        )
    if n_subjects > LATENCY_GRID_MS.size:
        raise ConfigError(
            f"grid exhaustion: {n_subjects} subjects need distinct latency "
            f"slots but only {LATENCY_GRID_MS.size} exist with 150 ms spacing"
        )
    rng = np.random.default_rng(seed)
    n_ch = len(SPEECH_MONTAGE)
    freq_slots = rng.permutation(FREQ_GRID_HZ.size)[:n_subjects]
    latency_slots = rng.permutation(LATENCY_GRID_MS.size)[:n_subjects]
    all_pairs = [
        (SPEECH_MONTAGE[i], SPEECH_MONTAGE[j])
        for i in range(n_ch)
        for j in range(i + 1, n_ch)
    ]
    pair_slots = rng.permutation(len(all_pairs))[:n_subjects]
    base_detunes = np.linspace(-DETUNE_SPREAD_HZ, DETUNE_SPREAD_HZ, n_ch)
    profiles = []
    for s in range(n_subjects):
        osc = Oscillator(
            freq_hz=float(FREQ_GRID_HZ[freq_slots[s]]),
            amplitude=float(rng.uniform(0.9, 1.1)),
            phase_lags=rng.uniform(0.0, 2.0 * np.pi, size=n_ch),
            detune_hz=rng.permutation(base_detunes),
        )
        profiles.append(
            SubjectProfile(
                oscillators=[osc],
                envelope_peak_ms=float(LATENCY_GRID_MS[latency_slots[s]]),
                locked_pairs=[
                    (all_pairs[pair_slots[s]], float(rng.uniform(0.75, 1.0)))
                ],
            )
        )
    return profiles


def _pink_noise(rng: np.random.Generator, n: int) -> tuple[np.ndarray, float]:
    """Unit-variance 1/f noise and the RMS of its 30-120 Hz content.

    Shaped in the frequency domain; the band RMS is computed exactly from
    the same spectrum, which is what oscillator amplitudes are calibrated
    against.
    """
    n_fft = n if n % 2 == 0 else n + 1
    freqs = np.fft.rfftfreq(n_fft, d=1.0)  # cycles/sample; scaled later by fs
    spectrum = (
        rng.standard_normal(freqs.size) + 1j * rng.standard_normal(freqs.size)
    )
    shaping = np.zeros(freqs.size)
    nz = freqs > 0
    shaping[nz] = 1.0 / np.sqrt(freqs[nz])
    spectrum *= shaping
    x = np.fft.irfft(spectrum, n=n_fft)[:n]
    scale = 1.0 / x.std()
    x *= scale
    return x, scale


def _band_rms(x: np.ndarray, fs: float, low: float, high: float) -> float:
    spec = np.fft.rfft(x)
    freqs = np.fft.rfftfreq(x.size, d=1.0 / fs)
    mask = (freqs >= low) & (freqs <= high)
    return float(np.sqrt(np.sum(np.abs(spec[mask]) ** 2) * 2.0 / x.size**2))


def generate(config: SynthConfig) -> Recording:
    """Build the continuous recording with one event per trial.

    Trial order is a fixed interleave (block-major, then subject, then
    condition); onsets land on even sample indices so decimation to half
    rate maps them exactly.  Bitwise deterministic for a given config.
    """
    rng = np.random.default_rng(config.seed)
    profiles = make_profiles(config.n_subjects, config.seed)
    montage = make_montage(list(SPEECH_MONTAGE))
    n_ch = len(montage)
    fs = config.fs

    n_pre = int(round(config.pre_onset_ms * fs / 1000.0))
    n_epoch = int(round(config.epoch_ms * fs / 1000.0))
    n_gap = int(round(config.gap_ms * fs / 1000.0))
    stride = n_pre + n_epoch + n_gap
    stride += stride % 2  # keep onsets even for integer decimation mapping
    conditions = list(Condition)
    n_trials = config.n_subjects * len(conditions) * config.trials_per_condition
    total = n_trials * stride + n_pre + n_epoch

    samples = np.empty((n_ch, total))
    band_rms = np.empty(n_ch)
    for c in range(n_ch):
        noise, _ = _pink_noise(rng, total)
        samples[c] = noise
        band_rms[c] = _band_rms(noise, fs, 30.0, 120.0)

    # trial schedule: block-major so per-(subject, condition) trial indices
    # are aligned across conditions (plv pairing is by trial index)
    events: list[Event] = []
    slots = []
    for block in range(config.trials_per_condition):
        for subject in range(config.n_subjects):
            for condition in conditions:
                slots.append((block, subject, condition))

    t_epoch = np.arange(n_epoch) / fs
    row_of = {ch.label: ch.index for ch in montage}
    active = (
        list(range(n_ch))
        if config.informative_channels is None
        else list(config.informative_channels)
    )

    for i, (block, subject, condition) in enumerate(slots):
        onset = i * stride + n_pre
        events.append(
            Event(
                onset=onset,
                subject=subject,
                condition=condition,
                session=0,
                word=block % 12,
            )
        )
        profile = profiles[subject]
        snr = config.snr[condition]
        if condition == Condition.RESTING_STATE:
            envelope = np.ones(n_epoch)
        else:
            peak_s = profile.envelope_peak_ms / 1000.0
            envelope = 1.0 + BUMP_HEIGHT * np.exp(
                -0.5 * ((t_epoch - peak_s) / (BUMP_SIGMA_MS / 1000.0)) ** 2
            )
        trial_phase = rng.uniform(0.0, 2.0 * np.pi)
        for osc in profile.oscillators:
            # calibrate so the windowed band power is snr * background power
            power_scale = np.sqrt(2.0 * snr / np.mean(envelope**2))
            for c in active:
                amp = osc.amplitude * power_scale * band_rms[c]
                f_c = osc.freq_hz + osc.detune_hz[c]
                samples[c, onset : onset + n_epoch] += (
                    amp
                    * envelope
                    * np.sin(2.0 * np.pi * f_c * t_epoch
                             + osc.phase_lags[c] + trial_phase)
                )
        if condition == Condition.IMAGINED_SPEECH:
            for (lab_a, lab_b), strength in profile.locked_pairs:
                ra, rb = row_of[lab_a], row_of[lab_b]
                f_pair = profile.peak_freq_hz + 2.5
                psi = rng.uniform(0.0, 2.0 * np.pi)
                for rowi, extra in ((ra, 0.0), (rb, np.pi / 3.0)):
                    amp = config.pair_gain * strength * band_rms[rowi] * np.sqrt(2.0)
                    samples[rowi, onset : onset + n_epoch] += amp * np.sin(
                        2.0 * np.pi * f_pair * t_epoch + psi + extra
                    )

    # microvolt-ish scale, quantized so save/load round-trips bit-exactly
    samples = (10.0 * samples).astype("<f4").astype(np.float64)
    return Recording(
        samples=samples,
        fs=fs,
        montage=montage,
        events=events,
        n_subjects=config.n_subjects,
    )
