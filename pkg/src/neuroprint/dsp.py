"""Digital signal processing kernels.

IIR Butterworth band-pass design with zero-phase application, integer-factor
decimation, FIR and FFT Hilbert transforms, and a periodogram.  All functions
are pure; filters are immutable value objects.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

from .errors import ConfigError, DataError


@dataclass(frozen=True)
class SosFilter:
    """IIR filter as cascaded second-order sections.

    ``sections`` is an (n, 5) array of (b0, b1, b2, a1, a2) per biquad with
    the a0 coefficient normalized to 1; ``gain`` is an overall scalar factor.
    Designs are rejected unless every pole lies strictly inside the unit
    circle.
    """

    sections: np.ndarray
    gain: float = 1.0

    def __post_init__(self):
        sec = np.atleast_2d(np.asarray(self.sections, dtype=np.float64))
        if sec.shape[1] != 5:
            raise ConfigError(f"sections must be (n, 5), got {sec.shape}")
        object.__setattr__(self, "sections", sec)
        mags = np.abs(self.poles())
        if mags.size and mags.max() >= 1.0:
            raise ConfigError(
                f"unstable filter: pole magnitude {mags.max():.6f} >= 1"
            )

    @property
    def n_sections(self) -> int:
        return self.sections.shape[0]

    @property
    def order(self) -> int:
        """Order of the composed digital filter (2 per section)."""
        return 2 * self.n_sections

    def poles(self) -> np.ndarray:
        out = []
        for b0, b1, b2, a1, a2 in self.sections:
            out.extend(np.roots([1.0, a1, a2]))
        return np.asarray(out)

    def to_sos(self) -> np.ndarray:
        """Scipy-style (n, 6) section array with gain folded into section 0."""
        sos = np.empty((self.n_sections, 6))
        sos[:, 0:3] = self.sections[:, 0:3]
        sos[:, 3] = 1.0
        sos[:, 4:6] = self.sections[:, 3:5]
        sos[0, 0:3] *= self.gain
        return sos


@dataclass(frozen=True)
class FirFilter:
    """FIR filter as a tap vector; linear phase with delay (n_taps - 1) / 2."""

    taps: np.ndarray

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=np.float64)
        if taps.ndim != 1 or taps.size < 1:
            raise ConfigError("taps must be a non-empty 1-D vector")
        if not np.all(np.isfinite(taps)):
            raise ConfigError("taps must be finite")
        object.__setattr__(self, "taps", taps)

    @property
    def n_taps(self) -> int:
        return self.taps.size

    @property
    def group_delay(self) -> float:
        """Delay in samples; half-integral for even tap counts."""
        return (self.n_taps - 1) / 2.0


def design_butterworth_bandpass(
    order: int, low_hz: float, high_hz: float, fs: float
) -> SosFilter:
    """Design a digital Butterworth band-pass filter.

    The analog prototype is band-transformed and mapped with the bilinear
    transform (frequency prewarped), so the magnitude at both edges is
    exactly -3.01 dB.  Note a band-pass of prototype order ``n`` has digital
    order ``2 n`` (``n`` biquads).

    Parameters
    ----------
    order : prototype order (>= 1).
    low_hz, high_hz : band edges, 0 < low < high < fs / 2.
    fs : sampling rate in Hz.
    """
    if order < 1:
        raise ConfigError(f"order must be >= 1, got {order}")
    if not (0.0 < low_hz < high_hz < fs / 2.0):
        raise ConfigError(
            f"band edges ({low_hz}, {high_hz}) Hz must satisfy "
            f"0 < low < high < Nyquist ({fs / 2.0} Hz)"
        )
    sos = sps.butter(order, [low_hz, high_hz], btype="bandpass", fs=fs, output="sos")
    return SosFilter(sections=sos[:, [0, 1, 2, 4, 5]], gain=1.0)


def _butterworth_lowpass(order: int, cutoff_hz: float, fs: float) -> SosFilter:
    if not 0.0 < cutoff_hz < fs / 2.0:
        raise ConfigError(
            f"cutoff {cutoff_hz} Hz outside (0, {fs / 2.0}) Hz"
        )
    sos = sps.butter(order, cutoff_hz, btype="lowpass", fs=fs, output="sos")
    return SosFilter(sections=sos[:, [0, 1, 2, 4, 5]], gain=1.0)


def freq_response(
    filt: SosFilter | FirFilter, freqs_hz: np.ndarray, fs: float
) -> np.ndarray:
    """Evaluate the complex transfer function H(e^{j 2 pi f / fs}) directly.

    Independent of the design route: plain polynomial evaluation in
    z^{-1} = e^{-j 2 pi f / fs}.
    """
    zinv = np.exp(-2j * np.pi * np.asarray(freqs_hz, dtype=np.float64) / fs)
    if isinstance(filt, FirFilter):
        return np.polynomial.polynomial.polyval(zinv, filt.taps)
    h = np.full(zinv.shape, filt.gain, dtype=complex)
    for b0, b1, b2, a1, a2 in filt.sections:
        h *= (b0 + b1 * zinv + b2 * zinv**2) / (1.0 + a1 * zinv + a2 * zinv**2)
    return h


def filtfilt(filt: SosFilter, x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Zero-phase forward-backward filtering along ``axis``.

    Uses odd-reflection edge padding of length 3 x (digital filter order);
    the input must be longer than that.  Net magnitude is the squared filter
    response, so the band edges sit at -6 dB rather than -3 dB.
    """
    x = np.asarray(x, dtype=np.float64)
    padlen = 3 * filt.order
    if x.shape[axis] <= padlen:
        raise DataError(
            f"signal length {x.shape[axis]} too short for edge padding "
            f"({padlen} samples required)"
        )
    return sps.sosfiltfilt(filt.to_sos(), x, axis=axis, padtype="odd", padlen=padlen)


def decimate(
    signal: np.ndarray, fs_in: float, fs_out: float, axis: int = -1
) -> np.ndarray:
    """Integer-factor downsampling with zero-phase anti-alias filtering.

    Applies an 8th-order Butterworth low-pass at 0.4 x fs_out (forward and
    backward) before keeping every k-th sample, k = fs_in / fs_out.  A ratio
    of 1 returns an unfiltered copy so the operation is exactly the identity.
    """
    if fs_out > fs_in:
        raise ConfigError(f"fs_out {fs_out} > fs_in {fs_in}")
    ratio = fs_in / fs_out
    k = int(round(ratio))
    if abs(ratio - k) > 1e-9 or k < 1:
        raise ConfigError(
            f"non-integer decimation: {fs_in} Hz / {fs_out} Hz = {ratio:.6g}"
        )
    x = np.asarray(signal, dtype=np.float64)
    if k == 1:
        return x.copy()
    antialias = _butterworth_lowpass(8, 0.4 * fs_out, fs_in)
    y = filtfilt(antialias, x, axis=axis)
    slicer = [slice(None)] * y.ndim
    slicer[axis] = slice(None, None, k)
    return y[tuple(slicer)]


def hilbert_fir(n_taps: int) -> FirFilter:
    """Hamming-windowed ideal FIR Hilbert transformer.

    Type III for odd ``n_taps``, type IV for even.  Taps are exactly
    odd-symmetric by construction (computed for one half and mirrored).
    """
    if n_taps < 8:
        raise ConfigError(f"n_taps must be >= 8, got {n_taps}")
    center = (n_taps - 1) / 2.0
    m = np.arange(n_taps) - center
    ideal = np.zeros(n_taps)
    nz = m != 0
    ideal[nz] = (1.0 - np.cos(np.pi * m[nz])) / (np.pi * m[nz])
    taps = ideal * np.hamming(n_taps)
    # mirror the first half so t[k] == -t[n-1-k] holds bit-exactly
    half = n_taps // 2
    taps[n_taps - half :] = -taps[:half][::-1]
    if n_taps % 2 == 1:
        taps[half] = 0.0
    return FirFilter(taps=taps)


def analytic_envelope(signal: np.ndarray, hilbert: FirFilter) -> np.ndarray:
    """Instantaneous amplitude sqrt(x^2 + x_hat^2) from an FIR Hilbert filter.

    The quadrature component is delay-compensated by the integer part of the
    filter group delay; for even tap counts a half-sample residual remains,
    so the first/last ``group_delay`` samples are the least reliable.
    """
    x = np.asarray(signal, dtype=np.float64)
    n = x.shape[-1]
    if n <= hilbert.n_taps:
        raise DataError(
            f"signal length {n} must exceed filter length {hilbert.n_taps}"
        )
    delay = int(hilbert.group_delay)
    if x.ndim == 1:
        full = np.convolve(x, hilbert.taps, mode="full")
    else:
        full = np.apply_along_axis(
            lambda row: np.convolve(row, hilbert.taps, mode="full"), -1, x
        )
    quadrature = full[..., delay : delay + n]
    return np.sqrt(x * x + quadrature * quadrature)


def analytic_phase_fft(signal: np.ndarray) -> np.ndarray:
    """Instantaneous phase of the FFT-based analytic signal, in (-pi, pi]."""
    x = np.asarray(signal, dtype=np.float64)
    if x.shape[-1] == 0:
        raise DataError("empty signal")
    return np.angle(sps.hilbert(x, axis=-1))


def periodogram(signal: np.ndarray, fs: float) -> tuple[np.ndarray, np.ndarray]:
    """One-sided power spectral density estimate (boxcar window)."""
    x = np.asarray(signal, dtype=np.float64)
    if x.shape[-1] == 0:
        raise DataError("empty signal")
    return sps.periodogram(x, fs=fs, window="boxcar", axis=-1)
