"""Vibration feature extraction: windowing, the 12 time/frequency features,
and z-score standardization.

Features per window (fixed column order):

    clearance_factor, crest_factor, impulse_factor, kurtosis, mean, peak,
    rms, shape_factor, skewness, std_dev, peak_freq_amplitude, peak_frequency

Moments are population moments and kurtosis is non-excess (m4 / m2**2).
Moment ratios are defined as 0 for zero-variance windows.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DegenerateWindow, ParseError, SignalTooShort, ZeroVarianceFeature

FEATURE_NAMES = (
    "clearance_factor",
    "crest_factor",
    "impulse_factor",
    "kurtosis",
    "mean",
    "peak",
    "rms",
    "shape_factor",
    "skewness",
    "std_dev",
    "peak_freq_amplitude",
    "peak_frequency",
)
N_FEATURES = len(FEATURE_NAMES)


@dataclass(frozen=True)
class SignalWindow:
    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.float64).ravel()
        if samples.size == 0:
            raise ValueError("window must contain at least one sample")
        if not self.sample_rate_hz > 0:
            raise ValueError("sample_rate_hz must be positive")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return self.samples.size


class RawFeatureVector(NamedTuple):
    clearance_factor: float
    crest_factor: float
    impulse_factor: float
    kurtosis: float
    mean: float
    peak: float
    rms: float
    shape_factor: float
    skewness: float
    std_dev: float
    peak_freq_amplitude: float
    peak_frequency: float

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=np.float64)


def window_length(sample_rate_hz: float, window_seconds: float) -> int:
    return int(round(window_seconds * sample_rate_hz))


def window_signal(signal, sample_rate_hz: float, window_seconds: float = 0.1) -> list[SignalWindow]:
    """Cut ``signal`` into consecutive non-overlapping windows; the tail is dropped."""
    if not window_seconds > 0:
        raise ValueError("window_seconds must be positive")
    if not sample_rate_hz > 0:
        raise ValueError("sample_rate_hz must be positive")
    signal = np.asarray(signal, dtype=np.float64).ravel()
    n = window_length(sample_rate_hz, window_seconds)
    if n < 1 or signal.size < n:
        raise SignalTooShort(
            f"signal of {signal.size} samples is shorter than one window ({n} samples)"
        )
    count = signal.size // n
    return [SignalWindow(signal[i * n:(i + 1) * n], sample_rate_hz) for i in range(count)]


def _ratio(num, den):
    out = np.zeros_like(num)
    np.divide(num, den, out=out, where=den > 0)
    return out


def feature_matrix(windows: np.ndarray, sample_rate_hz: float) -> np.ndarray:
    """Vectorized feature extraction over a (n_windows, n_samples) array."""
    x = np.atleast_2d(np.asarray(windows, dtype=np.float64))
    n = x.shape[1]
    absx = np.abs(x)
    mean_abs = absx.mean(axis=1)
    if np.any(mean_abs == 0):
        bad = int(np.flatnonzero(mean_abs == 0)[0])
        raise DegenerateWindow(f"window {bad} is all zeros")

    mean = x.mean(axis=1)
    centered = x - mean[:, None]
    m2 = np.mean(centered ** 2, axis=1)
    m3 = np.mean(centered ** 3, axis=1)
    m4 = np.mean(centered ** 4, axis=1)
    # constant windows leave roundoff in m2; treat relative noise as zero variance
    flat = m2 <= (np.finfo(np.float64).eps * np.maximum(np.abs(mean), mean_abs)) ** 2 * n
    m2 = np.where(flat, 0.0, m2)
    std = np.sqrt(m2)
    rms = np.sqrt(np.mean(x ** 2, axis=1))
    peak = absx.max(axis=1)
    root_mean = np.mean(np.sqrt(absx), axis=1)
    skew = _ratio(m3, m2 ** 1.5)
    kurt = _ratio(m4, m2 ** 2)

    spectrum = np.abs(np.fft.rfft(x, axis=1)) * (2.0 / n)
    half = n // 2
    if half >= 1:
        band = spectrum[:, 1:half + 1]
        k = np.argmax(band, axis=1)
        peak_amp = band[np.arange(x.shape[0]), k]
        peak_freq = (k + 1) * sample_rate_hz / n
    else:
        peak_amp = np.zeros(x.shape[0])
        peak_freq = np.zeros(x.shape[0])

    return np.column_stack([
        peak / root_mean ** 2,
        peak / rms,
        peak / mean_abs,
        kurt,
        mean,
        peak,
        rms,
        rms / mean_abs,
        skew,
        std,
        peak_amp,
        peak_freq,
    ])


def extract_features(window: SignalWindow) -> RawFeatureVector:
    row = feature_matrix(window.samples[None, :], window.sample_rate_hz)[0]
    return RawFeatureVector(*(float(v) for v in row))


def extract_signal_features(signal, sample_rate_hz: float, window_seconds: float = 0.1) -> np.ndarray:
    """Window a whole signal and return its (n_windows, 12) feature matrix."""
    windows = window_signal(signal, sample_rate_hz, window_seconds)
    stacked = np.stack([w.samples for w in windows])
    return feature_matrix(stacked, sample_rate_hz)


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        for name in ("mean", "std"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if np.any(self.std <= 0):
            raise ZeroVarianceFeature(int(np.flatnonzero(self.std <= 0)[0]))

    def transform(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - self.mean) / self.std

    def inverse(self, z) -> np.ndarray:
        return np.asarray(z, dtype=np.float64) * self.std + self.mean

    def to_dict(self) -> dict:
        return {
            "features": list(FEATURE_NAMES) if self.mean.size == N_FEATURES else None,
            "mean": [float(v) for v in self.mean],
            "std": [float(v) for v in self.std],
        }

    @classmethod
    def from_dict(cls, doc) -> "Standardizer":
        return cls(np.asarray(doc["mean"], dtype=np.float64), np.asarray(doc["std"], dtype=np.float64))


def fit_standardizer(features) -> Standardizer:
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("need a 2-D matrix with at least two rows")
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    zero = np.flatnonzero(std <= 0)
    if zero.size:
        col = int(zero[0])
        name = FEATURE_NAMES[col] if x.shape[1] == N_FEATURES else None
        raise ZeroVarianceFeature(col, name)
    return Standardizer(mean, std)


def standardize(vec, s: Standardizer) -> np.ndarray:
    return s.transform(vec)


def inverse_standardize(vec, s: Standardizer) -> np.ndarray:
    return s.inverse(vec)


# -- Signal CSV ---------------------------------------------------------------

def read_signal_csv(path, sample_rate_hz: float | None = None) -> tuple[np.ndarray, float]:
    """Read ``time_s,amplitude`` or single-column ``amplitude`` CSV.

    With a time column the sample rate is inferred from the median step
    unless ``sample_rate_hz`` is given explicitly.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip().lower() for h in next(reader)]
        except StopIteration:
            raise ParseError("empty file", line=1) from None
        if header == ["amplitude"]:
            has_time = False
        elif header == ["time_s", "amplitude"]:
            has_time = True
        else:
            raise ParseError(f"unexpected header {header!r}", line=1)
        times, values = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} columns, got {len(row)}", line=lineno)
            try:
                nums = [float(c) for c in row]
            except ValueError:
                raise ParseError(f"non-numeric value in {row!r}", line=lineno) from None
            if has_time:
                times.append(nums[0])
            values.append(nums[-1])
    signal = np.array(values, dtype=np.float64)
    if sample_rate_hz is None:
        if not has_time or len(times) < 2:
            raise ParseError("sample rate must be supplied for amplitude-only signals")
        step = float(np.median(np.diff(times)))
        if step <= 0:
            raise ParseError("time column is not increasing")
        sample_rate_hz = 1.0 / step
    return signal, float(sample_rate_hz)


def write_signal_csv(path, signal: Sequence[float], sample_rate_hz: float | None = None) -> None:
    signal = np.asarray(signal, dtype=np.float64)
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if sample_rate_hz is None:
            writer.writerow(["amplitude"])
            writer.writerows([repr(float(v))] for v in signal)
        else:
            writer.writerow(["time_s", "amplitude"])
            for i, v in enumerate(signal):
                writer.writerow([repr(i / sample_rate_hz), repr(float(v))])
