"""Datasets: labels, feature CSV I/O, stratified experiment splits, k-fold
partitions and the synthetic bearing-vibration generator."""
from __future__ import annotations

import csv
import enum
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ClassTooSmall, ConfigError, InvalidK, ParseError, UnknownLabel
from .features import FEATURE_NAMES, N_FEATURES, feature_matrix, window_length


class Label(enum.IntEnum):
    BALL = 0
    INNER_RACE = 1
    OUTER_RACE = 2
    NORMAL = 3

    @property
    def canonical(self) -> str:
        return self.name.lower()

    @property
    def display(self) -> str:
        return _DISPLAY[self]

    @classmethod
    def parse(cls, text) -> "Label":
        if isinstance(text, Label):
            return text
        key = re.sub(r"[^a-z]", "", str(text).lower())
        try:
            return _ALIASES[key]
        except KeyError:
            raise UnknownLabel(f"unknown label {text!r}") from None


_DISPLAY = {
    Label.BALL: "Ball",
    Label.INNER_RACE: "InnerRace",
    Label.OUTER_RACE: "OuterRace",
    Label.NORMAL: "Normal",
}
_ALIASES = {
    "ball": Label.BALL,
    "innerrace": Label.INNER_RACE,
    "inner": Label.INNER_RACE,
    "ir": Label.INNER_RACE,
    "outerrace": Label.OUTER_RACE,
    "outer": Label.OUTER_RACE,
    "or": Label.OUTER_RACE,
    "normal": Label.NORMAL,
    "healthy": Label.NORMAL,
}
N_CLASSES = len(Label)


@dataclass(frozen=True)
class LabeledDataset:
    """Feature matrix with one integer label (a ``Label`` value) per row."""

    X: np.ndarray
    y: np.ndarray
    standardized: bool = False
    source: str = ""

    def __post_init__(self):
        X = np.array(self.X, dtype=np.float64)
        y = np.array(self.y, dtype=np.int64).ravel()
        if X.ndim != 2 or X.shape[1] != N_FEATURES:
            raise ValueError(f"feature matrix must have shape (n, {N_FEATURES}), got {X.shape}")
        if X.shape[0] != y.size:
            raise ValueError("row count and label count differ")
        if y.size and (y.min() < 0 or y.max() >= N_CLASSES):
            raise UnknownLabel("label index out of range")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    def __len__(self):
        return self.y.size

    def subset(self, idx, source=None) -> "LabeledDataset":
        idx = np.asarray(idx, dtype=np.int64)
        return LabeledDataset(self.X[idx], self.y[idx], self.standardized, source or self.source)

    def with_features(self, X, standardized=None, source=None) -> "LabeledDataset":
        return LabeledDataset(
            X,
            self.y,
            self.standardized if standardized is None else standardized,
            self.source if source is None else source,
        )

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.y, minlength=N_CLASSES)

    def present_classes(self) -> list[Label]:
        return [Label(c) for c in np.flatnonzero(self.class_counts())]


# -- Feature CSV --------------------------------------------------------------

def load_feature_csv(path) -> LabeledDataset:
    path = Path(path)
    expected = list(FEATURE_NAMES) + ["label"]
    rows, labels = [], []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError("empty file", line=1) from None
        if header != expected:
            raise ParseError(f"header must be {','.join(expected)}", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(expected):
                raise ParseError(f"expected {len(expected)} columns, got {len(row)}", line=lineno)
            try:
                values = [float(c) for c in row[:N_FEATURES]]
            except ValueError:
                raise ParseError("non-numeric feature value", line=lineno) from None
            if not all(np.isfinite(values)):
                raise ParseError("non-finite feature value", line=lineno)
            try:
                labels.append(Label.parse(row[-1].strip()))
            except UnknownLabel as exc:
                raise UnknownLabel(f"line {lineno}: {exc}") from None
            rows.append(values)
    X = np.array(rows, dtype=np.float64).reshape(-1, N_FEATURES)
    return LabeledDataset(X, np.array(labels, dtype=np.int64), standardized=False, source=str(path))


def write_feature_csv(path, ds: LabeledDataset) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(FEATURE_NAMES) + ["label"])
        for row, label in zip(ds.X, ds.y):
            writer.writerow([repr(float(v)) for v in row] + [Label(label).canonical])


# -- Splitting ----------------------------------------------------------------

@dataclass(frozen=True)
class SplitSpec:
    substitute_fraction: float = 0.40
    attack_fraction: float = 0.20
    victim_fraction: float = 0.40
    seed: int = 0

    def __post_init__(self):
        fr = (self.substitute_fraction, self.attack_fraction, self.victim_fraction)
        if any(not f > 0 for f in fr):
            raise ConfigError("split fractions must be positive")
        if abs(sum(fr) - 1.0) > 1e-9:
            raise ConfigError(f"split fractions sum to {sum(fr)!r}, not 1")


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def split_indices(y, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Stratified index partition; per-class rounding remainders go to the victim part."""
    y = np.asarray(y)
    if y.size == 0:
        raise ValueError("cannot split an empty dataset")
    rng = np.random.default_rng(spec.seed)
    parts = ([], [], [])
    for c in range(N_CLASSES):
        idx = np.flatnonzero(y == c)
        if idx.size == 0:
            continue
        if idx.size < 3:
            raise ClassTooSmall(f"class {Label(c).display} has only {idx.size} rows (need 3)")
        idx = rng.permutation(idx)
        n_sub = _round_half_up(spec.substitute_fraction * idx.size)
        n_att = _round_half_up(spec.attack_fraction * idx.size)
        n_sub = min(n_sub, idx.size)
        n_att = min(n_att, idx.size - n_sub)
        parts[0].append(idx[:n_sub])
        parts[1].append(idx[n_sub:n_sub + n_att])
        parts[2].append(idx[n_sub + n_att:])
    return tuple(np.sort(np.concatenate(p)).astype(np.int64) for p in parts)


def split_dataset(ds: LabeledDataset, spec: SplitSpec):
    """Return ``(substitute_train, attack_pool, victim_train)``."""
    sub, att, vic = split_indices(ds.y, spec)
    return (
        ds.subset(sub, f"{ds.source}#substitute"),
        ds.subset(att, f"{ds.source}#attack"),
        ds.subset(vic, f"{ds.source}#victim"),
    )


def kfold_partition(n: int, k: int, seed: int = 0) -> list[tuple[np.ndarray, np.ndarray]]:
    if k < 2:
        raise InvalidK(f"k must be at least 2, got {k}")
    if n < k:
        raise InvalidK(f"cannot make {k} folds from {n} rows")
    perm = np.random.default_rng(seed).permutation(n)
    folds = np.array_split(perm, k)
    out = []
    for i, val in enumerate(folds):
        train = np.concatenate([f for j, f in enumerate(folds) if j != i])
        out.append((np.sort(train), np.sort(val)))
    return out


# -- Synthetic generator ------------------------------------------------------

@dataclass(frozen=True)
class ClassSignal:
    """Per-class signal parameters.

    ``carrier_hz`` is the structural resonance each fault impact excites;
    ``impulse_hz`` the impact repetition rate (0 for no impacts).
    """

    carrier_hz: float
    impulse_hz: float
    impulse_amplitude: float
    noise_std: float = 0.08


# Repetition rates follow the usual bearing defect frequencies at ~1797 rpm.
DEFAULT_CLASS_SIGNALS = {
    Label.BALL: ClassSignal(carrier_hz=2600.0, impulse_hz=141.1, impulse_amplitude=0.2),
    Label.INNER_RACE: ClassSignal(carrier_hz=3400.0, impulse_hz=162.2, impulse_amplitude=0.5),
    Label.OUTER_RACE: ClassSignal(carrier_hz=3000.0, impulse_hz=107.4, impulse_amplitude=0.8),
    Label.NORMAL: ClassSignal(carrier_hz=3000.0, impulse_hz=0.0, impulse_amplitude=0.0),
}


@dataclass(frozen=True)
class SyntheticConfig:
    counts: dict = field(default_factory=lambda: {lab: 200 for lab in Label})
    sample_rate_hz: float = 12000.0
    window_seconds: float = 0.1
    classes: dict = field(default_factory=lambda: dict(DEFAULT_CLASS_SIGNALS))
    shaft_hz: float = 29.95
    shaft_amplitude: float = 0.05
    noise_low_hz: float = 20.0
    noise_cutoff_hz: float = 5000.0
    dc_offset_std: float = 0.002
    decay_s: float = 0.0015
    timing_jitter: float = 0.02
    amplitude_jitter: float = 0.25
    severities: tuple = (0.9, 1.0, 1.1)
    seed: int = 0

    def __post_init__(self):
        counts = {Label.parse(k): int(v) for k, v in self.counts.items()}
        classes = {Label.parse(k): v for k, v in self.classes.items()}
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "classes", classes)
        object.__setattr__(self, "severities", tuple(float(s) for s in self.severities))
        self.validate()

    def validate(self):
        nyq = self.sample_rate_hz / 2
        if not self.sample_rate_hz > 0 or not self.window_seconds > 0:
            raise ConfigError("sample rate and window length must be positive")
        if window_length(self.sample_rate_hz, self.window_seconds) < 2:
            raise ConfigError("window shorter than two samples")
        if any(c <= 0 for c in self.counts.values()) or not self.counts:
            raise ConfigError("per-class counts must be positive")
        for lab in self.counts:
            if lab not in self.classes:
                raise ConfigError(f"no signal parameters for class {lab.display}")
        checks = [
            ("shaft_hz", self.shaft_hz),
            ("noise_low_hz", self.noise_low_hz),
            ("noise_cutoff_hz", self.noise_cutoff_hz),
        ]
        for lab, cs in self.classes.items():
            checks += [
                (f"{lab.canonical}.carrier_hz", cs.carrier_hz),
                (f"{lab.canonical}.impulse_hz", cs.impulse_hz),
            ]
            if cs.noise_std < 0 or cs.impulse_amplitude < 0:
                raise ConfigError(f"{lab.canonical}: amplitudes must be non-negative")
        for name, f in checks:
            if not 0 <= f < nyq:
                raise ConfigError(f"{name}={f} Hz is outside [0, Nyquist={nyq} Hz)")
        if self.dc_offset_std < 0:
            raise ConfigError("dc_offset_std must be non-negative")
        if self.noise_low_hz >= self.noise_cutoff_hz:
            raise ConfigError("noise band is empty")
        if not self.severities or any(s <= 0 for s in self.severities):
            raise ConfigError("severities must be positive")


def _band_noise(rng, n, fs, low, cutoff, std):
    white = rng.standard_normal(n)
    spectrum = np.fft.rfft(white)
    freqs = np.fft.rfftfreq(n, 1.0 / fs)
    spectrum[(freqs > cutoff) | (freqs < low)] = 0.0
    x = np.fft.irfft(spectrum, n)
    s = x.std()
    return x * (std / s) if s > 0 else x


def _recording(rng, n, cfg: SyntheticConfig, cs: ClassSignal, severity: float) -> np.ndarray:
    fs = cfg.sample_rate_hz
    t = np.arange(n) / fs
    x = cfg.shaft_amplitude * np.sin(2 * np.pi * cfg.shaft_hz * t + rng.uniform(0, 2 * np.pi))
    x += _band_noise(rng, n, fs, cfg.noise_low_hz, cfg.noise_cutoff_hz, cs.noise_std)
    x += cfg.dc_offset_std * rng.standard_normal()
    amp = cs.impulse_amplitude * severity
    if amp > 0 and cs.impulse_hz > 0:
        ring = max(1, int(8 * cfg.decay_s * fs))
        tt = np.arange(ring) / fs
        kernel = np.exp(-tt / cfg.decay_s) * np.sin(2 * np.pi * cs.carrier_hz * tt)
        period = 1.0 / cs.impulse_hz
        tk = rng.uniform(0, period)
        while tk < t[-1]:
            i = int(round(tk * fs))
            m = min(ring, n - i)
            x[i:i + m] += amp * rng.lognormal(0.0, cfg.amplitude_jitter) * kernel[:m]
            tk += period * (1.0 + cfg.timing_jitter * rng.standard_normal())
    return x


def synthesize_bearing_dataset(cfg: SyntheticConfig | None = None):
    """Generate one recording per (class, severity) and window it into features.

    Returns ``(signals, dataset)`` where ``signals`` maps each Label to its
    concatenated raw signal.
    """
    cfg = cfg or SyntheticConfig()
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    n_win = window_length(cfg.sample_rate_hz, cfg.window_seconds)
    signals, blocks, labels = {}, [], []
    for lab in sorted(cfg.counts):
        count = cfg.counts[lab]
        cs = cfg.classes[lab]
        pieces = []
        n_rec = len(cfg.severities)
        for r, sev in enumerate(cfg.severities):
            windows = count // n_rec + (1 if r < count % n_rec else 0)
            if windows == 0:
                continue
            pieces.append(_recording(rng, windows * n_win, cfg, cs, sev))
        sig = np.concatenate(pieces)
        signals[lab] = sig
        blocks.append(feature_matrix(sig.reshape(count, n_win), cfg.sample_rate_hz))
        labels.append(np.full(count, int(lab)))
    ds = LabeledDataset(np.vstack(blocks), np.concatenate(labels), False, f"synthetic(seed={cfg.seed})")
    return signals, ds
