import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from cbm_advbench.errors import DegenerateWindow, ParseError, SignalTooShort, ZeroVarianceFeature
from cbm_advbench.features import (
    FEATURE_NAMES,
    SignalWindow,
    Standardizer,
    extract_features,
    extract_signal_features,
    feature_matrix,
    fit_standardizer,
    inverse_standardize,
    read_signal_csv,
    standardize,
    window_signal,
    write_signal_csv,
)

FS = 12000.0


def direct_features(x, fs):
    """Loop-based recomputation used as an oracle."""
    n = len(x)
    mean = sum(x) / n
    abs_mean = sum(abs(v) for v in x) / n
    rms = math.sqrt(sum(v * v for v in x) / n)
    peak = max(abs(v) for v in x)
    root = (sum(math.sqrt(abs(v)) for v in x) / n) ** 2
    m2 = sum((v - mean) ** 2 for v in x) / n
    m3 = sum((v - mean) ** 3 for v in x) / n
    m4 = sum((v - mean) ** 4 for v in x) / n
    best_amp, best_k = -1.0, 0
    for k in range(1, n // 2 + 1):
        re = sum(x[t] * math.cos(2 * math.pi * k * t / n) for t in range(n))
        im = sum(x[t] * math.sin(2 * math.pi * k * t / n) for t in range(n))
        amp = 2.0 / n * math.hypot(re, im)
        if amp > best_amp + 1e-12:
            best_amp, best_k = amp, k
    return [
        peak / root, peak / rms, peak / abs_mean, m4 / m2 ** 2, mean, peak, rms,
        rms / abs_mean, m3 / m2 ** 1.5, math.sqrt(m2), best_amp, best_k * fs / n,
    ]


def test_feature_order_is_fixed():
    assert FEATURE_NAMES[0] == "clearance_factor"
    assert FEATURE_NAMES[-1] == "peak_frequency"
    assert len(FEATURE_NAMES) == 12


def test_window_count_for_2400_samples():
    windows = window_signal(np.ones(2400), FS, 0.1)
    assert len(windows) == 2
    assert all(len(w) == 1200 for w in windows)


def test_trailing_partial_window_is_dropped():
    assert len(window_signal(np.ones(2999), FS, 0.1)) == 2


def test_short_signal_rejected():
    with pytest.raises(SignalTooShort):
        window_signal(np.ones(1199), FS, 0.1)


def test_sine_reference_values():
    t = np.arange(1200) / FS
    f = extract_features(SignalWindow(np.sin(2 * np.pi * 100 * t), FS))
    assert f.rms == pytest.approx(1 / math.sqrt(2), rel=1e-3)
    assert f.crest_factor == pytest.approx(math.sqrt(2), rel=1e-3)
    assert f.peak_frequency == pytest.approx(100.0, rel=1e-3)
    assert f.peak_freq_amplitude == pytest.approx(1.0, rel=1e-3)
    assert f.kurtosis == pytest.approx(1.5, rel=1e-3)


def test_matches_loop_oracle(rng):
    x = rng.normal(0.1, 1.0, 96)
    got = feature_matrix(x[None, :], 960.0)[0]
    assert np.allclose(got, direct_features(list(x), 960.0), rtol=1e-10, atol=1e-12)


def test_zero_window_is_degenerate():
    with pytest.raises(DegenerateWindow):
        extract_features(SignalWindow(np.zeros(1200), FS))


def test_constant_window_has_zero_moment_ratios():
    f = extract_features(SignalWindow(np.full(1200, 0.3), FS))
    assert f.skewness == 0.0 and f.kurtosis == 0.0 and f.std_dev == 0.0
    assert f.crest_factor == pytest.approx(1.0)


def test_gaussian_kurtosis_near_three(rng):
    f = extract_features(SignalWindow(rng.standard_normal(120000), FS))
    assert f.kurtosis == pytest.approx(3.0, abs=0.1)
    assert abs(f.skewness) < 0.05


def test_dc_bin_excluded_from_peak_search():
    t = np.arange(1200) / FS
    x = 5.0 + 0.1 * np.sin(2 * np.pi * 500 * t)
    f = extract_features(SignalWindow(x, FS))
    assert f.peak_frequency == pytest.approx(500.0)


@given(
    arrays(np.float64, 64, elements=st.floats(-10, 10, allow_nan=False)),
    st.floats(0.01, 100.0),
)
def test_dimensionless_features_are_scale_invariant(x, scale):
    if np.mean(np.abs(x)) < 1e-3 or np.std(x) < 1e-3:
        return
    a = feature_matrix(x[None, :], 640.0)[0]
    b = feature_matrix(scale * x[None, :], 640.0)[0]
    for name in ("clearance_factor", "crest_factor", "impulse_factor", "kurtosis", "shape_factor", "skewness"):
        i = FEATURE_NAMES.index(name)
        assert b[i] == pytest.approx(a[i], rel=1e-9, abs=1e-9)
    i = FEATURE_NAMES.index("rms")
    assert b[i] == pytest.approx(scale * a[i], rel=1e-9)


def test_extract_signal_features_shape(rng):
    assert extract_signal_features(rng.standard_normal(3600), FS).shape == (3, 12)


def test_standardizer_moments(rng):
    x = rng.normal(3.0, 2.0, size=(100, 12))
    z = fit_standardizer(x).transform(x)
    assert np.allclose(z.mean(axis=0), 0, atol=1e-9)
    assert np.allclose(z.std(axis=0), 1, atol=1e-9)


@given(arrays(np.float64, 12, elements=st.floats(-1e3, 1e3, allow_nan=False)))
def test_standardize_round_trip(v):
    s = Standardizer(np.linspace(-1, 1, 12), np.linspace(0.5, 3, 12))
    assert np.allclose(inverse_standardize(standardize(v, s), s), v, rtol=1e-12, atol=1e-12)


def test_zero_variance_column_named(rng):
    x = rng.standard_normal((10, 12))
    x[:, 11] = 4.0
    with pytest.raises(ZeroVarianceFeature) as err:
        fit_standardizer(x)
    assert err.value.column == 11 and err.value.name == "peak_frequency"


def test_standardizer_dict_round_trip(rng):
    s = fit_standardizer(rng.standard_normal((20, 12)))
    t = Standardizer.from_dict(s.to_dict())
    assert np.array_equal(s.mean, t.mean) and np.array_equal(s.std, t.std)


def test_signal_csv_round_trip(tmp_path, rng):
    x = rng.standard_normal(50)
    path = tmp_path / "s.csv"
    write_signal_csv(path, x, FS)
    y, fs = read_signal_csv(path)
    assert np.array_equal(x, y)
    assert fs == pytest.approx(FS)


def test_amplitude_only_csv_needs_rate(tmp_path):
    path = tmp_path / "s.csv"
    write_signal_csv(path, [1.0, 2.0])
    with pytest.raises(ParseError):
        read_signal_csv(path)
    assert read_signal_csv(path, 100.0)[1] == 100.0


def test_signal_csv_bad_value_reports_line(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("amplitude\n1.0\nabc\n")
    with pytest.raises(ParseError) as err:
        read_signal_csv(path, 10.0)
    assert err.value.line == 3
