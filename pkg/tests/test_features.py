import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from focusline.features import (FEATURE_NAMES, N_FEATURES, STATISTICS, DegenerateWindowError,
                                EmptyTableError, TooShortError, WindowConfig, build_feature_table,
                                extract_features, read_table_csv, series_duration, window_count,
                                windows, write_table_csv)
from focusline.preprocess import BandSeries
from focusline.types import Modality

from oracles import count_windows, window_moments

S = {name: i for i, name in enumerate(STATISTICS)}


def test_feature_names():
    assert N_FEATURES == 50
    assert FEATURE_NAMES[0] == "delta_mean"
    assert FEATURE_NAMES[10] == "theta_mean"
    assert FEATURE_NAMES[-1] == "gamma_mobility"


def test_reference_window():
    # hand-derived values for the window (0, 1, 2, 9)
    f = extract_features(np.array([0.0, 1.0, 2.0, 9.0]))
    expect = {
        "mean": 3.0, "squared_value": 21.5, "variance": 12.5, "std": np.sqrt(12.5),
        "skewness": 45.0 / 12.5 ** 1.5, "kurtosis": 348.5 / 156.25 - 3.0,
        "rms": np.sqrt(21.5), "entropy": 2.0, "activity": 12.5, "mobility": 0.8,
    }
    for name, v in expect.items():
        assert f[S[name]] == pytest.approx(v, rel=1e-12), name


window_arrays = hnp.arrays(np.float64, st.tuples(st.integers(2, 60), st.just(5)),
                           elements=st.floats(-1e3, 1e3))


@given(window_arrays)
def test_moments_match_scipy(x):
    f = extract_features(x).reshape(5, -1)
    for b in range(5):
        ref = window_moments(x[:, b])
        for name in ("mean", "squared_value", "variance"):
            assert f[b, S[name]] == pytest.approx(ref[name], rel=1e-9, abs=1e-9)
        if ref["variance"] > 1e-6 * max(1.0, np.max(np.abs(x[:, b]))) ** 2:
            for name in ("skewness", "kurtosis", "mobility"):
                assert f[b, S[name]] == pytest.approx(ref[name], rel=1e-6, abs=1e-6)


@given(window_arrays)
def test_entropy_matches_histogram(x):
    f = extract_features(x).reshape(5, -1)
    for b in range(5):
        col = x[:, b]
        if col.min() == col.max():
            assert f[b, S["entropy"]] == 0.0
            continue
        counts, _ = np.histogram(col, bins=16, range=(col.min(), col.max()))
        p = counts[counts > 0] / len(col)
        assert f[b, S["entropy"]] == pytest.approx(-(p * np.log2(p)).sum(), abs=1e-9)


@given(st.floats(-1e3, 1e3), st.integers(2, 40))
def test_constant_window(c, n):
    f = extract_features(np.full((n, 5), c)).reshape(5, -1)
    for b in range(5):
        assert f[b, S["mean"]] == c
        assert f[b, S["squared_value"]] == c * c
        for name in ("variance", "std", "skewness", "kurtosis", "entropy", "activity", "mobility"):
            assert f[b, S[name]] == 0.0


def test_one_point_window_rejected():
    with pytest.raises(DegenerateWindowError):
        extract_features(np.zeros((1, 5)))


def test_window_count_reference():
    # 300 s at 10 Hz, 10 s windows, 0.5 s hop
    assert window_count(300.0, WindowConfig()) == 581
    assert count_windows(300, 10, "0.5") == 581


@given(st.integers(100, 4000), st.sampled_from([5.0, 10.0]), st.sampled_from([0.5, 1.0, 2.5]))
def test_window_count_matches_enumeration(tenths, w, hop):
    T = tenths / 10
    assert window_count(T, WindowConfig(window_s=w, hop_s=hop)) == count_windows(
        f"{tenths}/10", w, hop)


def _series(n, rate=10.0, rid="s", label=0, modality=Modality.non_vr):
    rng = np.random.default_rng(n)
    return BandSeries(rid, modality, label, np.arange(n) / rate, rng.uniform(size=(n, 5)), True)


def test_windows_cover_expected_points():
    s = _series(3000)
    assert series_duration(s) == pytest.approx(300.0)
    ws = windows(s)
    assert len(ws) == 581
    assert all(len(w.values) == 100 for w in ws)
    assert ws[1].start_s == 0.5
    np.testing.assert_array_equal(ws[1].values, s.values[5:105])


def test_short_series_rejected():
    with pytest.raises(TooShortError):
        windows(_series(50))


def test_sparse_windows_dropped(caplog):
    s = _series(300)
    keep = np.r_[0:40, 120:300]
    s = BandSeries("gap", s.modality, 0, s.times[keep], s.values[keep], True)
    ws = windows(s, WindowConfig(min_points=50))
    assert len(ws) < window_count(series_duration(s), WindowConfig())
    assert all(len(w.values) >= 50 for w in ws)
    assert "dropped" in caplog.text


def test_build_table_and_csv(tmp_path):
    table = build_feature_table([_series(200, rid="a"), _series(250, rid="b", label=2)])
    assert table.X.shape == (21 + 31, 50)
    assert list(np.unique(table.recording_ids)) == ["a", "b"]
    write_table_csv(table, tmp_path / "t.csv")
    back = read_table_csv(tmp_path / "t.csv")
    np.testing.assert_array_equal(back.X, table.X)
    np.testing.assert_array_equal(back.labels, table.labels)
    np.testing.assert_array_equal(back.window_starts, table.window_starts)
    assert tuple(back.feature_names) == tuple(FEATURE_NAMES)


def test_build_table_errors():
    with pytest.raises(EmptyTableError):
        build_feature_table([])
    with pytest.raises(ValueError):
        build_feature_table([_series(200), _series(200, rid="v", modality=Modality.vr)])


def test_default_sessions_table_size():
    from focusline.preprocess import preprocess
    from focusline.synth import generate, preset
    table = build_feature_table(preprocess(generate(preset("easy", seed=1))))
    # six 300 s sessions at the default window and hop
    assert len(table) == 6 * 581
    assert 3400 <= len(table) <= 3700
