import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from focusline.preprocess import (BandSeries, PreconditionError, StateError,
                                  UnrecoverableChannelError, average_bands, band_range,
                                  forward_fill, preprocess, read_series_csv, rescale,
                                  write_series_csv)
from focusline.types import Modality, Recording


def _rec(values, bad):
    n = values.shape[0]
    return Recording("r", Modality.non_vr, 0, np.arange(n) * 0.1, np.where(bad, np.nan, values), bad)


def _naive_fill(values, bad):
    out = values.copy()
    n = values.shape[0]
    for b in range(5):
        for e in range(4):
            good = np.flatnonzero(~bad[:, b, e])
            for i in range(n):
                if bad[i, b, e]:
                    prev = good[good < i]
                    out[i, b, e] = values[prev[-1] if len(prev) else good[0], b, e]
    return out


@given(data=st.data(), n=st.integers(1, 30))
def test_forward_fill_matches_loop(data, n):
    values = data.draw(hnp.arrays(np.float64, (n, 5, 4), elements=st.floats(-5, 5)))
    bad = data.draw(hnp.arrays(bool, (n, 5, 4)))
    bad[0] &= data.draw(st.booleans())
    # keep at least one good value per channel
    bad[data.draw(st.integers(0, n - 1))] = False
    filled = forward_fill(_rec(values, bad))
    assert not filled.bad.any()
    np.testing.assert_array_equal(filled.values, _naive_fill(values, bad))


def test_forward_fill_leading_uses_first_good():
    values = np.ones((4, 5, 4))
    values[:, 2, 1] = [9, 9, 3, 4]
    bad = np.zeros_like(values, bool)
    bad[:2, 2, 1] = True
    filled = forward_fill(_rec(values, bad))
    np.testing.assert_array_equal(filled.values[:, 2, 1], [3, 3, 3, 4])


def test_forward_fill_dead_channel():
    values = np.ones((3, 5, 4))
    bad = np.zeros_like(values, bool)
    bad[:, 3, 2] = True
    with pytest.raises(UnrecoverableChannelError) as exc:
        forward_fill(_rec(values, bad))
    assert exc.value.band.name == "beta" and exc.value.electrode.name == "AF8"


def test_average_requires_fill():
    values = np.ones((3, 5, 4))
    bad = np.zeros_like(values, bool)
    bad[1, 0, 0] = True
    with pytest.raises(PreconditionError):
        average_bands(_rec(values, bad))


def test_average_is_electrode_mean():
    values = np.arange(2 * 5 * 4, dtype=float).reshape(2, 5, 4)
    s = average_bands(_rec(values, np.zeros_like(values, bool)))
    np.testing.assert_array_equal(s.values, values.mean(axis=2))


def _series(values, rid="s"):
    values = np.asarray(values, float)
    return BandSeries(rid, Modality.vr, 1, np.arange(len(values)) * 0.1, values)


@given(hnp.arrays(np.float64, st.tuples(st.integers(2, 40), st.just(5)), elements=st.floats(-100, 100)))
def test_rescale_bounds(values):
    out = rescale(_series(values)).values
    assert out.min() >= 0 and out.max() <= 1
    lo, hi = values.min(axis=0), values.max(axis=0)
    for b in range(5):
        if hi[b] > lo[b]:
            assert out[values[:, b].argmin(), b] == 0.0
            assert out[values[:, b].argmax(), b] == 1.0
        else:
            assert np.all(out[:, b] == 0.0)


def test_rescale_twice_rejected():
    s = rescale(_series(np.random.default_rng(0).normal(size=(10, 5))))
    with pytest.raises(StateError):
        rescale(s)


def test_global_scope_shares_bounds(short_recordings):
    glob = preprocess(short_recordings, "global")
    per = preprocess(short_recordings, "recording")
    lo, hi = band_range(glob)
    np.testing.assert_array_equal(lo, np.zeros(5))
    np.testing.assert_array_equal(hi, np.ones(5))
    for s in per:
        np.testing.assert_array_equal(s.values.min(axis=0), np.zeros(5))
    # class levels stay distinguishable only under the shared range
    means = np.array([s.values.mean(axis=0) for s in glob])
    assert np.ptp(means[:, 3]) > 0.3
    with pytest.raises(ValueError):
        preprocess(short_recordings, "session")


def test_series_csv_round_trip(tmp_path, short_recordings):
    s = preprocess(short_recordings[:1])[0]
    write_series_csv(s, tmp_path / "s.csv")
    back = read_series_csv(tmp_path / "s.csv")
    assert back.recording_id == s.recording_id and back.label == s.label
    assert back.modality == s.modality and back.rescaled
    np.testing.assert_array_equal(back.values, s.values)
    np.testing.assert_array_equal(back.times, s.times)


def test_rescale_reference():
    s = _series(np.outer([0.0, 5.0, 10.0], np.ones(5)))
    np.testing.assert_array_equal(rescale(s).values[:, 0], [0.0, 0.5, 1.0])
