import numpy as np
import pytest
from hypothesis import given, strategies as st

from focusline.synth import DEFAULT_SIGNATURES, PRESETS, SynthConfig, generate, generate_one, preset
from focusline.types import ConcentrationLabel, N_BANDS


def test_shapes_and_order():
    recs = generate(SynthConfig(duration_s=30))
    assert [int(r.label) for r in recs] == [0, 0, 1, 1, 2, 2]
    assert recs[0].id == "synth-00-fully_concentrated"
    for r in recs:
        assert len(r) == 300
        assert r.values.shape == (300, 5, 4)
        np.testing.assert_allclose(np.diff(r.timestamps), 0.1)


@given(st.integers(0, 2**32 - 1))
def test_seed_determinism(seed):
    cfg = SynthConfig(duration_s=5, seed=seed)
    a, b = generate(cfg), generate(cfg)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.values, y.values)
        np.testing.assert_array_equal(x.bad, y.bad)
    c = generate(cfg.replace(seed=seed + 1))
    assert not np.array_equal(a[0].values, c[0].values)


def test_recordings_independent_of_count():
    # a recording depends only on (seed, index)
    one = generate(SynthConfig(duration_s=5, recordings_per_class=1, seed=9))
    assert np.array_equal(one[0].values, generate_one(SynthConfig(duration_s=5, seed=9), 0, 0).values,
                          equal_nan=True)


def test_noiseless_is_exact_signature():
    for rec in generate(preset("noiseless", duration_s=10)):
        expect = np.asarray(DEFAULT_SIGNATURES[rec.label])
        np.testing.assert_allclose(rec.values, np.broadcast_to(expect[None, :, None], rec.values.shape),
                                   atol=1e-15)
        assert not rec.bad.any()


def test_white_noise_mean_within_bound():
    # phi = 0: sample mean of T points lies within 3 sigma / sqrt(T) of the level
    cfg = SynthConfig(duration_s=200, ar_phi=0.0, electrode_jitter_sigma=0.0, dropout_prob=0.0, seed=4)
    T = 2000
    for rec in generate(cfg):
        level = np.asarray(DEFAULT_SIGNATURES[rec.label])
        means = rec.values.mean(axis=(0, 2))
        assert np.all(np.abs(means - level) <= 3 * cfg.noise_sigma / np.sqrt(T))


def test_ar_mean_within_adjusted_bound():
    # AR(1) sample means have long-run std sigma / ((1 - phi) sqrt(T))
    cfg = SynthConfig(duration_s=300, electrode_jitter_sigma=0.0, dropout_prob=0.0, seed=7)
    T = 3000
    bound = 4 * cfg.noise_sigma / ((1 - cfg.ar_phi) * np.sqrt(T))
    for rec in generate(cfg):
        level = np.asarray(DEFAULT_SIGNATURES[rec.label])
        assert np.all(np.abs(rec.values.mean(axis=(0, 2)) - level) <= bound)


def test_separability_zero_collapses_classes():
    recs = generate(preset("noiseless", duration_s=5, separability=0.0))
    for r in recs[1:]:
        np.testing.assert_array_equal(r.values, recs[0].values)


def test_dropout_runs():
    rec = generate(SynthConfig(duration_s=300, dropout_prob=0.01, seed=2))[0]
    assert rec.bad.any()
    assert np.all(np.isnan(rec.values[rec.bad]))
    # every bad stretch is 3 to 10 samples long
    for b in range(N_BANDS):
        for e in range(4):
            m = np.r_[False, rec.bad[:, b, e], False].astype(int)
            edges = np.flatnonzero(np.diff(m))
            lengths = edges[1::2] - edges[::2]
            assert np.all(lengths >= 3)


def test_presets():
    assert set(PRESETS) == {"easy", "hard", "noiseless"}
    assert preset("hard").separability == 0.25
    assert preset("easy", seed=3).seed == 3
    with pytest.raises(ValueError):
        preset("medium")
    with pytest.raises(ValueError):
        SynthConfig(ar_phi=1.0)
