import numpy as np
import pytest

from wristgest.features import (
    CROSS_PAIR_NAMES,
    DEFAULT_BANDS,
    FREQ_FEATURE_BASE_NAMES,
    N_TIME_FEATURES,
    SHAPE_FEATURE_INDICES,
    FilterbankSpec,
    TIME_FEATURE_NAMES,
    apply_masks_to_array,
    cross_features,
    filterbank,
    filterbank_batch,
    freq_features,
    time_features,
    token_count,
    tokenize,
)

from oracles import (
    cosine_ref,
    freq_features_ref,
    mutual_info_ref,
    pca_ratios_ref,
    pearson_ref,
    ranks_ref,
    time_features_ref,
)

RATE = 100.0
F_IDX = {n: i for i, n in enumerate(FREQ_FEATURE_BASE_NAMES)}
T_IDX = {n: i for i, n in enumerate(TIME_FEATURE_NAMES)}


# ----------------------------------------------------------------------
# filterbank
# ----------------------------------------------------------------------

def test_filterbank_near_identity_single_band(window_factory):
    # The 0.1 Hz low edge settles slowly, so steady state needs margin.
    t = np.arange(2000) / RATE
    x = np.sin(2 * np.pi * 7.0 * t)
    w = window_factory(np.tile(x[:, None], (1, 2)))
    spec = FilterbankSpec(bands=((0.1, 45.0),))
    out = filterbank(w, spec, RATE)
    interior = slice(400, 1600)
    assert np.abs(out[interior, 0] - x[interior]).max() < 0.05


def test_filterbank_dc_rejection(window_factory):
    w = window_factory(np.full((200, 3), 4.0))
    out = filterbank(w, FilterbankSpec(), RATE)
    assert np.abs(out[50:-50]).max() < 1e-6


def test_filterbank_band_energy_concentration(window_factory):
    t = np.arange(2000) / RATE
    w = window_factory(np.sin(2 * np.pi * 5.0 * t)[:, None])
    out = filterbank(w, FilterbankSpec(), RATE)
    energies = [float(np.sum(out[300:-300, b] ** 2)) for b in range(3)]
    assert energies[1] >= 10 * energies[0]
    assert energies[1] >= 10 * energies[2]


def test_filterbank_column_order_channel_major(window_factory, rng):
    x = rng.standard_normal((150, 2))
    w = window_factory(x)
    spec = FilterbankSpec()
    out = filterbank(w, spec, RATE)
    assert out.shape == (150, 6)
    from wristgest.segmentation import bandpass

    for c in range(2):
        for b, (lo, hi) in enumerate(spec.bands):
            ref = bandpass(x[:, c], lo, hi, RATE)
            assert np.allclose(out[:, c * 3 + b], ref, rtol=1e-12, atol=1e-12)


def test_filterbank_invalid_band():
    with pytest.raises(ValueError):
        FilterbankSpec(bands=((5.0, 2.0),))


def test_filterbank_batch_matches_per_window(window_factory, rng):
    xs = rng.standard_normal((4, 120, 3))
    spec = FilterbankSpec()
    batch = filterbank_batch(xs, spec, RATE)
    for i in range(4):
        w = window_factory(xs[i])
        flat = filterbank(w, spec, RATE)
        per = flat.reshape(120, 3, 3).transpose(1, 0, 2)
        assert np.array_equal(batch[i], per)


# ----------------------------------------------------------------------
# time features
# ----------------------------------------------------------------------

def test_time_features_constant_conventions():
    w = 50
    c = 3.25
    f = time_features(np.full(w, c))
    assert f[T_IDX["mean"]] == pytest.approx(c)
    assert f[T_IDX["variance"]] == 0
    assert f[T_IDX["range"]] == 0
    assert f[T_IDX["zcr"]] == 0
    assert f[T_IDX["energy"]] == pytest.approx(w * c * c)
    for name in ("skewness", "kurtosis", "hjorth_mobility", "hjorth_complexity",
                 "autocorr_lag1", "autocorr_lag2"):
        assert f[T_IDX[name]] == 0


def test_time_features_alternating():
    x = np.array([-1.0, 1.0] * 25)
    f = time_features(x)
    assert f[T_IDX["zcr"]] == pytest.approx(1.0)
    assert f[T_IDX["mean"]] == pytest.approx(0.0)
    assert f[T_IDX["rms"]] == pytest.approx(1.0)


def test_time_features_sinusoid_mobility_closed_form():
    f_hz, w = 5.0, 1000
    x = np.sin(2 * np.pi * f_hz * np.arange(w) / RATE + 0.3)
    got = time_features(x)[T_IDX["hjorth_mobility"]]
    assert abs(got - 2 * np.sin(np.pi * f_hz / RATE)) < 1e-3


def test_time_features_match_reference(rng):
    for _ in range(30):
        x = rng.standard_normal(64) * rng.uniform(0.5, 3.0)
        got = time_features(x)
        ref = np.array(time_features_ref(x))
        np.testing.assert_allclose(got, ref, rtol=1e-6, atol=1e-10)


def test_time_features_scale_covariance(rng):
    x = rng.standard_normal(100)
    a = 3.0
    f1, f2 = time_features(x), time_features(a * x)
    assert f2[T_IDX["mean"]] == pytest.approx(a * f1[T_IDX["mean"]])
    assert f2[T_IDX["variance"]] == pytest.approx(a * a * f1[T_IDX["variance"]], rel=1e-9)
    assert f2[T_IDX["zcr"]] == f1[T_IDX["zcr"]]
    assert f2[T_IDX["skewness"]] == pytest.approx(f1[T_IDX["skewness"]], rel=1e-9)
    assert f2[T_IDX["kurtosis"]] == pytest.approx(f1[T_IDX["kurtosis"]], rel=1e-9)
    assert f2[T_IDX["hjorth_mobility"]] == pytest.approx(f1[T_IDX["hjorth_mobility"]], rel=1e-9)


# ----------------------------------------------------------------------
# frequency features
# ----------------------------------------------------------------------

def test_freq_features_pure_sinusoid():
    x = np.sin(2 * np.pi * 10.0 * np.arange(100) / RATE)
    f = freq_features(x, RATE)
    assert f[F_IDX["peak_freq"]] == pytest.approx(10.0)
    assert f[F_IDX["rolloff_85"]] == pytest.approx(10.0)
    assert f[F_IDX["entropy"]] < 0.05
    assert f[F_IDX["high_band"]] == pytest.approx(1.0)  # 10 Hz sits in [10, 30)


def test_freq_features_white_noise_statistics():
    rng = np.random.default_rng(0)
    flat, ent = [], []
    for _ in range(100):
        f = freq_features(rng.standard_normal(400), RATE)
        flat.append(f[F_IDX["flatness"]])
        ent.append(f[F_IDX["entropy"]])
    assert np.mean(flat) > 0.5
    assert np.mean(ent) > 0.9


def test_freq_features_zero_signal_convention():
    assert np.all(freq_features(np.zeros(64), RATE) == 0)
    assert np.all(freq_features(np.full(64, 7.7), RATE) == 0)


def test_freq_features_match_reference(rng):
    for _ in range(30):
        x = rng.standard_normal(100)
        got = freq_features(x, RATE, k_top=3)
        ref = np.array(freq_features_ref(x, RATE, k_top=3))
        np.testing.assert_allclose(got, ref, rtol=1e-6, atol=1e-10)


def test_freq_features_top_k_ordering(rng):
    t = np.arange(200) / RATE
    x = 3 * np.sin(2 * np.pi * 4 * t) + 2 * np.sin(2 * np.pi * 11 * t) + np.sin(2 * np.pi * 17 * t)
    f = freq_features(x, RATE, k_top=3)
    assert list(f[-3:]) == [4.0, 11.0, 17.0]


# ----------------------------------------------------------------------
# cross-channel features
# ----------------------------------------------------------------------

def test_cross_features_self_copy(rng):
    x = rng.standard_normal(80)
    w = np.stack([x, x.copy()], axis=1)
    pairs, _ = cross_features(w)
    p = pairs[(0, 1)]
    assert p[0] == pytest.approx(1.0)
    assert p[1] == pytest.approx(1.0)
    assert p[2] == pytest.approx(1.0)


def test_cross_features_sign_flip(rng):
    x = rng.standard_normal(80)
    w = np.stack([x, -x], axis=1)
    pairs, _ = cross_features(w)
    assert pairs[(0, 1)][0] == pytest.approx(-1.0)
    assert pairs[(0, 1)][2] == pytest.approx(-1.0)
    same = np.stack([x, x], axis=1)
    mi_same = cross_features(same)[0][(0, 1)][3]
    assert pairs[(0, 1)][3] == pytest.approx(mi_same, rel=1e-9)


def test_cross_features_rank2_pca(rng):
    a = rng.standard_normal(120)
    b = rng.standard_normal(120)
    w = np.stack([a, b, a + b], axis=1)
    _, ratios = cross_features(w)
    assert ratios[0] + ratios[1] == pytest.approx(1.0, abs=1e-9)
    ref = pca_ratios_ref(w)
    np.testing.assert_allclose(ratios, ref, rtol=1e-9, atol=1e-12)


def test_cross_features_match_reference(rng):
    for _ in range(10):
        w = rng.standard_normal((60, 3))
        pairs, ratios = cross_features(w)
        for (i, j), vals in pairs.items():
            assert vals[0] == pytest.approx(pearson_ref(w[:, i], w[:, j]), rel=1e-9)
            assert vals[1] == pytest.approx(
                pearson_ref(ranks_ref(w[:, i]), ranks_ref(w[:, j])), rel=1e-9
            )
            assert vals[2] == pytest.approx(cosine_ref(w[:, i], w[:, j]), rel=1e-9)
            assert vals[3] == pytest.approx(mutual_info_ref(w[:, i], w[:, j]), rel=1e-9)
        np.testing.assert_allclose(ratios, pca_ratios_ref(w), rtol=1e-9, atol=1e-12)


def test_cross_features_ties_average_ranks():
    a = np.array([1.0, 1.0, 2.0, 3.0, 3.0, 3.0])
    assert ranks_ref(a) == [1.5, 1.5, 3.0, 5.0, 5.0, 5.0]
    b = np.array([2.0, 1.0, 4.0, 9.0, 8.0, 7.0])
    w = np.stack([a, b], axis=1)
    pairs, _ = cross_features(w)
    assert pairs[(0, 1)][1] == pytest.approx(pearson_ref(ranks_ref(a), ranks_ref(b)), rel=1e-12)


# ----------------------------------------------------------------------
# tokenization
# ----------------------------------------------------------------------

def test_tokenize_combinatorics(window_factory, rng):
    w = window_factory(rng.standard_normal((100, 6)))
    seq = tokenize(w, k_top=3)
    assert len(seq) == 28 == token_count(6)
    groups = [t.group for t in seq.tokens]
    assert groups[:6] == ["time"] * 6
    assert groups[6:12] == ["frequency"] * 6
    assert groups[12:27] == ["cross"] * 15
    assert groups[27] == "pca"
    arr = seq.to_array()
    assert arr.shape == (28, 21)


def test_tokenize_frequency_mask_zero_fills(window_factory, rng):
    w = window_factory(rng.standard_normal((100, 6)))
    masked = tokenize(w, masks={"frequency"})
    assert len(masked) == 28
    for t in masked.tokens:
        if t.group == "frequency":
            assert np.all(t.values == 0)
        elif t.group == "time":
            assert np.any(t.values != 0)


def test_tokenize_shape_mask_hits_shape_indices(window_factory, rng):
    w = window_factory(rng.standard_normal((100, 6)))
    masked = tokenize(w, masks={"shape"})
    for t in masked.tokens:
        if t.group == "time":
            assert np.all(t.values[list(SHAPE_FEATURE_INDICES)] == 0)
            others = [i for i in range(N_TIME_FEATURES) if i not in SHAPE_FEATURE_INDICES]
            assert np.any(t.values[others] != 0)


def test_tokenize_deterministic(window_factory, rng):
    x = rng.standard_normal((100, 6))
    a = tokenize(window_factory(x)).to_array()
    b = tokenize(window_factory(x.copy())).to_array()
    assert np.array_equal(a, b)


def test_tokenize_unknown_mask(window_factory, rng):
    w = window_factory(rng.standard_normal((100, 6)))
    with pytest.raises(ValueError, match="unknown mask"):
        tokenize(w, masks={"bogus"})


def test_apply_masks_to_array_matches_tokenize(window_factory, rng):
    w = window_factory(rng.standard_normal((100, 6)))
    base = tokenize(w).to_array()
    for mask in ("time", "frequency", "cross", "shape"):
        direct = tokenize(w, masks={mask}).to_array()
        via_array = apply_masks_to_array(base, {mask}, n_channels=6)
        assert np.array_equal(direct, via_array), mask


def test_token_layout_independent_of_data(window_factory, rng):
    w1 = window_factory(rng.standard_normal((100, 6)))
    w2 = window_factory(np.zeros((100, 6)))
    s1, s2 = tokenize(w1), tokenize(w2)
    assert [(t.group, t.source) for t in s1.tokens] == [(t.group, t.source) for t in s2.tokens]
