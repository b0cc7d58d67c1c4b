import numpy as np
import pytest

from wristgest.augmentation import (
    MIRROR_CHANNELS,
    AugConfig,
    WalkBank,
    derive_rng,
    expand_training_set,
    mirror_wrist,
    perturb,
    sample_warp_path,
    walking_overlay,
)
from wristgest.core import CANONICAL_CHANNELS
from wristgest.segmentation import motion_envelope


def _bank(rng, n_seg=3, seg_len=200):
    rec = rng.standard_normal((n_seg * seg_len, 6))
    return WalkBank.from_recording(rec, seg_len)


def test_mirror_negates_exact_channel_set(clip_factory, rng):
    samples = rng.standard_normal((60, 7))
    clip = clip_factory(samples, wrist="left")
    out = mirror_wrist(clip)
    for i, name in enumerate(CANONICAL_CHANNELS):
        if name in MIRROR_CHANNELS:
            assert np.array_equal(out.samples[:, i], -samples[:, i]), name
        else:
            assert np.array_equal(out.samples[:, i], samples[:, i]), name
    assert set(MIRROR_CHANNELS) == {"acc_x", "gyro_x", "gyro_z"}
    assert out.wrist == "right"


def test_mirror_example_values(clip_factory):
    samples = np.zeros((2, 7))
    samples[:, 0] = (1.0, -2.0)  # acc_x
    samples[:, 1] = (3.0, 4.0)  # acc_y
    out = mirror_wrist(clip_factory(samples))
    assert list(out.samples[:, 0]) == [-1.0, 2.0]
    assert list(out.samples[:, 1]) == [3.0, 4.0]


def test_mirror_involution_bit_exact(clip_factory, rng):
    clip = clip_factory(rng.standard_normal((80, 7)), wrist="right")
    twice = mirror_wrist(mirror_wrist(clip))
    assert np.array_equal(twice.samples, clip.samples)
    assert twice.wrist == clip.wrist


def test_mirror_preserves_motion_envelope(clip_factory, rng):
    clip = clip_factory(rng.standard_normal((80, 7)))
    a = motion_envelope(clip.samples[:, :6])
    b = motion_envelope(mirror_wrist(clip).samples[:, :6])
    assert np.array_equal(a, b)


def test_perturb_null_config_identity(window_factory, rng):
    w = window_factory(rng.standard_normal((100, 7)))
    cfg = AugConfig(scale_range=(1.0, 1.0), warp_strength=0.0, noise_amp=0.0)
    out = perturb(w, cfg, np.random.default_rng(3))
    assert np.array_equal(out.samples, w.samples)
    assert out.label == w.label and out.samples.shape == w.samples.shape


def test_perturb_scale_only_exact(window_factory, rng):
    w = window_factory(rng.standard_normal((100, 7)))
    cfg = AugConfig(scale_range=(2.0, 2.0), warp_strength=0.0, noise_amp=0.0)
    out = perturb(w, cfg, np.random.default_rng(3))
    assert np.array_equal(out.samples, 2.0 * w.samples)


def test_warp_path_strictly_increasing_and_bounded():
    for seed in range(50):
        tau = sample_warp_path(100, 0.1, np.random.default_rng(seed))
        assert np.all(np.diff(tau) > 0)
        assert np.max(np.abs(tau - np.arange(100))) <= 0.1 * 100 + 1e-9
    # Strong warp still monotone thanks to the rescale guard.
    for seed in range(20):
        tau = sample_warp_path(100, 0.3, np.random.default_rng(seed))
        assert np.all(np.diff(tau) > 0)


def test_perturb_preserves_length_and_label(window_factory, rng):
    w = window_factory(rng.standard_normal((100, 7)), class_id=20)
    out = perturb(w, AugConfig(), np.random.default_rng(0))
    assert out.samples.shape == (100, 7)
    assert out.label.benchmark_id == 4


def test_overlay_zero_gains_identity(clip_factory, rng):
    clip = clip_factory(rng.standard_normal((150, 7)))
    cfg = AugConfig(alpha_range=(0.0, 0.0), beta_range=(0.0, 0.0))
    out = walking_overlay(clip, _bank(rng), cfg, np.random.default_rng(1))
    assert np.array_equal(out.samples, clip.samples)


def test_overlay_matches_direct_formula(clip_factory, rng):
    bank = _bank(rng, n_seg=2, seg_len=120)
    clip = clip_factory(rng.standard_normal((100, 7)))
    cfg = AugConfig(alpha_range=(1.0, 1.0), beta_range=(0.0, 0.0))
    r = np.random.default_rng(7)
    out = walking_overlay(clip, bank, cfg, r)
    r2 = np.random.default_rng(7)
    seg = bank.segments[r2.integers(0, len(bank))]
    expect = clip.samples.copy()
    expect[:, 0:3] += 1.0 * seg[np.arange(100) % 120][:, 0:3]
    assert np.array_equal(out.samples, expect)
    assert np.array_equal(out.samples[:, 3:7], clip.samples[:, 3:7])


def test_overlay_exact_arithmetic_on_integer_data(clip_factory):
    # Integer-valued samples make float addition exact, so Eq-style
    # decomposition can be asserted bitwise.
    rng = np.random.default_rng(0)
    g = rng.integers(-5, 6, size=(240, 7)).astype(np.float64)
    walk = rng.integers(-3, 4, size=(120 * 2, 6)).astype(np.float64)
    bank = WalkBank.from_recording(walk, 120)
    clip = clip_factory(g)
    zero = clip_factory(np.zeros((240, 7)))
    cfg = AugConfig(alpha_range=(1.0, 1.0), beta_range=(2.0, 2.0))
    out_g = walking_overlay(clip, bank, cfg, np.random.default_rng(5))
    out_0 = walking_overlay(zero, bank, cfg, np.random.default_rng(5))
    # additivity: overlay(g) - overlay(0) == g, exactly on integer data
    assert np.array_equal(out_g.samples[:, :6] - out_0.samples[:, :6], g[:, :6])
    # cyclic tiling: the overlay repeats with period L_w
    tiled = out_0.samples[:, :6]
    assert np.array_equal(tiled[:120], tiled[120:240])


def test_overlay_empty_bank_errors(clip_factory, rng):
    clip = clip_factory(rng.standard_normal((50, 7)))
    with pytest.raises(ValueError):
        WalkBank(segments=(), segment_len=0)
    bank = _bank(rng)
    empty = WalkBank(segments=(), segment_len=10)
    with pytest.raises(ValueError, match="empty"):
        walking_overlay(clip, empty, AugConfig(), np.random.default_rng(0))


def test_expand_mirror_only_doubles(clip_factory, rng):
    clips = [clip_factory(rng.standard_normal((120, 7)), clip_id=f"c{i}") for i in range(5)]
    out = expand_training_set(clips, AugConfig(), walk_bank=None)
    assert len(out) == 10
    mirrored = out[5:]
    assert all(m.participant_id.endswith("_mir") for m in mirrored)


def test_expand_disabled_identity(clip_factory, rng):
    clips = [clip_factory(rng.standard_normal((120, 7)))]
    cfg = AugConfig(mirror=False, perturb_copies=0, overlay_copies=0)
    out = expand_training_set(clips, cfg)
    assert len(out) == 1 and out[0] is clips[0]


def test_expand_deterministic(clip_factory, rng):
    clips = [clip_factory(rng.standard_normal((150, 7)), clip_id=f"c{i}") for i in range(3)]
    bank = _bank(np.random.default_rng(2))
    cfg = AugConfig(seed=33, perturb_copies=2, overlay_copies=1)
    a = expand_training_set(clips, cfg, bank)
    b = expand_training_set(clips, cfg, bank)
    assert len(a) == len(b)
    for x, y in zip(a, b):
        assert x.clip_id == y.clip_id
        assert np.array_equal(x.samples, y.samples)


def test_expand_guard_rejects_non_train(clip_factory, rng):
    clips = [clip_factory(rng.standard_normal((120, 7)))]
    for split in ("val", "test"):
        with pytest.raises(ValueError, match="train"):
            expand_training_set(clips, AugConfig(), split=split)


def test_expand_provenance_records(clip_factory, rng):
    clips = [clip_factory(rng.standard_normal((150, 7)), clip_id="c0")]
    bank = _bank(np.random.default_rng(2))
    cfg = AugConfig(seed=1, perturb_copies=1, overlay_copies=1)
    out, records = expand_training_set(clips, cfg, bank, collect_provenance=True)
    assert len(records) == len(out)
    kinds = {r["transform"] for r in records}
    assert kinds == {"original", "mirror", "perturb", "overlay"}
    overlay_rec = next(r for r in records if r["transform"] == "overlay")
    assert {"segment_index", "alpha", "beta"} <= set(overlay_rec["params"])


def test_derive_rng_schedule_independent():
    a = derive_rng(5, 10).standard_normal(4)
    _ = derive_rng(5, 11).standard_normal(4)
    b = derive_rng(5, 10).standard_normal(4)
    assert np.array_equal(a, b)
