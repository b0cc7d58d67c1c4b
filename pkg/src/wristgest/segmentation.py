"""Automatic gesture segmentation and the sliding-window extractor.

Four stages turn a continuous stream into gesture clips: band-pass
filtering, total-motion envelope, moving-average smoothing, and peak
detection with fixed-length extraction around each peak.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

from .core import SensorClip, Window


@dataclass(frozen=True)
class SegConfig:
    bandpass_low_hz: float = 0.5
    bandpass_high_hz: float = 20.0
    smooth_window: int = 25
    peak_min_distance: int = 100
    peak_min_height: float | None = None  # None: adaptive mean + 1.5 std
    segment_halfwidth: int = 100

    def __post_init__(self):
        if not 0 < self.bandpass_low_hz < self.bandpass_high_hz:
            raise ValueError("need 0 < low < high")
        if self.smooth_window < 1:
            raise ValueError("smooth_window must be >= 1")
        if self.segment_halfwidth < 1:
            raise ValueError("segment_halfwidth must be >= 1")

    def resolve_height(self, envelope: np.ndarray) -> float:
        if self.peak_min_height is not None:
            return float(self.peak_min_height)
        return float(envelope.mean() + 1.5 * envelope.std())


def bandpass(
    x: np.ndarray, low_hz: float, high_hz: float, rate_hz: float, axis: int = 0
) -> np.ndarray:
    """Zero-phase 4th-order Butterworth band-pass along the time axis.

    Forward-backward second-order sections; accepts (T,), (T, C) or any
    stack with time on ``axis``.
    """
    nyq = rate_hz / 2.0
    if not 0 < low_hz < high_hz < nyq:
        raise ValueError(f"band ({low_hz}, {high_hz}) Hz invalid for Nyquist {nyq} Hz")
    x = np.asarray(x, dtype=np.float64)
    sos = sps.butter(2, [low_hz, high_hz], btype="bandpass", fs=rate_hz, output="sos")
    default_padlen = 3 * (2 * sos.shape[0] + 1)
    padlen = min(default_padlen, x.shape[axis] - 1)
    return sps.sosfiltfilt(sos, x, axis=axis, padlen=padlen)


def motion_envelope(filtered: np.ndarray) -> np.ndarray:
    """Summed L2 magnitudes of the accelerometer and gyroscope triples."""
    x = np.asarray(filtered, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != 6:
        raise ValueError(f"motion envelope needs (T, 6) IMU data, got {x.shape}")
    acc = np.linalg.norm(x[:, 0:3], axis=1)
    gyro = np.linalg.norm(x[:, 3:6], axis=1)
    return acc + gyro


def smooth(env: np.ndarray, k: int) -> np.ndarray:
    """Centered moving average; boundary averages shrink to available samples."""
    if k < 1:
        raise ValueError("smoothing window must be >= 1")
    env = np.asarray(env, dtype=np.float64)
    if k == 1:
        return env.copy()
    t = env.shape[0]
    left = (k - 1) // 2
    right = k - 1 - left
    cum = np.concatenate([[0.0], np.cumsum(env)])
    idx = np.arange(t)
    lo = np.maximum(idx - left, 0)
    hi = np.minimum(idx + right, t - 1)
    return (cum[hi + 1] - cum[lo]) / (hi - lo + 1)


def detect_peaks(env: np.ndarray, cfg: SegConfig) -> list[int]:
    """Local maxima above the height threshold, at least min-distance apart.

    On conflicts the higher peak wins; equal heights keep the earlier index.
    """
    env = np.asarray(env, dtype=np.float64)
    t = env.shape[0]
    if t == 0:
        return []
    height = cfg.resolve_height(env)
    candidates = []
    for i in range(t):
        left_ok = i == 0 or env[i] > env[i - 1]
        right_ok = i == t - 1 or env[i] >= env[i + 1]
        # Plateau rule: keep the first sample of a flat top.
        if left_ok and right_ok and env[i] >= height:
            candidates.append(i)
    # Greedy suppression: strongest first, earlier index breaks ties.
    order = sorted(candidates, key=lambda i: (-env[i], i))
    kept: list[int] = []
    for i in order:
        if all(abs(i - j) >= cfg.peak_min_distance for j in kept):
            kept.append(i)
    return sorted(kept)


def extract_segments(
    stream: SensorClip, centers, halfwidth: int = 100
) -> list[SensorClip]:
    """Fixed-length cuts around each center, edge-replicated at stream bounds.

    Each segment covers [c - halfwidth, c + halfwidth) and inherits the
    stream's metadata.
    """
    if halfwidth < 1:
        raise ValueError("halfwidth must be >= 1")
    t = stream.n_samples
    segments = []
    for n, c in enumerate(centers):
        c = min(max(int(c), 0), t - 1)
        lo = c - halfwidth
        hi = c + halfwidth
        core = stream.samples[max(lo, 0) : min(hi, t)]
        pad_left = max(0, -lo)
        pad_right = max(0, hi - t)
        if pad_left or pad_right:
            core = np.pad(core, ((pad_left, pad_right), (0, 0)), mode="edge")
        seg_id = f"{stream.clip_id}/seg{n}" if stream.clip_id else f"seg{n}"
        segments.append(stream.with_samples(core, clip_id=seg_id))
    return segments


def window_starts(t: int, window: int = 100, stride: int = 20, count: int = 6) -> list[int]:
    """Start offsets of the stride-spaced windows centered on the clip midpoint.

    The ``count`` starts straddle (t - window) // 2 symmetrically; each is
    clamped into [0, t - window] and duplicates collapse, so short clips
    yield fewer windows.
    """
    if t < window:
        raise ValueError(f"clip of {t} samples is shorter than the window ({window})")
    base = (t - window) // 2
    first = base - ((count - 1) * stride) // 2
    starts = []
    for i in range(count):
        s = min(max(first + i * stride, 0), t - window)
        if not starts or s != starts[-1]:
            starts.append(s)
    return starts


def window_clip(clip: SensorClip, window: int = 100, stride: int = 20) -> list[Window]:
    """Slice a clip into the overlapping fixed-length windows the model consumes."""
    starts = window_starts(clip.n_samples, window, stride)
    return [
        Window(clip.samples[s : s + window], clip.label, clip.clip_id, s)
        for s in starts
    ]
