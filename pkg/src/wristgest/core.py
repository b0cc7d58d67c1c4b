"""Shared domain types (clips, windows, labels) and channel-wise normalization."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

CANONICAL_CHANNELS = ("acc_x", "acc_y", "acc_z", "gyro_x", "gyro_y", "gyro_z", "ppg")
IMU_CHANNELS = CANONICAL_CHANNELS[:6]

#: Command gestures kept for the 6-class benchmark, in benchmark-id order.
BENCHMARK_CLASS_IDS = (3, 4, 13, 16, 20)
BENCHMARK_CLASS_NAMES = (
    "double_clench",
    "double_pinch",
    "pinch_down",
    "pinch_up",
    "slide",
    "negative",
)
#: Benchmark id of the background / negative class.
NEGATIVE = 5
N_BENCHMARK_CLASSES = 6

#: Raw taxonomy ids reserved for background activity.
NEGATIVE_CLASS_ID_RANGE = range(27, 59)

CONDITIONS = ("sitting", "standing", "arm_down", "walking")
WRISTS = ("left", "right", "unspecified")

#: Std floor used in place of zero for constant channels.
STD_EPS = 1e-8


def _check_finite(arr: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} contains NaN or Inf values")


def _frozen_array(values, dtype=np.float64) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ChannelLayout:
    """Ordered channel names plus the shared sampling rate."""

    names: tuple[str, ...] = CANONICAL_CHANNELS
    sample_rate_hz: float = 100.0

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        if not self.names:
            raise ValueError("layout needs at least one channel")
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")

    @property
    def n_channels(self) -> int:
        return len(self.names)

    def index_of(self, name: str) -> int:
        return self.names.index(name)

    def imu_view(self) -> "ChannelLayout":
        """Layout restricted to the 6 IMU channels (must be the leading ones)."""
        if tuple(self.names[:6]) != IMU_CHANNELS:
            raise ValueError("layout does not start with the canonical IMU channels")
        return ChannelLayout(IMU_CHANNELS, self.sample_rate_hz)


def benchmark_id_of(class_id: int) -> int:
    """Collapse a raw taxonomy id (0..58) onto the 6-class benchmark."""
    if not isinstance(class_id, (int, np.integer)) or not 0 <= int(class_id) <= 58:
        raise ValueError(f"class_id {class_id!r} outside the 0..58 taxonomy")
    cid = int(class_id)
    if cid in BENCHMARK_CLASS_IDS:
        return BENCHMARK_CLASS_IDS.index(cid)
    return NEGATIVE


@dataclass(frozen=True)
class GestureLabel:
    """A raw taxonomy label together with its benchmark collapse."""

    class_id: int
    benchmark_id: int

    def __post_init__(self):
        expected = benchmark_id_of(self.class_id)
        if self.benchmark_id != expected:
            raise ValueError(
                f"benchmark_id {self.benchmark_id} inconsistent with class_id "
                f"{self.class_id} (expected {expected})"
            )

    @classmethod
    def from_class_id(cls, class_id: int) -> "GestureLabel":
        return cls(int(class_id), benchmark_id_of(class_id))

    @property
    def benchmark_name(self) -> str:
        return BENCHMARK_CLASS_NAMES[self.benchmark_id]


def collapse_to_benchmark(label: GestureLabel) -> GestureLabel:
    """Return the label with its benchmark id recomputed (idempotent)."""
    return GestureLabel.from_class_id(label.class_id)


@dataclass(frozen=True)
class SensorClip:
    """One labeled gesture recording of shape (T, C)."""

    samples: np.ndarray
    layout: ChannelLayout
    label: GestureLabel
    participant_id: str
    condition: str = "sitting"
    wrist: str = "unspecified"
    clip_id: str = ""

    def __post_init__(self):
        arr = _frozen_array(self.samples)
        if arr.ndim != 2 or arr.shape[0] < 1:
            raise ValueError(f"samples must be a T x C matrix with T >= 1, got {arr.shape}")
        _check_finite(arr, "clip samples")
        if arr.shape[1] != self.layout.n_channels:
            raise ValueError(
                f"samples have {arr.shape[1]} columns but layout names "
                f"{self.layout.n_channels} channels"
            )
        if self.condition not in CONDITIONS:
            raise ValueError(f"unknown condition {self.condition!r}")
        if self.wrist not in WRISTS:
            raise ValueError(f"unknown wrist {self.wrist!r}")
        object.__setattr__(self, "samples", arr)

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    def with_samples(self, samples: np.ndarray, **meta) -> "SensorClip":
        """Copy of this clip with new sample data and optional metadata overrides."""
        kwargs = dict(
            samples=samples,
            layout=self.layout,
            label=self.label,
            participant_id=self.participant_id,
            condition=self.condition,
            wrist=self.wrist,
            clip_id=self.clip_id,
        )
        kwargs.update(meta)
        return SensorClip(**kwargs)


@dataclass(frozen=True)
class Window:
    """Fixed-length slice of a clip; the model's input unit."""

    samples: np.ndarray
    label: GestureLabel
    clip_ref: str
    start_index: int

    def __post_init__(self):
        arr = _frozen_array(self.samples)
        if arr.ndim != 2 or arr.shape[0] < 1:
            raise ValueError(f"window samples must be W x C, got {arr.shape}")
        _check_finite(arr, "window samples")
        if self.start_index < 0:
            raise ValueError("start_index must be non-negative")
        object.__setattr__(self, "samples", arr)

    @property
    def length(self) -> int:
        return self.samples.shape[0]

    @property
    def n_channels(self) -> int:
        return self.samples.shape[1]

    def with_samples(self, samples: np.ndarray) -> "Window":
        return Window(samples, self.label, self.clip_ref, self.start_index)


@dataclass(frozen=True)
class NormStats:
    """Per-channel mean and (floored) standard deviation."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        mean = _frozen_array(self.mean)
        std = _frozen_array(self.std)
        if mean.shape != std.shape or mean.ndim != 1:
            raise ValueError("mean and std must be 1-D arrays of equal length")
        _check_finite(mean, "mean")
        _check_finite(std, "std")
        if np.any(std <= 0):
            raise ValueError("std must be strictly positive (degenerate channels are floored)")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)

    @property
    def n_channels(self) -> int:
        return self.mean.shape[0]


def fit_norm_stats(train_windows: Iterable[Window]) -> NormStats:
    """Per-channel mean/std over every sample of the training windows.

    Population std (1/N); constant channels are floored at STD_EPS.
    """
    windows = list(train_windows)
    if not windows:
        raise ValueError("no training data")
    stacked = np.concatenate([w.samples for w in windows], axis=0)
    if stacked.shape[0] < 2:
        raise ValueError("need at least 2 samples per channel to fit normalization")
    mean = stacked.mean(axis=0)
    std = stacked.std(axis=0)
    std = np.where(std > 0, std, STD_EPS)
    return NormStats(mean, std)


def apply_norm(x: Window, stats: NormStats) -> Window:
    """Channel-wise z-score; label and metadata untouched."""
    if x.n_channels != stats.n_channels:
        raise ValueError(
            f"window has {x.n_channels} channels but stats cover {stats.n_channels}"
        )
    return x.with_samples((x.samples - stats.mean) / stats.std)


def normalize_windows(windows: Sequence[Window], stats: NormStats) -> list[Window]:
    return [apply_norm(w, stats) for w in windows]
