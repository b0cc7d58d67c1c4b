"""Wrist-worn gesture recognition pipeline: data, features, model, evaluation."""

__version__ = "0.1.0"

from .core import (  # noqa: F401
    BENCHMARK_CLASS_NAMES,
    NEGATIVE,
    ChannelLayout,
    GestureLabel,
    NormStats,
    SensorClip,
    Window,
    apply_norm,
    collapse_to_benchmark,
    fit_norm_stats,
)
