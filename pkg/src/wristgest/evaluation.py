"""Window-level metrics, clip-level aggregation, and report emission."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import BENCHMARK_CLASS_NAMES, NormStats, SensorClip
from .segmentation import window_clip


@dataclass
class EvalReport:
    """Confusion matrix plus the derived single-label multi-class metrics."""

    level: str  # "window" | "clip"
    confusion: np.ndarray  # (K, K), rows = true, cols = predicted
    class_names: tuple[str, ...]
    accuracy: float
    per_class: list[dict]
    macro_f1: float
    micro_f1: float
    weighted_f1: float
    k: int | None = None  # consecutive-window rule used at clip level

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "k": self.k,
            "class_names": list(self.class_names),
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "micro_f1": self.micro_f1,
            "weighted_f1": self.weighted_f1,
            "per_class": self.per_class,
            "confusion": self.confusion.astype(int).tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        return cls(
            level=d["level"],
            confusion=np.asarray(d["confusion"], dtype=np.int64),
            class_names=tuple(d["class_names"]),
            accuracy=d["accuracy"],
            per_class=list(d["per_class"]),
            macro_f1=d["macro_f1"],
            micro_f1=d["micro_f1"],
            weighted_f1=d["weighted_f1"],
            k=d.get("k"),
        )

    def save_json(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n")
        return path

    @classmethod
    def load_json(cls, path) -> "EvalReport":
        return cls.from_dict(json.loads(Path(path).read_text()))


def confusion_matrix(preds, truths, n_classes: int) -> np.ndarray:
    preds = np.asarray(preds, dtype=np.int64)
    truths = np.asarray(truths, dtype=np.int64)
    if preds.shape != truths.shape:
        raise ValueError(f"length mismatch: {preds.shape} predictions vs {truths.shape} truths")
    if preds.size == 0:
        raise ValueError("no predictions to evaluate")
    if np.any((preds < 0) | (preds >= n_classes) | (truths < 0) | (truths >= n_classes)):
        raise ValueError("label outside 0..K-1")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (truths, preds), 1)
    return cm


def metrics_from_confusion(
    cm: np.ndarray,
    level: str,
    class_names: Sequence[str] | None = None,
    k: int | None = None,
) -> EvalReport:
    n_classes = cm.shape[0]
    if class_names is None:
        class_names = (
            BENCHMARK_CLASS_NAMES
            if n_classes == len(BENCHMARK_CLASS_NAMES)
            else tuple(f"class{i}" for i in range(n_classes))
        )
    total = int(cm.sum())
    tp = np.diag(cm).astype(np.float64)
    support = cm.sum(axis=1).astype(np.float64)
    predicted = cm.sum(axis=0).astype(np.float64)
    precision = np.divide(tp, predicted, out=np.zeros(n_classes), where=predicted > 0)
    recall = np.divide(tp, support, out=np.zeros(n_classes), where=support > 0)
    pr = precision + recall
    f1 = np.divide(2 * precision * recall, pr, out=np.zeros(n_classes), where=pr > 0)
    accuracy = float(tp.sum() / total)
    macro_f1 = float(f1.mean())
    micro_p = tp.sum() / predicted.sum()
    micro_r = tp.sum() / support.sum()
    micro_f1 = float(2 * micro_p * micro_r / (micro_p + micro_r)) if micro_p + micro_r > 0 else 0.0
    # Single-label multi-class identity; kept as a hard internal check.
    assert abs(micro_f1 - accuracy) < 1e-12
    weighted_f1 = float((f1 * support).sum() / support.sum())
    per_class = [
        {
            "name": class_names[i],
            "precision": float(precision[i]),
            "recall": float(recall[i]),
            "f1": float(f1[i]),
            "support": int(support[i]),
        }
        for i in range(n_classes)
    ]
    for value in (accuracy, macro_f1, micro_f1, weighted_f1, *precision, *recall, *f1):
        assert 0.0 <= value <= 1.0
    return EvalReport(
        level=level,
        confusion=cm,
        class_names=tuple(class_names),
        accuracy=accuracy,
        per_class=per_class,
        macro_f1=macro_f1,
        micro_f1=micro_f1,
        weighted_f1=weighted_f1,
        k=k,
    )


def window_metrics(
    preds, truths, n_classes: int, class_names: Sequence[str] | None = None
) -> EvalReport:
    """Standard multi-class metrics over independent window predictions."""
    cm = confusion_matrix(preds, truths, n_classes)
    return metrics_from_confusion(cm, "window", class_names)


def aggregate_clip(window_preds: Sequence[int], k: int = 3) -> int:
    """Clip label from ordered window predictions.

    Left-to-right scan; the first class reaching k consecutive identical
    predictions wins (early stop). Otherwise majority vote, ties broken by
    earliest first appearance.
    """
    preds = list(window_preds)
    if not preds:
        raise ValueError("no window predictions to aggregate")
    if k < 1:
        raise ValueError("k must be >= 1")
    run_label, run_len = None, 0
    for p in preds:
        if p == run_label:
            run_len += 1
        else:
            run_label, run_len = p, 1
        if run_len >= k:
            return run_label
    counts = Counter(preds)
    best = max(counts.values())
    for p in preds:  # earliest-appearing label among the tied majority
        if counts[p] == best:
            return p
    raise AssertionError("unreachable")


def clip_metrics(
    predictor,
    clips: Sequence[SensorClip],
    k: int = 3,
    window: int = 100,
    stride: int = 20,
    class_names: Sequence[str] | None = None,
) -> EvalReport:
    """Aggregate per-clip window predictions, then score at clip level."""
    if not clips:
        raise ValueError("no clips to evaluate")
    n_classes = predictor.model.config.n_classes
    truths, preds = [], []
    for clip in clips:
        windows = window_clip(clip, window, stride)
        if not windows:
            raise ValueError(f"clip {clip.clip_id!r} yields no windows")
        wp = predictor.predict(windows)
        preds.append(aggregate_clip(list(wp), k))
        truths.append(clip.label.benchmark_id)
    cm = confusion_matrix(preds, truths, n_classes)
    return metrics_from_confusion(cm, "clip", class_names, k=k)


def row_normalize(cm: np.ndarray) -> np.ndarray:
    """Row-stochastic confusion matrix; empty classes stay all-zero."""
    cm = np.asarray(cm, dtype=np.float64)
    sums = cm.sum(axis=1, keepdims=True)
    return np.divide(cm, sums, out=np.zeros_like(cm), where=sums > 0)


def write_confusion_csv(report: EvalReport, path) -> Path:
    path = Path(path)
    lines = ["true\\pred," + ",".join(report.class_names)]
    for name, row in zip(report.class_names, report.confusion):
        lines.append(name + "," + ",".join(str(int(v)) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def emit_report(
    report: EvalReport,
    out_dir,
    formats: Sequence[str] = ("json", "csv", "svg"),
    history: list[dict] | None = None,
    prefix: str = "report",
) -> dict[str, Path]:
    """Write the report as JSON/CSV/SVG artifacts into ``out_dir``.

    SVG output renders the row-normalized confusion heatmap, plus the
    fusion-weight dynamics curve when a training history is supplied.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    unknown = set(formats) - {"json", "csv", "svg"}
    if unknown:
        raise ValueError(f"unknown report format(s): {sorted(unknown)}")
    written: dict[str, Path] = {}
    if "json" in formats:
        written["json"] = report.save_json(out_dir / f"{prefix}.json")
    if "csv" in formats:
        written["csv"] = write_confusion_csv(report, out_dir / f"{prefix}_confusion.csv")
    if "svg" in formats:
        from .plotting import plot_confusion_heatmap, plot_fusion_dynamics

        written["svg"] = plot_confusion_heatmap(
            report, out_dir / f"{prefix}_confusion.svg"
        )
        if history:
            written["fusion_svg"] = plot_fusion_dynamics(
                history, out_dir / f"{prefix}_fusion_weights.svg"
            )
    return written
