"""End-to-end orchestration shared by the CLI and the acceptance harness.

A run directory is self-describing: it holds the resolved config, the seed,
the package version, normalization stats, checkpoint, history and figures,
which is enough to reproduce the run bit-identically.
"""

from __future__ import annotations

import copy
import json
from pathlib import Path
from typing import Iterable

import numpy as np

from . import __version__
from .augmentation import AugConfig, expand_training_set
from .core import NormStats, Window, fit_norm_stats, normalize_windows
from .dataio import DatasetIndex, load_walk_bank
from .evaluation import EvalReport, clip_metrics, emit_report, window_metrics
from .mixtoken import (
    FitResult,
    MixTokenConfig,
    MixTokenModel,
    TrainConfig,
    WindowPredictor,
    ablate_features,
    fit,
)
from .segmentation import window_clip


def default_run_config() -> dict:
    return {
        "seed": 42,
        "threads": 1,
        "windowing": {"window": 100, "stride": 20},
        "augment": {
            "mirror": True,
            "perturb_copies": 0,
            "overlay_copies": 0,
            "scale_min": 0.8,
            "scale_max": 1.2,
            "warp_strength": 0.1,
            "noise_amp": 0.05,
            "noise_cutoff_hz": 2.0,
            "alpha_min": 0.3,
            "alpha_max": 1.0,
            "beta_min": 0.3,
            "beta_max": 1.0,
            "walk_segment_len": 500,
        },
        "features": {"k_top": 3, "mi_bins": 8, "masks": []},
        "model": {
            "n_classes": 6,
            "include_ppg": False,
            "cnn_widths": [32, 48, 64],
            "cnn_kernel": 5,
            "d_model": 64,
            "n_heads": 4,
            "n_layers": 2,
            "ff_dim": 128,
            "head_hidden": 128,
            "dropout": 0.1,
            "fusion_init": [0.0, 0.0, 0.0],
            "bands": [[0.1, 3.0], [3.0, 10.0], [10.0, 30.0]],
            "dtype": "float64",
        },
        "train": {
            "lr": 1e-3,
            "weight_decay": 1e-3,
            "lr_decay": 0.97,
            "clip_value": 1.0,
            "batch_size": 16,
            "max_epochs": 100,
            "patience": 5,
            "seed": 42,
            "class_weighting": "inverse_frequency",
            "aux_head_losses": False,
        },
        "eval": {"k": 3},
    }


def merge_config(base: dict, override: dict) -> dict:
    """Recursive merge; override wins, unknown keys are rejected."""
    out = copy.deepcopy(base)
    for key, value in override.items():
        if key not in out:
            raise KeyError(f"unknown config key {key!r}")
        if isinstance(out[key], dict):
            if not isinstance(value, dict):
                raise ValueError(f"config section {key!r} must be an object")
            out[key] = merge_config(out[key], value)
        else:
            out[key] = value
    return out


def apply_dotted_overrides(cfg: dict, overrides: Iterable[tuple[str, str]]) -> dict:
    """Apply ``a.b=value`` style overrides; values parse as JSON, else strings."""
    out = copy.deepcopy(cfg)
    for key, raw in overrides:
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = out
        parts = key.split(".")
        for part in parts[:-1]:
            if part not in node or not isinstance(node[part], dict):
                raise KeyError(f"unknown config section {part!r} in override {key!r}")
            node = node[part]
        leaf = parts[-1]
        if leaf not in node:
            raise KeyError(f"unknown config key {key!r}")
        node[leaf] = value
    return out


def model_config_from(cfg: dict) -> MixTokenConfig:
    m = cfg["model"]
    f = cfg["features"]
    return MixTokenConfig(
        n_classes=m["n_classes"],
        n_channels=7 if m["include_ppg"] else 6,
        cnn_widths=tuple(m["cnn_widths"]),
        cnn_kernel=m["cnn_kernel"],
        d_model=m["d_model"],
        n_heads=m["n_heads"],
        n_layers=m["n_layers"],
        ff_dim=m["ff_dim"],
        head_hidden=m["head_hidden"],
        dropout=m["dropout"],
        fusion_init=tuple(m["fusion_init"]),
        bands=tuple(tuple(b) for b in m["bands"]),
        k_top=f["k_top"],
        mi_bins=f["mi_bins"],
        dtype=m["dtype"],
        seed=cfg["seed"],
    )


def train_config_from(cfg: dict) -> TrainConfig:
    t = cfg["train"]
    return TrainConfig(
        lr=t["lr"],
        weight_decay=t["weight_decay"],
        lr_decay=t["lr_decay"],
        clip_value=t["clip_value"],
        batch_size=t["batch_size"],
        max_epochs=t["max_epochs"],
        patience=t["patience"],
        seed=t["seed"],
        class_weighting=t["class_weighting"],
        aux_head_losses=t["aux_head_losses"],
    )


def aug_config_from(cfg: dict) -> AugConfig:
    a = cfg["augment"]
    return AugConfig(
        scale_range=(a["scale_min"], a["scale_max"]),
        warp_strength=a["warp_strength"],
        noise_amp=a["noise_amp"],
        noise_cutoff_hz=a["noise_cutoff_hz"],
        alpha_range=(a["alpha_min"], a["alpha_max"]),
        beta_range=(a["beta_min"], a["beta_max"]),
        seed=cfg["seed"],
        mirror=a["mirror"],
        perturb_copies=a["perturb_copies"],
        overlay_copies=a["overlay_copies"],
    )


def prepare_windows(index: DatasetIndex, cfg: dict) -> dict:
    """Clips -> augmented train windows -> fitted stats -> normalized splits."""
    w = cfg["windowing"]["window"]
    stride = cfg["windowing"]["stride"]
    aug_cfg = aug_config_from(cfg)
    walk_bank = None
    if aug_cfg.overlay_copies > 0:
        walk_bank = load_walk_bank(index.root, cfg["augment"]["walk_segment_len"])
    splits: dict[str, list] = {}
    clips: dict[str, list] = {}
    for split in ("train", "val", "test"):
        cs = index.load_split(split)
        if split == "train":
            cs = expand_training_set(cs, aug_cfg, walk_bank, split="train")
        clips[split] = cs
        windows: list[Window] = []
        for clip in cs:
            windows.extend(window_clip(clip, w, stride))
        splits[split] = windows
    stats = fit_norm_stats(splits["train"])
    normed = {s: normalize_windows(ws, stats) for s, ws in splits.items()}
    return {"windows": normed, "clips": clips, "stats": stats}


def save_norm_stats(stats: NormStats, path) -> None:
    payload = {"mean": stats.mean.tolist(), "std": stats.std.tolist()}
    Path(path).write_text(json.dumps(payload, indent=1) + "\n")


def load_norm_stats(path) -> NormStats:
    payload = json.loads(Path(path).read_text())
    return NormStats(np.asarray(payload["mean"]), np.asarray(payload["std"]))


def run_training(
    index: DatasetIndex,
    cfg: dict,
    out_dir,
    quiet: bool = True,
    log_fn=None,
) -> dict:
    """Train on the index's train/val splits; write all run artifacts."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    prepared = prepare_windows(index, cfg)
    masks = frozenset(cfg["features"]["masks"])
    model = MixTokenModel(model_config_from(cfg))
    result = fit(
        model,
        prepared["windows"]["train"],
        prepared["windows"]["val"],
        train_config_from(cfg),
        masks=masks,
        quiet=quiet,
        log_fn=log_fn,
        threads=cfg.get("threads", 1),
    )
    (out_dir / "config.json").write_text(json.dumps(cfg, indent=1, sort_keys=True) + "\n")
    (out_dir / "run.json").write_text(
        json.dumps(
            {
                "version": f"wristgest-{__version__}",
                "seed": cfg["seed"],
                "parameter_count": model.parameter_count(),
                "best_epoch": result.best_epoch,
                "best_val_macro_f1": result.best_val_macro_f1,
            },
            indent=1,
            sort_keys=True,
        )
        + "\n"
    )
    model.save(out_dir / "checkpoint.bin")
    save_norm_stats(prepared["stats"], out_dir / "norm_stats.json")
    (out_dir / "history.json").write_text(
        json.dumps(result.history, indent=1, sort_keys=True) + "\n"
    )
    if result.history:
        from .plotting import plot_fusion_dynamics, plot_training_curves

        plot_fusion_dynamics(result.history, out_dir / "fusion_weights.svg")
        plot_training_curves(result.history, out_dir / "training_curves.svg")
    return {
        "model": model,
        "result": result,
        "stats": prepared["stats"],
        "prepared": prepared,
        "out_dir": out_dir,
    }


def load_run(run_dir) -> dict:
    """Reconstruct the model, config and stats persisted by run_training."""
    run_dir = Path(run_dir)
    cfg = json.loads((run_dir / "config.json").read_text())
    model = MixTokenModel.load(run_dir / "checkpoint.bin", model_config_from(cfg))
    stats = load_norm_stats(run_dir / "norm_stats.json")
    return {"model": model, "cfg": cfg, "stats": stats}


def run_evaluation(
    model: MixTokenModel,
    stats: NormStats,
    index: DatasetIndex,
    cfg: dict,
    split: str = "test",
    out_dir=None,
    formats=("json", "csv", "svg"),
    masks: Iterable[str] = (),
    history: list[dict] | None = None,
) -> dict:
    """Window- and clip-level reports for one split; optionally write them."""
    clips = index.load_split(split)
    if not clips:
        raise ValueError(f"split {split!r} has no clips")
    w = cfg["windowing"]["window"]
    stride = cfg["windowing"]["stride"]
    k = cfg["eval"]["k"]
    predictor = WindowPredictor(model, stats, masks)
    windows = []
    for clip in clips:
        windows.extend(window_clip(clip, w, stride))
    preds = predictor.predict(windows)
    truths = np.array([win.label.benchmark_id for win in windows])
    win_report = window_metrics(preds, truths, model.config.n_classes)
    clip_report = clip_metrics(predictor, clips, k=k, window=w, stride=stride)
    out = {"window": win_report, "clip": clip_report}
    if out_dir is not None:
        out_dir = Path(out_dir)
        emit_report(win_report, out_dir, formats, prefix="window_report")
        emit_report(clip_report, out_dir, formats, history=history, prefix="clip_report")
        summary = {
            "split": split,
            "k": k,
            "window": {"macro_f1": win_report.macro_f1, "accuracy": win_report.accuracy},
            "clip": {"macro_f1": clip_report.macro_f1, "accuracy": clip_report.accuracy},
        }
        (out_dir / "report.json").write_text(
            json.dumps(
                {**summary,
                 "window_full": win_report.to_dict(),
                 "clip_full": clip_report.to_dict()},
                indent=1,
                sort_keys=True,
            )
            + "\n"
        )
    return out


def run_ablation(
    index: DatasetIndex,
    cfg: dict,
    out_dir,
    masks=("time", "frequency", "cross", "shape", "transformer"),
    retrain: bool = False,
    quiet: bool = True,
) -> dict:
    """Train once (or per mask), evaluate each mask, write ablation.json."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    prepared = prepare_windows(index, cfg)
    test_clips = prepared["clips"]["test"]
    w = cfg["windowing"]["window"]
    stride = cfg["windowing"]["stride"]
    k = cfg["eval"]["k"]

    def train_fn(mask_set: frozenset) -> WindowPredictor:
        model = MixTokenModel(model_config_from(cfg))
        fit(
            model,
            prepared["windows"]["train"],
            prepared["windows"]["val"],
            train_config_from(cfg),
            masks=mask_set,
            quiet=quiet,
        )
        return WindowPredictor(model, prepared["stats"], mask_set)

    def eval_fn(predictor: WindowPredictor) -> dict:
        windows = []
        for clip in test_clips:
            windows.extend(window_clip(clip, w, stride))
        preds = predictor.predict(windows)
        truths = np.array([win.label.benchmark_id for win in windows])
        win_rep = window_metrics(preds, truths, predictor.model.config.n_classes)
        clip_rep = clip_metrics(predictor, test_clips, k=k, window=w, stride=stride)
        return {
            "window_macro_f1": win_rep.macro_f1,
            "clip_macro_f1": clip_rep.macro_f1,
        }

    results = ablate_features(train_fn, eval_fn, masks=masks, retrain=retrain)
    base = results["none"]
    for name, r in results.items():
        r["window_drop"] = base["window_macro_f1"] - r["window_macro_f1"]
        r["clip_drop"] = base["clip_macro_f1"] - r["clip_macro_f1"]
    (out_dir / "ablation.json").write_text(
        json.dumps(results, indent=1, sort_keys=True) + "\n"
    )
    return results
