"""Matplotlib renderers for evaluation artifacts (headless, deterministic SVG)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

# Deterministic SVG output: fixed hash salt, no embedded creation date.
matplotlib.rcParams["svg.hashsalt"] = "wristgest"
_SAVEFIG_KW = {"metadata": {"Date": None}}


def plot_confusion_heatmap(report, path) -> Path:
    """Row-normalized confusion heatmap with per-cell annotations."""
    from .evaluation import row_normalize

    path = Path(path)
    norm = row_normalize(report.confusion)
    n = norm.shape[0]
    fig, ax = plt.subplots(figsize=(1.0 + 0.9 * n, 0.8 + 0.9 * n))
    im = ax.imshow(norm, cmap="Blues", vmin=0.0, vmax=1.0)
    ax.set_xticks(range(n), report.class_names, rotation=45, ha="right")
    ax.set_yticks(range(n), report.class_names)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    ax.set_title(f"{report.level}-level confusion (row-normalized)")
    for i in range(n):
        for j in range(n):
            if norm[i, j] > 0:
                ax.text(
                    j, i, f"{norm[i, j]:.2f}", ha="center", va="center",
                    fontsize=8, color="white" if norm[i, j] > 0.5 else "black",
                )
    fig.colorbar(im, ax=ax, fraction=0.046)
    fig.tight_layout()
    fig.savefig(path, **_SAVEFIG_KW)
    plt.close(fig)
    return path


def plot_fusion_dynamics(history: list[dict], path) -> Path:
    """Per-epoch trajectory of the three fusion weights."""
    path = Path(path)
    epochs = [h["epoch"] for h in history]
    pis = np.array([h["pi"] for h in history])
    fig, ax = plt.subplots(figsize=(6, 4))
    for i, label in enumerate(("conv head", "attention head", "joint head")):
        ax.plot(epochs, pis[:, i], marker="o", markersize=3, label=label)
    ax.set_xlabel("epoch")
    ax.set_ylabel("fusion weight")
    ax.set_ylim(0, 1)
    ax.set_title("fusion-weight dynamics")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, **_SAVEFIG_KW)
    plt.close(fig)
    return path


def plot_training_curves(history: list[dict], path) -> Path:
    """Train loss and validation macro-F1 over epochs."""
    path = Path(path)
    epochs = [h["epoch"] for h in history]
    fig, ax1 = plt.subplots(figsize=(6, 4))
    ax1.plot(epochs, [h["train_loss"] for h in history], color="tab:blue", label="train loss")
    ax1.set_xlabel("epoch")
    ax1.set_ylabel("train loss", color="tab:blue")
    ax2 = ax1.twinx()
    ax2.plot(
        epochs, [h["val_macro_f1"] for h in history], color="tab:orange", label="val macro-F1"
    )
    ax2.set_ylabel("val macro-F1", color="tab:orange")
    ax2.set_ylim(0, 1.05)
    fig.tight_layout()
    fig.savefig(path, **_SAVEFIG_KW)
    plt.close(fig)
    return path
