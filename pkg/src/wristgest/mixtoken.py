"""Two-branch gesture classifier with learned convex logit fusion.

A weight-shared residual conv stack reads per-channel filterbank views; a
transformer encoder with attention pooling reads the statistical token
sequence. Three heads (conv, attention, joint) are combined through
softmax-normalized fusion weights. Training uses AdamW with decoupled
weight decay, exponential LR decay, elementwise gradient clipping and
early stopping on validation macro-F1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import nn
from .core import NormStats, Window, apply_norm
from .features import (
    DEFAULT_BANDS,
    FeatureTokenSequence,
    FilterbankSpec,
    apply_masks_to_array,
    filterbank_batch,
    token_count,
    token_width,
    tokenize,
)

#: Nominal trainable-parameter budget of the default configuration.
PARAM_BUDGET = 223_000


@dataclass(frozen=True)
class MixTokenConfig:
    n_classes: int = 6
    n_channels: int = 6  # IMU channels; set 7 to include PPG
    cnn_widths: tuple[int, ...] = (32, 48, 64)
    cnn_kernel: int = 5
    d_model: int = 64
    n_heads: int = 4
    n_layers: int = 2
    ff_dim: int = 128
    head_hidden: int = 128
    dropout: float = 0.1
    fusion_init: tuple[float, float, float] = (0.0, 0.0, 0.0)
    bands: tuple[tuple[float, float], ...] = DEFAULT_BANDS
    k_top: int = 3
    mi_bins: int = 8
    sample_rate_hz: float = 100.0
    dtype: str = "float64"  # precision switch: float64 | float32
    seed: int = 42

    def __post_init__(self):
        if self.d_model % self.n_heads != 0:
            raise ValueError("d_model must be divisible by n_heads")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        if self.dtype not in ("float64", "float32"):
            raise ValueError("dtype must be float64 or float32")

    @property
    def n_bands(self) -> int:
        return len(self.bands)

    @property
    def n_tokens(self) -> int:
        return token_count(self.n_channels)

    @property
    def token_width(self) -> int:
        return token_width(self.k_top)

    @property
    def filterbank(self) -> FilterbankSpec:
        return FilterbankSpec(self.bands)

    @property
    def np_dtype(self):
        return np.float64 if self.dtype == "float64" else np.float32


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    weight_decay: float = 1e-3
    lr_decay: float = 0.97  # per-epoch exponential factor
    clip_value: float = 1.0  # elementwise gradient clip
    batch_size: int = 16
    max_epochs: int = 100
    patience: int = 5
    seed: int = 42
    class_weighting: str = "inverse_frequency"  # or "none"
    aux_head_losses: bool = False

    def __post_init__(self):
        if min(self.lr, self.weight_decay, self.lr_decay, self.clip_value) <= 0:
            raise ValueError("lr, weight_decay, lr_decay and clip_value must be positive")
        if self.patience < 1 or self.batch_size < 1 or self.max_epochs < 0:
            raise ValueError("invalid patience/batch_size/max_epochs")
        if self.class_weighting not in ("inverse_frequency", "none"):
            raise ValueError(f"unknown class_weighting {self.class_weighting!r}")


class MixTokenModel:
    """Parameter container plus the forward graph of both branches."""

    def __init__(self, config: MixTokenConfig):
        self.config = config
        self.params: dict[str, nn.Tensor] = {}
        rng = np.random.default_rng(config.seed)
        dt = config.np_dtype

        def uniform(name, shape, fan_in):
            bound = 1.0 / math.sqrt(fan_in)
            data = rng.uniform(-bound, bound, shape).astype(dt)
            self.params[name] = nn.Tensor(data, requires_grad=True)

        def const(name, shape, value):
            data = np.full(shape, value, dtype=dt)
            self.params[name] = nn.Tensor(data, requires_grad=True)

        k = config.cnn_kernel
        in_ch = config.n_bands
        for i, width in enumerate(config.cnn_widths):
            uniform(f"cnn.b{i}.conv.w", (k, in_ch, width), k * in_ch)
            uniform(f"cnn.b{i}.conv.b", (width,), k * in_ch)
            if in_ch != width:
                uniform(f"cnn.b{i}.skip.w", (1, in_ch, width), in_ch)
                uniform(f"cnn.b{i}.skip.b", (width,), in_ch)
            in_ch = width
        self.cnn_embed_dim = config.n_channels * config.cnn_widths[-1]

        tw, d = config.token_width, config.d_model
        uniform("tok.proj.w", (tw, d), tw)
        uniform("tok.proj.b", (d,), tw)
        uniform("tok.pos", (config.n_tokens, d), d)
        for layer in range(config.n_layers):
            pre = f"enc.l{layer}"
            const(f"{pre}.ln1.g", (d,), 1.0)
            const(f"{pre}.ln1.b", (d,), 0.0)
            for mat in ("q", "k", "v", "o"):
                uniform(f"{pre}.attn.w{mat}", (d, d), d)
                uniform(f"{pre}.attn.b{mat}", (d,), d)
            const(f"{pre}.ln2.g", (d,), 1.0)
            const(f"{pre}.ln2.b", (d,), 0.0)
            uniform(f"{pre}.ff.w1", (d, config.ff_dim), d)
            uniform(f"{pre}.ff.b1", (config.ff_dim,), d)
            uniform(f"{pre}.ff.w2", (config.ff_dim, d), config.ff_dim)
            uniform(f"{pre}.ff.b2", (d,), config.ff_dim)
        const("enc.ln_out.g", (d,), 1.0)
        const("enc.ln_out.b", (d,), 0.0)
        uniform("pool.key.w", (d, d), d)
        uniform("pool.key.b", (d,), d)
        uniform("pool.query", (d, 1), d)

        def head(name, in_dim):
            uniform(f"{name}.w1", (in_dim, config.head_hidden), in_dim)
            uniform(f"{name}.b1", (config.head_hidden,), in_dim)
            uniform(f"{name}.w2", (config.head_hidden, config.n_classes), config.head_hidden)
            uniform(f"{name}.b2", (config.n_classes,), config.head_hidden)

        head("head.cnn", self.cnn_embed_dim)
        head("head.attn", d)
        head("head.fused", self.cnn_embed_dim + d)
        self.params["fusion.w"] = nn.Tensor(
            np.asarray(config.fusion_init, dtype=dt), requires_grad=True
        )

    def parameter_count(self) -> int:
        return sum(p.data.size for p in self.params.values())

    # ------------------------------------------------------------------
    # forward pieces
    # ------------------------------------------------------------------
    def _head(self, name: str, x: nn.Tensor, train: bool, rng) -> nn.Tensor:
        p = self.params
        h = nn.gelu(nn.dense(x, p[f"{name}.w1"], p[f"{name}.b1"]))
        h = nn.dropout(h, self.config.dropout, train, rng)
        return nn.dense(h, p[f"{name}.w2"], p[f"{name}.b2"])

    def _cnn_forward(self, fb: nn.Tensor, train: bool, rng) -> tuple[nn.Tensor, nn.Tensor]:
        """fb: (B, C, W, n_bands) -> (e_cnn (B, C*width), logits (B, K))."""
        cfg = self.config
        b, c = fb.data.shape[0], fb.data.shape[1]
        w = fb.data.shape[2]
        x = nn.reshape(fb, (b * c, w, cfg.n_bands))
        in_ch = cfg.n_bands
        for i, width in enumerate(cfg.cnn_widths):
            conv = nn.conv1d(x, self.params[f"cnn.b{i}.conv.w"], self.params[f"cnn.b{i}.conv.b"])
            if in_ch != width:
                skip = nn.conv1d(x, self.params[f"cnn.b{i}.skip.w"], self.params[f"cnn.b{i}.skip.b"])
            else:
                skip = x
            x = nn.relu(nn.add(conv, skip))
            in_ch = width
        pooled = nn.global_mean_pool(x)  # (B*C, width)
        e_cnn = nn.reshape(pooled, (b, self.cnn_embed_dim))
        return e_cnn, self._head("head.cnn", e_cnn, train, rng)

    def _encoder_layer(self, h: nn.Tensor, layer: int) -> nn.Tensor:
        cfg, p = self.config, self.params
        pre = f"enc.l{layer}"
        b, t, d = h.data.shape
        nh, dh = cfg.n_heads, cfg.d_model // cfg.n_heads

        x = nn.layernorm(h, p[f"{pre}.ln1.g"], p[f"{pre}.ln1.b"])

        def split_heads(m):
            return nn.transpose(nn.reshape(m, (b, t, nh, dh)), (0, 2, 1, 3))

        q = split_heads(nn.dense(x, p[f"{pre}.attn.wq"], p[f"{pre}.attn.bq"]))
        kk = split_heads(nn.dense(x, p[f"{pre}.attn.wk"], p[f"{pre}.attn.bk"]))
        v = split_heads(nn.dense(x, p[f"{pre}.attn.wv"], p[f"{pre}.attn.bv"]))
        att, _ = nn.scaled_dot_product_attention(q, kk, v)
        att = nn.reshape(nn.transpose(att, (0, 2, 1, 3)), (b, t, d))
        h = nn.add(h, nn.dense(att, p[f"{pre}.attn.wo"], p[f"{pre}.attn.bo"]))

        x = nn.layernorm(h, p[f"{pre}.ln2.g"], p[f"{pre}.ln2.b"])
        ff = nn.dense(nn.gelu(nn.dense(x, p[f"{pre}.ff.w1"], p[f"{pre}.ff.b1"])),
                      p[f"{pre}.ff.w2"], p[f"{pre}.ff.b2"])
        return nn.add(h, ff)

    def _stat_forward(
        self, tokens: nn.Tensor, train: bool, rng
    ) -> tuple[nn.Tensor, nn.Tensor, nn.Tensor]:
        """tokens: (B, n_tokens, token_width) -> (e_attn, logits, pool weights)."""
        cfg, p = self.config, self.params
        if tokens.data.shape[1] != cfg.n_tokens:
            raise ValueError(
                f"token count {tokens.data.shape[1]} does not match the positional "
                f"table ({cfg.n_tokens})"
            )
        h = nn.add(nn.dense(tokens, p["tok.proj.w"], p["tok.proj.b"]), p["tok.pos"])
        for layer in range(cfg.n_layers):
            h = self._encoder_layer(h, layer)
        h = nn.layernorm(h, p["enc.ln_out.g"], p["enc.ln_out.b"])
        keys = nn.dense(h, p["pool.key.w"], p["pool.key.b"])  # (B, T, d)
        scores = nn.scale(nn.matmul(keys, p["pool.query"]), 1.0 / math.sqrt(cfg.d_model))
        weights = nn.softmax(scores, axis=1)  # (B, T, 1), sums to 1 over tokens
        e_attn = nn.tsum(nn.mul(weights, h), axis=1)  # (B, d)
        return e_attn, self._head("head.attn", e_attn, train, rng), weights

    def _fused_forward(self, e_cnn: nn.Tensor, e_attn: nn.Tensor, train: bool, rng) -> nn.Tensor:
        joint = nn.concat([e_cnn, e_attn], axis=-1)
        return self._head("head.fused", joint, train, rng)

    def forward(
        self,
        fb: np.ndarray,
        tokens: np.ndarray,
        train: bool = False,
        rng: np.random.Generator | None = None,
        cnn_only: bool = False,
    ) -> dict[str, nn.Tensor]:
        """Full graph over a batch; returns every head plus the fused output."""
        dt = self.config.np_dtype
        fb_t = nn.Tensor(np.asarray(fb, dtype=dt))
        e_cnn, y_cnn = self._cnn_forward(fb_t, train, rng)
        if cnn_only:
            # Stat branch detached: fusion collapses onto the conv head.
            return {"y_cnn": y_cnn, "y": y_cnn, "e_cnn": e_cnn,
                    "pi": nn.Tensor(np.array([1.0, 0.0, 0.0], dtype=dt))}
        tok_t = nn.Tensor(np.asarray(tokens, dtype=dt))
        e_attn, y_attn, pool_w = self._stat_forward(tok_t, train, rng)
        y_fused = self._fused_forward(e_cnn, e_attn, train, rng)
        pi = nn.softmax(self.params["fusion.w"], axis=-1)
        y = fuse_tensors(y_cnn, y_attn, y_fused, pi)
        return {
            "y_cnn": y_cnn, "y_attn": y_attn, "y_fused": y_fused, "y": y,
            "pi": pi, "e_cnn": e_cnn, "e_attn": e_attn, "pool_weights": pool_w,
        }

    # ------------------------------------------------------------------
    # single-window convenience ops
    # ------------------------------------------------------------------
    def cnn_branch(self, window: Window) -> tuple[np.ndarray, np.ndarray]:
        """(embedding, logits) of the conv branch for one normalized window."""
        fb, _ = featurize_windows([window], self.config)
        fb_t = nn.Tensor(fb.astype(self.config.np_dtype))
        e, y = self._cnn_forward(fb_t, train=False, rng=None)
        return e.data[0], y.data[0]

    def stat_branch(self, tokens: FeatureTokenSequence) -> tuple[np.ndarray, np.ndarray]:
        """(embedding, logits) of the attention branch for one token sequence."""
        arr = tokens.to_array(self.config.token_width)[None, :, :]
        tok_t = nn.Tensor(arr.astype(self.config.np_dtype))
        e, y, _ = self._stat_forward(tok_t, train=False, rng=None)
        return e.data[0], y.data[0]

    def fused_head(self, e_cnn: np.ndarray, e_attn: np.ndarray) -> np.ndarray:
        """Joint-head logits from the two embeddings."""
        ec = nn.Tensor(np.atleast_2d(np.asarray(e_cnn, dtype=self.config.np_dtype)))
        ea = nn.Tensor(np.atleast_2d(np.asarray(e_attn, dtype=self.config.np_dtype)))
        out = self._fused_forward(ec, ea, train=False, rng=None)
        return out.data[0]

    # ------------------------------------------------------------------
    # parameter state
    # ------------------------------------------------------------------
    def state_arrays(self) -> dict[str, np.ndarray]:
        return {k: v.data.copy() for k, v in self.params.items()}

    def load_state_arrays(self, state: dict[str, np.ndarray]) -> None:
        for k, p in self.params.items():
            if k not in state:
                raise KeyError(f"missing parameter {k!r} in state")
            arr = np.asarray(state[k], dtype=p.data.dtype)
            if arr.shape != p.data.shape:
                raise ValueError(f"parameter {k!r}: shape {arr.shape} != {p.data.shape}")
            p.data = arr.copy()

    def save(self, path) -> None:
        nn.save_checkpoint(self.params, path)

    @classmethod
    def load(cls, path, config: MixTokenConfig) -> "MixTokenModel":
        model = cls(config)
        model.load_state_arrays(nn.load_checkpoint(path))
        return model


def fuse_tensors(y_cnn: nn.Tensor, y_attn: nn.Tensor, y_fused: nn.Tensor, pi: nn.Tensor) -> nn.Tensor:
    """Convex combination of the three heads inside the autodiff graph."""
    parts = [
        nn.mul(y_cnn, nn.take(pi, 0)),
        nn.mul(y_attn, nn.take(pi, 1)),
        nn.mul(y_fused, nn.take(pi, 2)),
    ]
    return nn.add(nn.add(parts[0], parts[1]), parts[2])


def fuse(y_cnn, y_attn, y_fused, w) -> tuple[np.ndarray, np.ndarray]:
    """softmax(w)-weighted sum of three logit vectors; returns (fused, pi)."""
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (3,):
        raise ValueError(f"fusion weights must be a 3-vector, got shape {w.shape}")
    e = np.exp(w - w.max())
    pi = e / e.sum()
    arrs = [np.asarray(a, dtype=np.float64) for a in (y_cnn, y_attn, y_fused)]
    if not (arrs[0].shape == arrs[1].shape == arrs[2].shape):
        raise ValueError("the three logit vectors must share a shape")
    return pi[0] * arrs[0] + pi[1] * arrs[1] + pi[2] * arrs[2], pi


def featurize_windows(
    windows: Sequence[Window],
    cfg: MixTokenConfig,
    masks: Iterable[str] = (),
    threads: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """(filterbank views (N, C, W, B), token array (N, T, width)) for a batch.

    Windows are cropped to the model's channel count (IMU-only by default).
    Batched filtering and thread-parallel tokenization are result-identical
    to the per-window operations.
    """
    masks = frozenset(masks)
    n = len(windows)
    if n == 0:
        raise ValueError("no windows to featurize")
    c = cfg.n_channels
    raw = np.stack([w.samples[:, :c] for w in windows])
    fb = filterbank_batch(raw, cfg.filterbank, cfg.sample_rate_hz)

    def one(w: Window) -> np.ndarray:
        seq = tokenize(
            Window(w.samples[:, :c], w.label, w.clip_ref, w.start_index),
            masks=masks,
            rate_hz=cfg.sample_rate_hz,
            k_top=cfg.k_top,
            mi_bins=cfg.mi_bins,
            bands=cfg.bands,
        )
        return seq.to_array(cfg.token_width)

    tok = np.zeros((n, cfg.n_tokens, cfg.token_width))
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            for i, arr in enumerate(pool.map(one, windows)):
                tok[i] = arr
    else:
        for i, w in enumerate(windows):
            tok[i] = one(w)
    return fb, tok


def inverse_frequency_weights(labels: np.ndarray, n_classes: int) -> np.ndarray:
    """w_k proportional to 1/count_k, normalized to mean 1 over present classes."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise ValueError(
            f"labels span {labels.min()}..{labels.max()} but the model has "
            f"{n_classes} classes"
        )
    counts = np.bincount(labels, minlength=n_classes)
    w = np.zeros(n_classes, dtype=np.float64)
    present = counts > 0
    w[present] = 1.0 / counts[present]
    w[present] *= present.sum() / w[present].sum()
    return w


@dataclass
class FitResult:
    model: MixTokenModel
    history: list[dict]
    best_epoch: int | None = None
    best_val_macro_f1: float | None = None


def _predict_logits(
    model: MixTokenModel, fb: np.ndarray, tok: np.ndarray, batch_size: int = 64
) -> np.ndarray:
    outs = []
    for i in range(0, fb.shape[0], batch_size):
        out = model.forward(fb[i : i + batch_size], tok[i : i + batch_size], train=False)
        outs.append(out["y"].data)
    return np.concatenate(outs, axis=0)


def fit(
    model: MixTokenModel,
    train_windows: Sequence[Window],
    val_windows: Sequence[Window],
    cfg: TrainConfig,
    masks: Iterable[str] = (),
    quiet: bool = True,
    log_fn: Callable[[dict], None] | None = None,
    threads: int = 1,
) -> FitResult:
    """Mini-batch AdamW training with early stopping on validation macro-F1.

    Per-epoch history records train loss, validation macro-F1 and the fusion
    weights pi; the best-epoch parameters are restored at the end.
    """
    from .evaluation import window_metrics

    if not train_windows or not val_windows:
        raise ValueError("empty train or validation split")
    mcfg = model.config
    fb_tr, tok_tr = featurize_windows(train_windows, mcfg, masks, threads=threads)
    fb_va, tok_va = featurize_windows(val_windows, mcfg, masks, threads=threads)
    y_tr = np.array([w.label.benchmark_id for w in train_windows], dtype=np.int64)
    y_va = np.array([w.label.benchmark_id for w in val_windows], dtype=np.int64)

    if cfg.class_weighting == "inverse_frequency":
        class_w = inverse_frequency_weights(y_tr, mcfg.n_classes)
    else:
        class_w = None

    history: list[dict] = []
    result = FitResult(model=model, history=history)
    if cfg.max_epochs == 0:
        return result

    rng = np.random.default_rng(cfg.seed)
    adam_m = {k: np.zeros_like(p.data, dtype=np.float64) for k, p in model.params.items()}
    adam_v = {k: np.zeros_like(p.data, dtype=np.float64) for k, p in model.params.items()}
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    step = 0
    best_f1 = -1.0
    best_state: dict[str, np.ndarray] | None = None
    best_epoch = -1
    stale = 0

    n = fb_tr.shape[0]
    for epoch in range(cfg.max_epochs):
        lr = cfg.lr * (cfg.lr_decay**epoch)
        order = rng.permutation(n)
        total_loss = 0.0
        n_batches = 0
        for lo in range(0, n, cfg.batch_size):
            idx = order[lo : lo + cfg.batch_size]
            out = model.forward(fb_tr[idx], tok_tr[idx], train=True, rng=rng)
            loss = nn.cross_entropy(out["y"], y_tr[idx], class_w)
            if cfg.aux_head_losses:
                for head in ("y_cnn", "y_attn", "y_fused"):
                    loss = nn.add(loss, nn.scale(
                        nn.cross_entropy(out[head], y_tr[idx], class_w), 1.0 / 3.0))
            for p in model.params.values():
                p.zero_grad()
            nn.backward(loss)
            step += 1
            bc1 = 1.0 - beta1**step
            bc2 = 1.0 - beta2**step
            for k, p in model.params.items():
                g = p.grad
                if g is None:
                    g = np.zeros_like(p.data)
                g = np.clip(g.astype(np.float64), -cfg.clip_value, cfg.clip_value)
                adam_m[k] = beta1 * adam_m[k] + (1 - beta1) * g
                adam_v[k] = beta2 * adam_v[k] + (1 - beta2) * g * g
                update = (adam_m[k] / bc1) / (np.sqrt(adam_v[k] / bc2) + eps)
                # Decoupled weight decay: applied to the parameter directly.
                p.data = (
                    p.data.astype(np.float64)
                    - lr * update
                    - lr * cfg.weight_decay * p.data.astype(np.float64)
                ).astype(p.data.dtype)
            total_loss += float(loss.data)
            n_batches += 1

        val_logits = _predict_logits(model, fb_va, tok_va)
        val_pred = np.argmax(val_logits, axis=1)
        report = window_metrics(val_pred, y_va, mcfg.n_classes)
        pi = np.exp(model.params["fusion.w"].data - model.params["fusion.w"].data.max())
        pi = pi / pi.sum()
        record = {
            "epoch": epoch,
            "train_loss": total_loss / max(n_batches, 1),
            "val_macro_f1": report.macro_f1,
            "pi": [float(v) for v in pi],
            "lr": lr,
        }
        history.append(record)
        if log_fn is not None:
            log_fn(record)

        if report.macro_f1 > best_f1:
            best_f1 = report.macro_f1
            best_epoch = epoch
            best_state = model.state_arrays()
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience:
                break

    if best_state is not None:
        model.load_state_arrays(best_state)
        result.best_epoch = best_epoch
        result.best_val_macro_f1 = best_f1
    return result


class WindowPredictor:
    """Frozen model plus normalization stats and optional feature masks."""

    def __init__(
        self,
        model: MixTokenModel,
        stats: NormStats,
        masks: Iterable[str] = (),
        cnn_only: bool = False,
    ):
        self.model = model
        self.stats = stats
        self.masks = frozenset(masks)
        self.cnn_only = cnn_only

    def logits(self, windows: Sequence[Window]) -> np.ndarray:
        normed = [apply_norm(w, self.stats) for w in windows]
        fb, tok = featurize_windows(normed, self.model.config, self.masks)
        outs = []
        for i in range(0, fb.shape[0], 64):
            out = self.model.forward(
                fb[i : i + 64], tok[i : i + 64], train=False, cnn_only=self.cnn_only
            )
            outs.append(out["y"].data)
        return np.concatenate(outs, axis=0)

    def predict(self, windows: Sequence[Window]) -> np.ndarray:
        return np.argmax(self.logits(windows), axis=1)


ABLATION_MASKS = ("time", "frequency", "cross", "shape", "transformer")


def ablate_features(
    train_fn: Callable[[frozenset[str]], WindowPredictor],
    eval_fn: Callable[[WindowPredictor], dict],
    masks: Sequence[str] = ABLATION_MASKS,
    retrain: bool = False,
) -> dict[str, dict]:
    """Per-mask metrics for the feature-group masking study.

    ``train_fn(masks)`` returns a predictor trained under those masks;
    ``eval_fn(predictor)`` maps it to metrics. With ``retrain=False`` the
    unmasked model is trained once and re-evaluated under each mask;
    ``"transformer"`` removes the attention branch by collapsing the fusion
    onto the conv head.
    """
    for m in masks:
        if m not in ABLATION_MASKS:
            raise ValueError(f"unknown ablation mask {m!r}")
    results: dict[str, dict] = {}
    base = train_fn(frozenset())
    results["none"] = eval_fn(base)
    for m in masks:
        if retrain and m != "transformer":
            pred = train_fn(frozenset({m}))
        elif m == "transformer":
            pred = WindowPredictor(base.model, base.stats, base.masks, cnn_only=True)
        else:
            pred = WindowPredictor(base.model, base.stats, frozenset({m}))
        results[m] = eval_fn(pred)
    return results
