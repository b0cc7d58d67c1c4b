"""Statistical feature tokens and the fixed band-pass filterbank.

Time, frequency and cross-channel descriptors are computed per window and
arranged into a fixed-order token sequence for the attention branch; the
filterbank produces per-channel frequency-band views for the conv branch.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy import signal

from .core import Window

DEFAULT_BANDS = ((0.1, 3.0), (3.0, 10.0), (10.0, 30.0))

TIME_FEATURE_NAMES = (
    "mean", "variance", "std", "min", "max", "range", "median", "q25", "q75",
    "iqr", "rms", "mad", "energy", "zcr", "autocorr_lag1", "autocorr_lag2",
    "skewness", "kurtosis", "hjorth_activity", "hjorth_mobility",
    "hjorth_complexity",
)
N_TIME_FEATURES = len(TIME_FEATURE_NAMES)

FREQ_FEATURE_BASE_NAMES = (
    "centroid", "entropy", "flux", "peak_freq", "low_band", "mid_band",
    "high_band", "rolloff_85", "flatness",
)
N_FREQ_BASE = len(FREQ_FEATURE_BASE_NAMES)

CROSS_PAIR_NAMES = ("pearson", "spearman", "cosine", "mutual_info")

#: Time-feature indices grouped as "shape descriptors" for the masking ablation.
SHAPE_FEATURE_INDICES = (
    TIME_FEATURE_NAMES.index("iqr"),
    TIME_FEATURE_NAMES.index("mad"),
    TIME_FEATURE_NAMES.index("skewness"),
    TIME_FEATURE_NAMES.index("kurtosis"),
)

MASK_GROUPS = ("time", "frequency", "cross", "shape")


@dataclass(frozen=True)
class FilterbankSpec:
    """Ordered band edges applied per channel with zero-phase filters."""

    bands: tuple[tuple[float, float], ...] = DEFAULT_BANDS
    order: int = 2  # per-section Butterworth order; bandpass doubles it

    def __post_init__(self):
        object.__setattr__(self, "bands", tuple((float(lo), float(hi)) for lo, hi in self.bands))
        if not self.bands:
            raise ValueError("filterbank needs at least one band")
        for lo, hi in self.bands:
            if not 0 < lo < hi:
                raise ValueError(f"invalid band ({lo}, {hi})")

    @property
    def n_bands(self) -> int:
        return len(self.bands)


def filterbank(window: Window, spec: FilterbankSpec, rate_hz: float = 100.0) -> np.ndarray:
    """Per-channel band decompositions, columns ordered channel-major.

    Output column (c * B + b) holds channel c filtered to band b.
    """
    x = window.samples
    return filterbank_array(x, spec, rate_hz)


def filterbank_array(x: np.ndarray, spec: FilterbankSpec, rate_hz: float) -> np.ndarray:
    from .segmentation import bandpass  # filter realization lives with segmentation

    t, c = x.shape
    out = np.empty((t, c * spec.n_bands), dtype=np.float64)
    for b, (lo, hi) in enumerate(spec.bands):
        filt = bandpass(x, lo, hi, rate_hz)
        out[:, b :: spec.n_bands] = filt
    return out


def filterbank_stack(x: np.ndarray, spec: FilterbankSpec, rate_hz: float) -> np.ndarray:
    """(T, C) -> (C, T, B) band views; model-facing layout."""
    t, c = x.shape
    flat = filterbank_array(x, spec, rate_hz)
    return flat.reshape(t, c, spec.n_bands).transpose(1, 0, 2)


def filterbank_batch(x: np.ndarray, spec: FilterbankSpec, rate_hz: float) -> np.ndarray:
    """(N, T, C) windows -> (N, C, T, B); identical math to per-window calls."""
    from .segmentation import bandpass

    n, t, c = x.shape
    out = np.empty((n, c, t, spec.n_bands), dtype=np.float64)
    for b, (lo, hi) in enumerate(spec.bands):
        filt = bandpass(x, lo, hi, rate_hz, axis=1)
        out[:, :, :, b] = filt.transpose(0, 2, 1)
    return out


def time_features(x: np.ndarray) -> np.ndarray:
    """The 21 time-domain descriptors in the order of TIME_FEATURE_NAMES.

    Degenerate-denominator statistics fall back to 0.
    """
    x = np.asarray(x, dtype=np.float64)
    w = x.shape[0]
    if w < 3:
        raise ValueError("time features need at least 3 samples")
    mean = x.mean()
    var = x.var()
    std = np.sqrt(var)
    mn, mx = x.min(), x.max()
    median = np.median(x)
    q25, q75 = np.percentile(x, [25, 75])
    iqr = q75 - q25
    rms = np.sqrt(np.mean(x**2))
    mad = np.median(np.abs(x - median))
    energy = float(np.sum(x**2))
    zcr = float(np.count_nonzero(x[:-1] * x[1:] < 0)) / (w - 1)

    xc = x - mean
    denom = float(np.sum(xc**2))
    if denom > 0:
        ac1 = float(np.sum(xc[:-1] * xc[1:])) / denom
        ac2 = float(np.sum(xc[:-2] * xc[2:])) / denom
        skew = float(np.mean(xc**3)) / var**1.5
        kurt = float(np.mean(xc**4)) / var**2 - 3.0
    else:
        ac1 = ac2 = skew = kurt = 0.0

    dx = np.diff(x)
    var_dx = dx.var()
    mobility = np.sqrt(var_dx / var) if var > 0 else 0.0
    if var_dx > 0 and mobility > 0:
        ddx = np.diff(dx)
        mobility_dx = np.sqrt(ddx.var() / var_dx)
        complexity = mobility_dx / mobility
    else:
        complexity = 0.0

    return np.array([
        mean, var, std, mn, mx, mx - mn, median, q25, q75, iqr, rms, mad,
        energy, zcr, ac1, ac2, skew, kurt, var, mobility, complexity,
    ])


def _power_spectrum(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """One-sided magnitude-squared spectrum of the mean-removed signal, DC excluded."""
    xc = x - x.mean()
    spec = np.fft.rfft(xc)
    p = np.abs(spec[1:]) ** 2
    return p, np.arange(1, p.shape[0] + 1, dtype=np.float64)


def freq_features(
    x: np.ndarray,
    rate_hz: float = 100.0,
    k_top: int = 3,
    bands: tuple[tuple[float, float], ...] = DEFAULT_BANDS,
) -> np.ndarray:
    """Spectral descriptors plus the top-k dominant bin frequencies.

    All-zero (constant) signals map to the all-zero vector.
    """
    x = np.asarray(x, dtype=np.float64)
    w = x.shape[0]
    if w < 4:
        raise ValueError("frequency features need at least 4 samples")
    p, bins = _power_spectrum(x)
    freqs = bins * rate_hz / w
    total = p.sum()
    n_out = N_FREQ_BASE + k_top
    if total <= 0:
        return np.zeros(n_out)

    pn = p / total
    centroid = float(np.sum(freqs * pn))
    nz = pn[pn > 0]
    entropy = float(-np.sum(nz * np.log(nz)) / np.log(p.shape[0])) if p.shape[0] > 1 else 0.0

    half = w // 2
    p1, _ = _power_spectrum(x[:half])
    p2, _ = _power_spectrum(x[half : 2 * half])
    s1 = p1 / p1.sum() if p1.sum() > 0 else p1
    s2 = p2 / p2.sum() if p2.sum() > 0 else p2
    flux = float(np.linalg.norm(s1 - s2))

    peak_freq = float(freqs[int(np.argmax(p))])

    band_fracs = []
    for lo, hi in bands:
        sel = (freqs >= lo) & (freqs < hi)
        band_fracs.append(float(p[sel].sum() / total))

    cum = np.cumsum(p)
    rolloff = float(freqs[int(np.searchsorted(cum, 0.85 * total))])

    flatness = float(np.exp(np.mean(np.log(p))) / np.mean(p)) if np.all(p > 0) else 0.0

    # Dominant bins by descending power; equal powers resolve to the lower bin.
    order = np.lexsort((bins, -p))
    top = freqs[order[:k_top]]
    if top.shape[0] < k_top:
        top = np.pad(top, (0, k_top - top.shape[0]))

    return np.concatenate([
        [centroid, entropy, flux, peak_freq],
        band_fracs,
        [rolloff, flatness],
        top,
    ])


def _average_ranks(x: np.ndarray) -> np.ndarray:
    """Ranks starting at 1; ties share the average rank."""
    order = np.argsort(x, kind="stable")
    ranks = np.empty(x.shape[0], dtype=np.float64)
    sx = x[order]
    i = 0
    while i < x.shape[0]:
        j = i
        while j + 1 < x.shape[0] and sx[j + 1] == sx[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    ac, bc = a - a.mean(), b - b.mean()
    denom = np.sqrt(np.sum(ac**2) * np.sum(bc**2))
    return float(np.sum(ac * bc) / denom) if denom > 0 else 0.0


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    ac, bc = a - a.mean(), b - b.mean()
    denom = np.linalg.norm(ac) * np.linalg.norm(bc)
    return float(np.dot(ac, bc) / denom) if denom > 0 else 0.0


def mutual_information(a: np.ndarray, b: np.ndarray, n_bins: int = 8) -> float:
    """Histogram MI estimate over an equal-width n_bins x n_bins grid, in nats."""
    joint, _, _ = np.histogram2d(a, b, bins=n_bins)
    n = joint.sum()
    if n == 0:
        return 0.0
    pj = joint / n
    pa = pj.sum(axis=1)
    pb = pj.sum(axis=0)
    mask = pj > 0
    outer = pa[:, None] * pb[None, :]
    return float(np.sum(pj[mask] * np.log(pj[mask] / outer[mask])))


def cross_features(window: np.ndarray, n_bins: int = 8) -> tuple[dict, np.ndarray]:
    """Pairwise similarity descriptors plus PCA explained-variance ratios.

    Returns ({(i, j): 4-vector}, ratios of the top min(C, 3) components).
    """
    x = np.asarray(window, dtype=np.float64)
    w, c = x.shape
    if c < 2:
        raise ValueError("cross features need at least 2 channels")
    pair_values: dict[tuple[int, int], np.ndarray] = {}
    ranks = [_average_ranks(x[:, i]) for i in range(c)]
    for i, j in combinations(range(c), 2):
        pair_values[(i, j)] = np.array([
            _pearson(x[:, i], x[:, j]),
            _pearson(ranks[i], ranks[j]),
            _cosine(x[:, i], x[:, j]),
            mutual_information(x[:, i], x[:, j], n_bins),
        ])
    cov = np.cov(x, rowvar=False, bias=True)
    eigvals = np.linalg.eigvalsh(cov)[::-1]
    eigvals = np.clip(eigvals, 0.0, None)
    total = eigvals.sum()
    n_keep = min(c, 3)
    if total > 0:
        ratios = eigvals[:n_keep] / total
    else:
        ratios = np.zeros(n_keep)
    return pair_values, ratios


@dataclass(frozen=True)
class FeatureToken:
    group: str  # time | frequency | cross | pca
    source: str  # channel name or "ch_i|ch_j" pair id
    values: np.ndarray


@dataclass(frozen=True)
class FeatureTokenSequence:
    """Fixed-order token list; masked groups are zero-filled, never dropped."""

    tokens: tuple[FeatureToken, ...]
    masks: frozenset[str] = frozenset()
    k_top: int = 3

    def __len__(self) -> int:
        return len(self.tokens)

    def to_array(self, width: int | None = None) -> np.ndarray:
        """(n_tokens, width) matrix, each token zero-padded on the right."""
        if width is None:
            width = max(t.values.shape[0] for t in self.tokens)
        out = np.zeros((len(self.tokens), width))
        for r, tok in enumerate(self.tokens):
            out[r, : tok.values.shape[0]] = tok.values
        return out


def token_count(n_channels: int) -> int:
    return 2 * n_channels + n_channels * (n_channels - 1) // 2 + 1


def token_width(k_top: int = 3) -> int:
    return max(N_TIME_FEATURES, N_FREQ_BASE + k_top, len(CROSS_PAIR_NAMES), 3)


def tokenize(
    window: Window,
    masks: frozenset[str] | set[str] | None = None,
    rate_hz: float = 100.0,
    k_top: int = 3,
    mi_bins: int = 8,
    bands: tuple[tuple[float, float], ...] = DEFAULT_BANDS,
    channel_names: tuple[str, ...] | None = None,
) -> FeatureTokenSequence:
    """Full token sequence for one (normalized) window.

    Order: time tokens per channel, frequency tokens per channel, cross
    tokens per lexicographic channel pair, one PCA token.
    """
    masks = frozenset(masks or ())
    unknown = masks - set(MASK_GROUPS)
    if unknown:
        raise ValueError(f"unknown mask group(s): {sorted(unknown)}")
    x = window.samples
    w, c = x.shape
    if channel_names is None:
        channel_names = tuple(f"ch{i}" for i in range(c))

    tokens: list[FeatureToken] = []
    for i in range(c):
        vals = time_features(x[:, i])
        if "time" in masks:
            vals = np.zeros_like(vals)
        elif "shape" in masks:
            vals = vals.copy()
            vals[list(SHAPE_FEATURE_INDICES)] = 0.0
        tokens.append(FeatureToken("time", channel_names[i], vals))
    for i in range(c):
        vals = freq_features(x[:, i], rate_hz, k_top, bands)
        if "frequency" in masks:
            vals = np.zeros_like(vals)
        tokens.append(FeatureToken("frequency", channel_names[i], vals))
    pair_values, pca_ratios = cross_features(x, mi_bins)
    for i, j in combinations(range(c), 2):
        vals = pair_values[(i, j)]
        if "cross" in masks:
            vals = np.zeros_like(vals)
        tokens.append(
            FeatureToken("cross", f"{channel_names[i]}|{channel_names[j]}", vals)
        )
    pca_vals = np.zeros_like(pca_ratios) if "cross" in masks else pca_ratios
    tokens.append(FeatureToken("pca", "all", pca_vals))
    return FeatureTokenSequence(tuple(tokens), masks, k_top)


def apply_masks_to_array(
    token_array: np.ndarray, masks, n_channels: int
) -> np.ndarray:
    """Zero the masked groups of a pre-tokenized (..., n_tokens, width) array."""
    masks = frozenset(masks or ())
    unknown = masks - set(MASK_GROUPS)
    if unknown:
        raise ValueError(f"unknown mask group(s): {sorted(unknown)}")
    if not masks:
        return token_array
    out = token_array.copy()
    c = n_channels
    n_pairs = c * (c - 1) // 2
    if "time" in masks:
        out[..., 0:c, :] = 0.0
    elif "shape" in masks:
        for idx in SHAPE_FEATURE_INDICES:
            out[..., 0:c, idx] = 0.0
    if "frequency" in masks:
        out[..., c : 2 * c, :] = 0.0
    if "cross" in masks:
        out[..., 2 * c : 2 * c + n_pairs + 1, :] = 0.0
    return out
