"""Training-set augmentation: wrist mirroring, signal perturbations, walking overlay.

Every transform is deterministic under a supplied seed; per-clip RNG streams
are derived from (seed, clip index) so clip-parallel execution stays
schedule-independent. All transforms run before normalization.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import signal as sps

from .core import IMU_CHANNELS, SensorClip, Window

#: Channels negated by the sagittal-plane reflection.
MIRROR_CHANNELS = ("acc_x", "gyro_x", "gyro_z")


@dataclass(frozen=True)
class AugConfig:
    scale_range: tuple[float, float] = (0.8, 1.2)
    warp_strength: float = 0.1
    noise_amp: float = 0.05  # in per-channel signal std units
    noise_cutoff_hz: float = 2.0
    alpha_range: tuple[float, float] = (0.3, 1.0)
    beta_range: tuple[float, float] = (0.3, 1.0)
    seed: int = 0
    mirror: bool = True
    perturb_copies: int = 0
    overlay_copies: int = 0

    def __post_init__(self):
        for name in ("scale_range", "alpha_range", "beta_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name} must be ordered, got ({lo}, {hi})")
        if self.warp_strength < 0 or self.noise_amp < 0:
            raise ValueError("warp_strength and noise_amp must be >= 0")
        if self.perturb_copies < 0 or self.overlay_copies < 0:
            raise ValueError("augmentation copy counts must be >= 0")


@dataclass(frozen=True)
class WalkBank:
    """Non-overlapping walking segments used by the locomotion overlay."""

    segments: tuple[np.ndarray, ...]  # each (L_w, 6)
    segment_len: int

    def __post_init__(self):
        if self.segment_len < 1:
            raise ValueError("segment length must be >= 1")
        segs = []
        for s in self.segments:
            arr = np.asarray(s, dtype=np.float64)
            if arr.shape != (self.segment_len, 6):
                raise ValueError(
                    f"walk segments must be ({self.segment_len}, 6), got {arr.shape}"
                )
            if not np.all(np.isfinite(arr)):
                raise ValueError("walk segment contains NaN or Inf")
            arr = arr.copy()
            arr.setflags(write=False)
            segs.append(arr)
        object.__setattr__(self, "segments", tuple(segs))

    def __len__(self) -> int:
        return len(self.segments)

    @classmethod
    def from_recording(cls, samples: np.ndarray, segment_len: int = 500) -> "WalkBank":
        """Partition a continuous (T, >=6) recording into full-length segments."""
        imu = np.asarray(samples, dtype=np.float64)[:, :6]
        n = imu.shape[0] // segment_len
        if n == 0:
            raise ValueError(
                f"recording of {imu.shape[0]} samples yields no segment of {segment_len}"
            )
        segs = [imu[i * segment_len : (i + 1) * segment_len] for i in range(n)]
        return cls(tuple(segs), segment_len)


def mirror_wrist(clip: SensorClip) -> SensorClip:
    """Negate acc_x / gyro_x / gyro_z and flip the wrist flag."""
    names = clip.layout.names
    if tuple(names[:6]) != IMU_CHANNELS:
        raise ValueError("mirroring needs the canonical IMU channel order")
    out = clip.samples.copy()
    for ch in MIRROR_CHANNELS:
        out[:, names.index(ch)] = -out[:, names.index(ch)]
    wrist = {"left": "right", "right": "left"}.get(clip.wrist, clip.wrist)
    return clip.with_samples(out, wrist=wrist)


def sample_warp_path(length: int, strength: float, rng: np.random.Generator, knots: int = 4) -> np.ndarray:
    """Strictly increasing reparameterization tau with max |tau(t) - t| <= strength * length.

    Piecewise-linear displacement anchored at zero on both ends; rescaled if
    any segment slope would break monotonicity.
    """
    t = np.arange(length, dtype=np.float64)
    if strength == 0 or length < 3:
        return t
    grid = np.linspace(0, length - 1, knots + 2)
    disp = np.zeros(knots + 2)
    disp[1:-1] = rng.uniform(-1.0, 1.0, knots) * strength * length
    gap = grid[1] - grid[0]
    max_slope = np.max(np.abs(np.diff(disp))) / gap
    if max_slope >= 1.0:
        disp *= 0.95 / max_slope
    tau = t + np.interp(t, grid, disp)
    tau = np.clip(tau, 0.0, length - 1)
    tau[0], tau[-1] = 0.0, length - 1
    return tau


def _perturb_with_params(
    x: np.ndarray, cfg: AugConfig, rng: np.random.Generator
) -> tuple[np.ndarray, dict]:
    x = np.asarray(x, dtype=np.float64)
    t, c = x.shape
    s = rng.uniform(*cfg.scale_range)
    out = x * s
    params = {"scale": float(s)}
    if cfg.warp_strength > 0:
        tau = sample_warp_path(t, cfg.warp_strength, rng)
        grid = np.arange(t, dtype=np.float64)
        warped = np.empty_like(out)
        for ch in range(c):
            warped[:, ch] = np.interp(tau, grid, out[:, ch])
        out = warped
        params["warp_strength"] = cfg.warp_strength
    if cfg.noise_amp > 0:
        noise = rng.standard_normal((t, c))
        nyq = 50.0  # canonical 100 Hz streams
        cutoff = min(cfg.noise_cutoff_hz, 0.9 * nyq)
        sos = sps.butter(2, cutoff, btype="lowpass", fs=2 * nyq, output="sos")
        padlen = min(9, t - 1)
        noise = sps.sosfiltfilt(sos, noise, axis=0, padlen=padlen)
        nstd = noise.std(axis=0)
        nstd[nstd == 0] = 1.0
        noise = noise / nstd
        target = cfg.noise_amp * x.std(axis=0)
        out = out + noise * target
        params["noise_amp"] = cfg.noise_amp
    return out, params


def perturb_samples(x: np.ndarray, cfg: AugConfig, rng: np.random.Generator) -> np.ndarray:
    """Scale, then monotone time-warp, then additive smooth low-frequency noise."""
    out, _ = _perturb_with_params(x, cfg, rng)
    return out


def perturb(window: Window, cfg: AugConfig, rng: np.random.Generator) -> Window:
    """Signal-space perturbation of one pre-normalization window."""
    return window.with_samples(perturb_samples(window.samples, cfg, rng))


def _overlay_with_params(
    clip: SensorClip,
    bank: WalkBank,
    cfg: AugConfig,
    rng: np.random.Generator,
) -> tuple[SensorClip, dict]:
    if len(bank) == 0:
        raise ValueError("walk bank is empty")
    names = clip.layout.names
    if tuple(names[:6]) != IMU_CHANNELS:
        raise ValueError("walking overlay needs the canonical IMU channel order")
    seg_idx = int(rng.integers(0, len(bank)))
    seg = bank.segments[seg_idx]
    alpha = rng.uniform(*cfg.alpha_range)
    beta = rng.uniform(*cfg.beta_range)
    t = clip.n_samples
    idx = np.arange(t) % bank.segment_len
    tiled = seg[idx]
    out = clip.samples.copy()
    out[:, 0:3] += alpha * tiled[:, 0:3]
    out[:, 3:6] += beta * tiled[:, 3:6]
    params = {"segment_index": seg_idx, "alpha": float(alpha), "beta": float(beta)}
    return clip.with_samples(out), params


def walking_overlay(
    clip: SensorClip,
    bank: WalkBank,
    cfg: AugConfig,
    rng: np.random.Generator,
) -> SensorClip:
    """Add cyclically tiled walking motion: acc += alpha * w_acc, gyro += beta * w_gyro."""
    out, _ = _overlay_with_params(clip, bank, cfg, rng)
    return out


def derive_rng(seed: int, clip_index: int) -> np.random.Generator:
    """Per-clip RNG stream so parallel schedules cannot change results."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(clip_index,)))


def expand_training_set(
    clips: list[SensorClip],
    cfg: AugConfig,
    walk_bank: WalkBank | None = None,
    split: str = "train",
    collect_provenance: bool = False,
):
    """Originals plus mirrored participants plus per-clip perturbed/overlaid variants.

    Only the training split may be expanded; passing any other split is an
    error by contract so validation and test data can never be augmented.
    With ``collect_provenance`` returns (clips, records) where each record
    names the source clip, transform, and sampled parameters.
    """
    if split != "train":
        raise ValueError(f"augmentation is restricted to the train split, got {split!r}")
    if cfg.overlay_copies > 0 and (walk_bank is None or len(walk_bank) == 0):
        raise ValueError("walking overlay requested but the walk bank is empty")
    out = list(clips)
    records: list[dict] = [
        {"clip_id": c.clip_id, "source": c.clip_id, "transform": "original", "params": {}}
        for c in clips
    ]
    if cfg.mirror:
        for clip in clips:
            m = mirror_wrist(clip)
            m = replace(
                m,
                participant_id=f"{clip.participant_id}_mir",
                clip_id=f"{clip.clip_id}_mir" if clip.clip_id else "mir",
            )
            out.append(m)
            records.append(
                {"clip_id": m.clip_id, "source": clip.clip_id, "transform": "mirror",
                 "params": {"negated": list(MIRROR_CHANNELS)}}
            )
    base = list(out)
    for i, clip in enumerate(base):
        for v in range(cfg.perturb_copies):
            rng = derive_rng(cfg.seed, i * 1000 + v)
            samples, params = _perturb_with_params(clip.samples, cfg, rng)
            new = clip.with_samples(samples, clip_id=f"{clip.clip_id}_p{v}")
            out.append(new)
            records.append(
                {"clip_id": new.clip_id, "source": clip.clip_id, "transform": "perturb",
                 "params": params}
            )
        for v in range(cfg.overlay_copies):
            rng = derive_rng(cfg.seed, i * 1000 + 500 + v)
            aug, params = _overlay_with_params(clip, walk_bank, cfg, rng)
            new = aug.with_samples(aug.samples, clip_id=f"{clip.clip_id}_w{v}")
            out.append(new)
            records.append(
                {"clip_id": new.clip_id, "source": clip.clip_id, "transform": "overlay",
                 "params": params}
            )
    if collect_provenance:
        return out, records
    return out
