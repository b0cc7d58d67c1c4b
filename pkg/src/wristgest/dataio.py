"""Dataset layout on disk, subject-independent splits, synthetic generation.

Clip CSV schema: header ``t,acc_x,acc_y,acc_z,gyro_x,gyro_y,gyro_z,ppg[,ppg_2,...]``
with ``t`` in milliseconds, strictly increasing. Directory layout:
``root/<participant_id>/<condition>/<class_id>_<clip_idx>.csv``. The index
manifest (``index.json``) records clip metadata and split assignment.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .core import (
    CANONICAL_CHANNELS,
    CONDITIONS,
    ChannelLayout,
    GestureLabel,
    SensorClip,
    benchmark_id_of,
)

SPLITS = ("train", "val", "test")
DEFAULT_RATIOS = (0.7, 0.15, 0.15)
WALK_BANK_FILENAME = "walk_bank.csv"


@dataclass(frozen=True)
class ClipEntry:
    path: str  # relative to the dataset root
    participant_id: str
    condition: str
    class_id: int
    wrist: str = "unspecified"
    split: str | None = None

    @property
    def benchmark_id(self) -> int:
        return benchmark_id_of(self.class_id)


@dataclass
class DatasetIndex:
    root: Path
    clips: list[ClipEntry]
    sample_rate_hz: float = 100.0

    def participants(self) -> list[str]:
        return sorted({c.participant_id for c in self.clips})

    def split_clips(self, split: str) -> list[ClipEntry]:
        if split not in SPLITS:
            raise ValueError(f"unknown split {split!r}")
        return [c for c in self.clips if c.split == split]

    def check_subject_disjoint(self) -> None:
        seen: dict[str, str] = {}
        for c in self.clips:
            if c.split is None:
                continue
            prev = seen.setdefault(c.participant_id, c.split)
            if prev != c.split:
                raise ValueError(
                    f"participant {c.participant_id} appears in splits {prev} and {c.split}"
                )

    def save(self, path=None) -> Path:
        path = Path(path) if path is not None else self.root / "index.json"
        payload = {
            "sample_rate_hz": self.sample_rate_hz,
            "clips": [
                {
                    "path": c.path,
                    "participant": c.participant_id,
                    "condition": c.condition,
                    "class_id": c.class_id,
                    "wrist": c.wrist,
                    "split": c.split,
                }
                for c in self.clips
            ],
        }
        path.write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")
        return path

    @classmethod
    def load(cls, path) -> "DatasetIndex":
        path = Path(path)
        payload = json.loads(path.read_text())
        clips = [
            ClipEntry(
                path=c["path"],
                participant_id=c["participant"],
                condition=c["condition"],
                class_id=int(c["class_id"]),
                wrist=c.get("wrist", "unspecified"),
                split=c.get("split"),
            )
            for c in payload["clips"]
        ]
        return cls(root=path.parent, clips=clips, sample_rate_hz=payload.get("sample_rate_hz", 100.0))

    def load_clip(self, entry: ClipEntry) -> SensorClip:
        return read_clip_csv(
            self.root / entry.path,
            participant_id=entry.participant_id,
            condition=entry.condition,
            class_id=entry.class_id,
            wrist=entry.wrist,
            sample_rate_hz=self.sample_rate_hz,
        )

    def load_split(self, split: str) -> list[SensorClip]:
        return [self.load_clip(e) for e in self.split_clips(split)]


def read_clip_csv(
    path,
    participant_id: str,
    condition: str,
    class_id: int,
    wrist: str = "unspecified",
    sample_rate_hz: float = 100.0,
) -> SensorClip:
    """Parse one clip file; multi-channel PPG columns are averaged into one."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        required = ["t", "acc_x", "acc_y", "acc_z", "gyro_x", "gyro_y", "gyro_z"]
        for col in required:
            if col not in header:
                raise ValueError(f"{path}: missing channel column {col!r}")
        ppg_cols = [i for i, h in enumerate(header) if h == "ppg" or h.startswith("ppg_")]
        if not ppg_cols:
            raise ValueError(f"{path}: missing channel column 'ppg'")
        col_idx = [header.index(c) for c in required]
        rows = []
        last_t = -math.inf
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                values = [float(row[i]) for i in col_idx]
                ppg = sum(float(row[i]) for i in ppg_cols) / len(ppg_cols)
                t_ms = values[0]
            except (ValueError, IndexError) as exc:
                raise ValueError(f"{path}: line {line_no}: malformed row ({exc})") from None
            if not all(math.isfinite(v) for v in values) or not math.isfinite(ppg):
                raise ValueError(f"{path}: line {line_no}: non-finite value")
            if t_ms <= last_t:
                raise ValueError(f"{path}: line {line_no}: timestamps must increase")
            last_t = t_ms
            rows.append(values[1:] + [ppg])
    if not rows:
        raise ValueError(f"{path}: no data rows")
    samples = np.asarray(rows, dtype=np.float64)
    return SensorClip(
        samples=samples,
        layout=ChannelLayout(CANONICAL_CHANNELS, sample_rate_hz),
        label=GestureLabel.from_class_id(class_id),
        participant_id=participant_id,
        condition=condition,
        wrist=wrist,
        clip_id=f"{participant_id}/{condition}/{path.stem}",
    )


def write_clip_csv(path, samples: np.ndarray, sample_rate_hz: float = 100.0) -> None:
    """Write (T, 7) canonical samples with shortest round-trip float formatting."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    dt_ms = 1000.0 / sample_rate_hz
    with open(path, "w", newline="") as fh:
        fh.write("t," + ",".join(CANONICAL_CHANNELS) + "\n")
        for i, row in enumerate(np.asarray(samples, dtype=np.float64)):
            t_ms = i * dt_ms
            fh.write(repr(round(t_ms, 6)) + "," + ",".join(repr(float(v)) for v in row) + "\n")


def scan_dataset(root) -> DatasetIndex:
    """Index ``root/<pid>/<condition>/<class_id>_<idx>.csv`` in sorted order.

    If ``root/index.json`` exists its wrist/split metadata is reused.
    """
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"dataset root {root} does not exist")
    known: dict[str, ClipEntry] = {}
    index_path = root / "index.json"
    if index_path.exists():
        for entry in DatasetIndex.load(index_path).clips:
            known[entry.path] = entry
    clips = []
    for pdir in sorted(p for p in root.iterdir() if p.is_dir() and not p.name.startswith("_")):
        for cdir in sorted(c for c in pdir.iterdir() if c.is_dir()):
            if cdir.name not in CONDITIONS:
                raise ValueError(f"{cdir}: unknown condition directory")
            for f in sorted(cdir.glob("*.csv")):
                stem = f.stem
                try:
                    class_id = int(stem.split("_")[0])
                except ValueError:
                    raise ValueError(f"{f}: filename must start with <class_id>_") from None
                rel = str(f.relative_to(root))
                prev = known.get(rel)
                clips.append(
                    ClipEntry(
                        path=rel,
                        participant_id=pdir.name,
                        condition=cdir.name,
                        class_id=class_id,
                        wrist=prev.wrist if prev else "unspecified",
                        split=prev.split if prev else None,
                    )
                )
    return DatasetIndex(root=root, clips=clips)


def load_dataset(root) -> DatasetIndex:
    """Scan a dataset root; clips stay on disk until loaded per entry."""
    return scan_dataset(root)


def _participant_targets(n: int, ratios: tuple[float, float, float]) -> list[int]:
    """Largest-remainder allocation; every positive ratio gets at least one."""
    raw = [r * n for r in ratios]
    counts = [int(math.floor(x)) for x in raw]
    for i, r in enumerate(ratios):
        if r > 0 and counts[i] == 0:
            counts[i] = 1
    while sum(counts) > n:
        # Trim from the split furthest above its exact share, keeping minimums.
        over = [(counts[i] - raw[i], i) for i in range(3) if counts[i] > 1]
        over.sort(key=lambda p: (-p[0], p[1]))
        counts[over[0][1]] -= 1
    remainders = sorted(
        range(3), key=lambda i: (-(raw[i] - math.floor(raw[i])), i)
    )
    j = 0
    while sum(counts) < n:
        counts[remainders[j % 3]] += 1
        j += 1
    return counts


def make_splits(
    index: DatasetIndex,
    ratios: tuple[float, float, float] = DEFAULT_RATIOS,
    seed: int = 0,
) -> DatasetIndex:
    """Assign whole participants to train/val/test, balancing conditions greedily.

    Participants are processed in descending clip count (ties shuffled by
    seed) and each goes to the split, below its participant quota, with the
    largest remaining per-condition clip deficit.
    """
    if any(r <= 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError("ratios must be positive and sum to 1")
    participants = index.participants()
    if len(participants) < 3:
        raise ValueError(f"need at least 3 participants, got {len(participants)}")

    by_participant: dict[str, dict[str, int]] = {p: {} for p in participants}
    cond_totals: dict[str, int] = {}
    for c in index.clips:
        by_participant[c.participant_id][c.condition] = (
            by_participant[c.participant_id].get(c.condition, 0) + 1
        )
        cond_totals[c.condition] = cond_totals.get(c.condition, 0) + 1
    conditions = sorted(cond_totals)

    rng = np.random.default_rng(seed)
    shuffled = list(participants)
    rng.shuffle(shuffled)
    ordered = sorted(
        shuffled, key=lambda p: -sum(by_participant[p].values())
    )  # stable: ties keep shuffled order

    targets = _participant_targets(len(participants), ratios)
    want = {
        s: {c: ratios[i] * cond_totals[c] for c in conditions}
        for i, s in enumerate(SPLITS)
    }
    have = {s: {c: 0.0 for c in conditions} for s in SPLITS}
    n_assigned = {s: 0 for s in SPLITS}
    assignment: dict[str, str] = {}
    for p in ordered:
        open_splits = [s for i, s in enumerate(SPLITS) if n_assigned[s] < targets[i]]
        if not open_splits:
            open_splits = list(SPLITS)
        pvec = by_participant[p]
        best = max(
            open_splits,
            key=lambda s: (
                sum((want[s][c] - have[s][c]) * pvec.get(c, 0) for c in conditions),
                -SPLITS.index(s),
            ),
        )
        assignment[p] = best
        n_assigned[best] += 1
        for c, n in pvec.items():
            have[best][c] += n

    clips = [replace(c, split=assignment[c.participant_id]) for c in index.clips]
    out = DatasetIndex(root=index.root, clips=clips, sample_rate_hz=index.sample_rate_hz)
    out.check_subject_disjoint()
    return out


@dataclass(frozen=True)
class SynthSpec:
    """Knobs for the deterministic synthetic dataset generator."""

    n_participants: int = 6
    n_clips_per_class: int = 4
    seed: int = 42
    clip_length_range: tuple[int, int] = (220, 300)
    #: Dominant accelerometer frequency per benchmark class 0..4 (Hz).
    class_freqs_hz: tuple[float, ...] = (2.0, 4.0, 6.0, 8.0, 12.0)
    amplitude: float = 1.0
    burst_width: int = 140
    noise_std: float = 0.3
    gyro_gain: float = 0.6
    walk_freq_hz: float = 1.8
    walk_duration_s: float = 30.0
    sample_rate_hz: float = 100.0
    window: int = 100

    def __post_init__(self):
        if self.clip_length_range[0] < self.window:
            raise ValueError("minimum clip length must be >= the model window")
        if len(self.class_freqs_hz) != 5:
            raise ValueError("need one dominant frequency per positive class")
        if self.n_participants < 1 or self.n_clips_per_class < 1:
            raise ValueError("participant and clip counts must be >= 1")


#: Raw taxonomy ids emitted per benchmark class (negatives cycle 27..58).
_POSITIVE_IDS = (3, 4, 13, 16, 20)


def _synth_clip(
    rng: np.random.Generator, spec: SynthSpec, benchmark_id: int, length: int
) -> np.ndarray:
    """One clip: hann-enveloped burst at the class frequency (positives) or
    envelope-matched broadband noise (negative), plus white noise everywhere."""
    t = np.arange(length) / spec.sample_rate_hz
    center = length // 2
    env = np.zeros(length)
    lo = max(0, center - spec.burst_width // 2)
    hi = min(length, center + spec.burst_width - spec.burst_width // 2)
    env[lo:hi] = np.hanning(hi - lo)
    samples = rng.standard_normal((length, 7)) * spec.noise_std
    if benchmark_id < 5:
        freq = spec.class_freqs_hz[benchmark_id]
        for ch, gain in ((0, 1.0), (1, 0.8), (2, 0.9), (3, 0.6), (4, 0.5), (5, 0.55)):
            phase = rng.uniform(0, 2 * np.pi)
            amp = spec.amplitude * gain * (1.0 if ch < 3 else spec.gyro_gain / 0.6)
            samples[:, ch] += amp * env * np.sin(2 * np.pi * freq * t + phase)
    else:
        # Broadband burst with the same envelope and comparable power, so
        # only spectral content separates the negative class.
        burst = rng.standard_normal((length, 6))
        rms = spec.amplitude * np.array([1.0, 0.8, 0.9, 0.6, 0.5, 0.55]) / np.sqrt(2)
        samples[:, :6] += env[:, None] * burst * rms
    # PPG: slow pulse wave, identical construction for every class.
    samples[:, 6] = 0.5 * np.sin(2 * np.pi * 1.2 * t + rng.uniform(0, 2 * np.pi))
    samples[:, 6] += 0.05 * rng.standard_normal(length)
    return samples


def _synth_walk(rng: np.random.Generator, spec: SynthSpec) -> np.ndarray:
    """Quasi-periodic walking template used to build overlay banks."""
    n = int(spec.walk_duration_s * spec.sample_rate_hz)
    t = np.arange(n) / spec.sample_rate_hz
    out = np.zeros((n, 7))
    f = spec.walk_freq_hz
    for ch, (gain, harm) in enumerate(
        [(0.9, 1), (0.7, 2), (1.1, 1), (0.5, 1), (0.4, 2), (0.6, 1)]
    ):
        phase = rng.uniform(0, 2 * np.pi)
        wobble = 1.0 + 0.05 * np.sin(2 * np.pi * 0.1 * t)
        out[:, ch] = gain * np.sin(2 * np.pi * f * harm * t * wobble + phase)
    out[:, :6] += 0.1 * rng.standard_normal((n, 6))
    out[:, 6] = 0.5 * np.sin(2 * np.pi * 1.2 * t)
    return out


def generate_synth(spec: SynthSpec, out_dir) -> DatasetIndex:
    """Write a deterministic synthetic dataset and its split index to disk."""
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(spec.seed)
    conditions_cycle = ("sitting", "standing", "arm_down", "walking")
    entries: list[ClipEntry] = []
    neg_cycle = 0
    for p in range(spec.n_participants):
        pid = f"p{p:02d}"
        wrist = "left" if rng.random() < 0.75 else "right"
        for b in range(6):
            for j in range(spec.n_clips_per_class):
                length = int(rng.integers(spec.clip_length_range[0], spec.clip_length_range[1] + 1))
                samples = _synth_clip(rng, spec, b, length)
                if b < 5:
                    class_id = _POSITIVE_IDS[b]
                else:
                    class_id = 27 + (neg_cycle % 32)
                    neg_cycle += 1
                cond = conditions_cycle[int(rng.integers(0, 4))]
                rel = f"{pid}/{cond}/{class_id}_{j}.csv"
                write_clip_csv(root / rel, samples, spec.sample_rate_hz)
                entries.append(
                    ClipEntry(rel, pid, cond, class_id, wrist=wrist)
                )
    walk = _synth_walk(rng, spec)
    write_clip_csv(root / WALK_BANK_FILENAME, walk, spec.sample_rate_hz)
    index = DatasetIndex(root=root, clips=entries, sample_rate_hz=spec.sample_rate_hz)
    index = make_splits(index, DEFAULT_RATIOS, seed=spec.seed)
    index.save()
    return index


def load_walk_bank(root, segment_len: int = 500):
    """Walk-overlay bank from the dataset's walking recording, if present."""
    from .augmentation import WalkBank

    path = Path(root) / WALK_BANK_FILENAME
    if not path.exists():
        return None
    clip = read_clip_csv(path, participant_id="_walk", condition="walking", class_id=38)
    return WalkBank.from_recording(clip.samples, segment_len)
