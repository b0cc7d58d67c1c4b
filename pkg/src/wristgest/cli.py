"""Command-line entry point: synth, segment, augment, featurize, train, eval, ablate.

Exit codes: 0 success, 1 runtime failure, 2 usage error. Logs are
line-oriented JSON on stderr; ``--quiet`` silences them. Config files are
JSON; any leaf can be overridden with dotted flags, e.g. ``--train.lr 0.0005``.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .augmentation import AugConfig, expand_training_set
from .core import CONDITIONS, GestureLabel
from .dataio import (
    DatasetIndex,
    ClipEntry,
    SynthSpec,
    generate_synth,
    load_walk_bank,
    read_clip_csv,
    scan_dataset,
    write_clip_csv,
)
from .evaluation import emit_report
from .features import MASK_GROUPS, tokenize
from .pipeline import (
    apply_dotted_overrides,
    default_run_config,
    load_run,
    merge_config,
    run_ablation,
    run_evaluation,
    run_training,
)
from .segmentation import (
    SegConfig,
    bandpass,
    detect_peaks,
    extract_segments,
    motion_envelope,
    smooth,
    window_clip,
)

_QUIET = False


def _log(event: str, **fields):
    if not _QUIET:
        print(json.dumps({"event": event, **fields}, sort_keys=True), file=sys.stderr)


def _load_index(data_path: str) -> DatasetIndex:
    p = Path(data_path)
    if p.is_dir():
        return scan_dataset(p)
    if p.name == "index.json" or p.suffix == ".json":
        return DatasetIndex.load(p)
    raise ValueError(f"--data must be an index.json or a dataset directory, got {p}")


def _resolve_config(args, extra: list[str]) -> dict:
    cfg = default_run_config()
    if getattr(args, "config", None):
        user = json.loads(Path(args.config).read_text())
        cfg = merge_config(cfg, user)
    cfg["seed"] = args.seed if getattr(args, "seed", None) is not None else cfg["seed"]
    cfg["threads"] = getattr(args, "threads", 1)
    overrides = []
    i = 0
    while i < len(extra):
        token = extra[i]
        if not token.startswith("--") or "." not in token:
            raise SystemExit2(f"unrecognized argument: {token}")
        key = token[2:]
        if "=" in key:
            key, value = key.split("=", 1)
        else:
            i += 1
            if i >= len(extra):
                raise SystemExit2(f"missing value for override --{key}")
            value = extra[i]
        overrides.append((key, value))
        i += 1
    try:
        return apply_dotted_overrides(cfg, overrides)
    except KeyError as exc:
        raise SystemExit2(str(exc)) from None


class SystemExit2(Exception):
    """Usage error that should terminate with exit code 2."""


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------

def cmd_synth(args, extra) -> int:
    if extra:
        raise SystemExit2(f"unrecognized arguments: {extra}")
    spec = SynthSpec(
        n_participants=args.participants,
        n_clips_per_class=args.clips_per_class,
        seed=args.seed,
        clip_length_range=(args.min_len, args.max_len),
    )
    index = generate_synth(spec, args.out)
    _log("synth", out=str(args.out), clips=len(index.clips), seed=args.seed)
    return 0


def cmd_segment(args, extra) -> int:
    if extra:
        raise SystemExit2(f"unrecognized arguments: {extra}")
    cfg = SegConfig(
        bandpass_low_hz=args.low,
        bandpass_high_hz=args.high,
        smooth_window=args.smooth,
        peak_min_distance=args.min_dist,
        peak_min_height=args.height,
        segment_halfwidth=args.halfwidth,
    )
    stream = read_clip_csv(
        args.infile,
        participant_id=args.participant,
        condition=args.condition,
        class_id=args.class_id,
    )
    rate = stream.layout.sample_rate_hz
    filtered = bandpass(stream.samples[:, :6], cfg.bandpass_low_hz, cfg.bandpass_high_hz, rate)
    env = smooth(motion_envelope(filtered), cfg.smooth_window)
    centers = detect_peaks(env, cfg)
    segments = extract_segments(stream, centers, cfg.segment_halfwidth)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i, seg in enumerate(segments):
        write_clip_csv(out / f"segment_{i:03d}.csv", seg.samples, rate)
    (out / "segments.json").write_text(
        json.dumps(
            {"source": str(args.infile), "centers": [int(c) for c in centers],
             "halfwidth": cfg.segment_halfwidth, "threshold": cfg.resolve_height(env)},
            indent=1,
        )
        + "\n"
    )
    _log("segment", segments=len(segments), out=str(out))
    return 0


def cmd_augment(args, extra) -> int:
    if extra:
        raise SystemExit2(f"unrecognized arguments: {extra}")
    index = _load_index(args.data)
    cfg = AugConfig(
        scale_range=(args.scale_min, args.scale_max),
        warp_strength=args.warp_strength,
        noise_amp=args.noise_amp,
        noise_cutoff_hz=args.noise_cutoff,
        alpha_range=(args.alpha_min, args.alpha_max),
        beta_range=(args.beta_min, args.beta_max),
        seed=args.seed,
        mirror=not args.no_mirror,
        perturb_copies=args.perturb_copies,
        overlay_copies=args.overlay_copies,
    )
    walk_bank = None
    if cfg.overlay_copies > 0:
        walk_bank = load_walk_bank(index.root, args.walk_segment_len)
        if walk_bank is None:
            raise ValueError("no walking recording found for the overlay bank")
    train_clips = index.load_split("train")
    expanded, records = expand_training_set(
        train_clips, cfg, walk_bank, split="train", collect_provenance=True
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for n, clip in enumerate(expanded):
        rel = f"{clip.participant_id}/{clip.condition}/{clip.label.class_id}_{n}.csv"
        write_clip_csv(out / rel, clip.samples, clip.layout.sample_rate_hz)
        entries.append(
            ClipEntry(rel, clip.participant_id, clip.condition, clip.label.class_id,
                      wrist=clip.wrist, split="train")
        )
    # Val/test clips are carried over untouched.
    for split in ("val", "test"):
        for entry, clip in zip(index.split_clips(split), index.load_split(split)):
            rel = entry.path
            write_clip_csv(out / rel, clip.samples, clip.layout.sample_rate_hz)
            entries.append(
                ClipEntry(rel, entry.participant_id, entry.condition, entry.class_id,
                          wrist=entry.wrist, split=split)
            )
    DatasetIndex(root=out, clips=entries, sample_rate_hz=index.sample_rate_hz).save()
    (out / "provenance.json").write_text(json.dumps(records, indent=1) + "\n")
    _log("augment", train_in=len(train_clips), train_out=len(expanded), out=str(out))
    return 0


def cmd_featurize(args, extra) -> int:
    if extra:
        raise SystemExit2(f"unrecognized arguments: {extra}")
    clip = read_clip_csv(
        args.infile,
        participant_id=args.participant,
        condition=args.condition,
        class_id=args.class_id,
    )
    masks = frozenset(args.mask or ())
    n_ch = 7 if args.include_ppg else 6
    names = clip.layout.names[:n_ch]
    windows = window_clip(clip, args.window, args.stride)
    payload = []
    for w in windows:
        w = w.with_samples(w.samples[:, :n_ch])
        seq = tokenize(
            w, masks=masks, rate_hz=clip.layout.sample_rate_hz, k_top=args.k_top,
            channel_names=names,
        )
        payload.append(
            {
                "clip": w.clip_ref,
                "start": w.start_index,
                "benchmark_id": w.label.benchmark_id,
                "tokens": [
                    {"group": t.group, "source": t.source, "values": t.values.tolist()}
                    for t in seq.tokens
                ],
            }
        )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(
        json.dumps(
            {"masks": sorted(masks), "k_top": args.k_top, "windows": payload}, indent=1
        )
        + "\n"
    )
    _log("featurize", windows=len(payload), out=str(out))
    return 0


def cmd_train(args, extra) -> int:
    cfg = _resolve_config(args, extra)
    index = _load_index(args.data)
    log_fn = None if _QUIET else (lambda rec: _log("epoch", **rec))
    run = run_training(index, cfg, args.out, quiet=_QUIET, log_fn=log_fn)
    result = run["result"]
    _log(
        "train_done",
        out=str(args.out),
        epochs=len(result.history),
        best_epoch=result.best_epoch,
        best_val_macro_f1=result.best_val_macro_f1,
        parameters=run["model"].parameter_count(),
    )
    return 0


def cmd_eval(args, extra) -> int:
    if extra:
        raise SystemExit2(f"unrecognized arguments: {extra}")
    ckpt = Path(args.checkpoint)
    run_dir = ckpt.parent if ckpt.is_file() else Path(args.checkpoint)
    loaded = load_run(run_dir)
    cfg = loaded["cfg"]
    cfg["eval"]["k"] = args.k
    index = _load_index(args.data)
    history = None
    hist_path = run_dir / "history.json"
    if hist_path.exists():
        history = json.loads(hist_path.read_text())
    reports = run_evaluation(
        loaded["model"],
        loaded["stats"],
        index,
        cfg,
        split=args.split,
        out_dir=args.out,
        formats=tuple(args.format.split(",")),
        masks=frozenset(cfg["features"]["masks"]),
        history=history,
    )
    _log(
        "eval_done",
        split=args.split,
        window_macro_f1=reports["window"].macro_f1,
        clip_macro_f1=reports["clip"].macro_f1,
        out=str(args.out),
    )
    return 0


def cmd_ablate(args, extra) -> int:
    cfg = _resolve_config(args, extra)
    index = _load_index(args.data)
    masks = tuple(args.mask) if args.mask else ("time", "frequency", "cross", "shape", "transformer")
    results = run_ablation(index, cfg, args.out, masks=masks, retrain=args.retrain, quiet=_QUIET)
    _log("ablate_done", out=str(args.out), **{
        m: round(r["window_macro_f1"], 4) for m, r in results.items()
    })
    return 0


# ----------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="wristgest",
        description="Wrist-worn gesture recognition pipeline",
    )
    p.add_argument("--version", action="version", version=f"wristgest {__version__}")
    p.add_argument("--quiet", action="store_true", help="suppress JSON logs on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="generate a synthetic dataset")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=42)
    s.add_argument("--participants", type=int, default=6)
    s.add_argument("--clips-per-class", type=int, default=4)
    s.add_argument("--min-len", type=int, default=220)
    s.add_argument("--max-len", type=int, default=300)
    s.set_defaults(fn=cmd_synth)

    s = sub.add_parser("segment", help="segment a continuous stream into clips")
    s.add_argument("--in", dest="infile", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--low", type=float, default=0.5)
    s.add_argument("--high", type=float, default=20.0)
    s.add_argument("--smooth", type=int, default=25)
    s.add_argument("--min-dist", type=int, default=100)
    s.add_argument("--height", type=float, default=None)
    s.add_argument("--halfwidth", type=int, default=100)
    s.add_argument("--participant", default="p00")
    s.add_argument("--condition", default="sitting", choices=CONDITIONS)
    s.add_argument("--class-id", type=int, default=27)
    s.set_defaults(fn=cmd_segment)

    s = sub.add_parser("augment", help="expand the train split of a dataset")
    s.add_argument("--data", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--scale-min", type=float, default=0.8)
    s.add_argument("--scale-max", type=float, default=1.2)
    s.add_argument("--warp-strength", type=float, default=0.1)
    s.add_argument("--noise-amp", type=float, default=0.05)
    s.add_argument("--noise-cutoff", type=float, default=2.0)
    s.add_argument("--alpha-min", type=float, default=0.3)
    s.add_argument("--alpha-max", type=float, default=1.0)
    s.add_argument("--beta-min", type=float, default=0.3)
    s.add_argument("--beta-max", type=float, default=1.0)
    s.add_argument("--no-mirror", action="store_true")
    s.add_argument("--perturb-copies", type=int, default=0)
    s.add_argument("--overlay-copies", type=int, default=0)
    s.add_argument("--walk-segment-len", type=int, default=500)
    s.set_defaults(fn=cmd_augment)

    s = sub.add_parser("featurize", help="statistical tokens for one clip's windows")
    s.add_argument("--in", dest="infile", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--mask", action="append", choices=MASK_GROUPS)
    s.add_argument("--k-top", type=int, default=3)
    s.add_argument("--window", type=int, default=100)
    s.add_argument("--stride", type=int, default=20)
    s.add_argument("--include-ppg", action="store_true",
                   help="tokenize the PPG channel too (default: 6 IMU channels)")
    s.add_argument("--participant", default="p00")
    s.add_argument("--condition", default="sitting", choices=CONDITIONS)
    s.add_argument("--class-id", type=int, default=27)
    s.set_defaults(fn=cmd_featurize)

    s = sub.add_parser("train", help="train the classifier on an indexed dataset")
    s.add_argument("--data", required=True)
    s.add_argument("--config", default=None, help="JSON config overriding defaults")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--threads", type=int, default=1)
    s.set_defaults(fn=cmd_train)

    s = sub.add_parser("eval", help="evaluate a trained run on a split")
    s.add_argument("--checkpoint", required=True, help="checkpoint file or run dir")
    s.add_argument("--data", required=True)
    s.add_argument("--split", default="test", choices=("train", "val", "test"))
    s.add_argument("--k", type=int, default=3)
    s.add_argument("--out", required=True)
    s.add_argument("--format", default="json,csv,svg")
    s.set_defaults(fn=cmd_eval)

    s = sub.add_parser("ablate", help="feature-group masking study")
    s.add_argument("--data", required=True)
    s.add_argument("--config", default=None)
    s.add_argument("--out", required=True)
    s.add_argument("--mask", action="append",
                   choices=("time", "frequency", "cross", "shape", "transformer"))
    s.add_argument("--retrain", action="store_true",
                   help="retrain under each mask instead of re-evaluating")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--threads", type=int, default=1)
    s.set_defaults(fn=cmd_ablate)
    return p


def main(argv=None) -> int:
    global _QUIET
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    _QUIET = args.quiet
    try:
        return args.fn(args, extra)
    except SystemExit2 as exc:
        parser.print_usage(sys.stderr)
        print(f"wristgest: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure -> exit 1
        print(json.dumps({"event": "error", "error": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
