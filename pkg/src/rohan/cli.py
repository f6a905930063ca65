"""``rohan`` command line entry point.

Exit codes: 0 ok, 2 usage, 3 io, 4 label format, 5 external command,
10 internal error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .augment import DEFAULT_PALETTE, AugmentPolicy, augment_dataset, load_palette
from .errors import EXIT_CODES, DataError, RohanError, UsageError
from .eval import SCHEMA_VERSION, evaluate
from .labels import label_stems, list_images, read_video_labels
from .pipeline import load_config, metrics_rows, run_pipeline
from .refine import MODES, FilterParams, build_pseudo_dataset, write_data_yaml
from .track import TrackerConfig, run_tracker

logger = logging.getLogger("rohan")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _styled(text: str, code: str) -> str:
    if os.environ.get("NO_COLOR") or not sys.stdout.isatty():
        return text
    return f"\033[{code}m{text}\033[0m"


def _emit(args, payload: dict, human: str) -> None:
    if args.json:
        print(json.dumps({"schema_version": SCHEMA_VERSION, **payload}, indent=2))
    else:
        print(human)


def _seed_arg(value: str) -> int:
    seed = int(value, 0)
    if not 0 <= seed < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return seed


def _filter_args(p):
    p.add_argument("--radius", type=float, help="spatial filter radius (normalized units)")
    p.add_argument("--window", type=int, help="spatial filter block length in frames")
    p.add_argument("--min-track", type=int, help="minimum observations per kept track")
    p.add_argument("--conf-floor", type=float, help="drop predictions below this confidence")
    p.add_argument("--sliding", action="store_true", default=None,
                   help="centered sliding window instead of fixed blocks")
    p.add_argument("--drop-empty", action="store_true", default=None,
                   help="omit frames left without boxes")


def _filter_overrides(args) -> dict:
    return {
        "radius": args.radius,
        "window_len": args.window,
        "min_track_len": args.min_track,
        "conf_floor": args.conf_floor,
        "sliding": args.sliding,
        "drop_empty": args.drop_empty,
    }


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_seed_arg, default=0, help="master RNG seed")
    common.add_argument("--threads", type=int, default=1, help="worker thread cap")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="rohan", description="Glove augmentation, pseudo-label "
                     "refinement and self-training for hand detection.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, **kw):
        p = sub.add_parser(name, parents=[common], **kw)
        if name != "eval":
            p.add_argument("--json", action="store_true", help="machine-readable output")
        return p

    p = add("augment", help="add artificial gloves to a dataset")
    p.add_argument("--in", dest="in_root", required=True, help="dataset with images/ and masks/")
    p.add_argument("--out", required=True, help="output dataset root")
    p.add_argument("--palette", help="JSON palette file (default: built-in palette)")

    p = add("track", help="track detections through a video")
    p.add_argument("--pred", required=True, help="directory of per-frame prediction files")
    p.add_argument("--frames", help="frame directory fixing frame order (default: file names)")
    p.add_argument("--out", required=True, help="output .jsonl file")
    p.add_argument("--iou-gate", type=float, default=0.3)
    p.add_argument("--max-misses", type=int, default=5)
    p.add_argument("--min-conf", type=float, default=0.25)

    p = add("refine", help="build a filtered pseudo-labelled dataset")
    p.add_argument("--frames", required=True, help="frame image directory of one video")
    p.add_argument("--pred", help="directory of per-frame prediction files")
    p.add_argument("--mode", choices=MODES, default="tracking")
    p.add_argument("--out", help="output dataset root")
    _filter_args(p)

    p = add("eval", help="precision / recall / mAP50")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--conf", type=float, help="fixed confidence cutoff instead of max-F1")
    p.add_argument("--json", nargs="?", const="-", metavar="PATH",
                   help="JSON report to PATH, or to stdout when no PATH is given")

    p = add("pipeline", help="run the self-training loop")
    p.add_argument("--config", required=True, help="JSON pipeline config")
    p.add_argument("--resume", action="store_true", help="continue an interrupted run")
    p.add_argument("--run-dir", "--run_dir", dest="run_dir")
    p.add_argument("--frames-source", "--frames_source", dest="frames_source")
    p.add_argument("--detect-cmd", "--detect_cmd", dest="detect_cmd")
    p.add_argument("--train-cmd", "--train_cmd", dest="train_cmd")
    p.add_argument("--initial-weights", "--initial_weights", dest="initial_weights")
    p.add_argument("--eval-gt", "--eval_gt", dest="eval_gt")
    p.add_argument("--cycles", type=int)
    p.add_argument("--epochs-per-cycle", "--epochs_per_cycle", dest="epochs_per_cycle", type=int)
    p.add_argument("--sample-fps", "--sample_fps", dest="sample_fps", type=float)
    p.add_argument("--mode", choices=MODES)
    _filter_args(p)

    p = add("report", help="per-cycle metrics of a run")
    p.add_argument("run_dir")
    p.add_argument("--csv", help="write the series as CSV")
    return parser


def cmd_augment(args) -> int:
    if args.palette:
        palette, policy = load_palette(args.palette)
    else:
        palette, policy = list(DEFAULT_PALETTE), AugmentPolicy()
    summary = augment_dataset(args.in_root, args.out, palette, policy,
                              master_seed=args.seed, workers=args.threads)
    d = summary.to_dict()
    _emit(args, d, f"augmented {summary.images} image(s), {summary.boxes} box(es), "
                   f"skipped {len(summary.skipped)}")
    return 0


def _video_from_dirs(pred_dir, frames_dir=None, require_conf=True):
    if frames_dir is not None:
        stems = [p.stem for p in list_images(frames_dir)]
    else:
        stems = label_stems(pred_dir)
    return stems, read_video_labels(pred_dir, stems, require_conf=require_conf)


def cmd_track(args) -> int:
    stems, video = _video_from_dirs(args.pred, args.frames)
    cfg = TrackerConfig(args.iou_gate, args.max_misses, args.min_conf)
    tracks = run_tracker(video, cfg)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w") as fh:
        for t in tracks:
            fh.write(json.dumps(t.to_dict(stems)) + "\n")
    _emit(args, {"tracks": len(tracks), "frames": len(video), "out": str(out)},
          f"{len(tracks)} track(s) over {len(video)} frame(s) -> {out}")
    return 0


def cmd_refine(args) -> int:
    frames = Path(args.frames)
    if not frames.is_dir():
        raise DataError(f"frame directory not found: {frames}")
    if args.pred is None:
        raise UsageError("refine: --pred is required")
    if args.out is None:
        raise UsageError("refine: --out is required")
    overrides = {k: v for k, v in _filter_overrides(args).items() if v is not None}
    params = FilterParams(**overrides)
    _, video = _video_from_dirs(args.pred, frames)
    ds = build_pseudo_dataset(frames, video, params, args.mode, args.out)
    write_data_yaml(ds.root)
    s = ds.stats
    _emit(args, {"mode": args.mode, **s, "out": str(ds.root)},
          f"{args.mode}: kept {s['boxes_kept']}/{s['boxes_in']} box(es) "
          f"on {s['frames']} frame(s) -> {ds.root}")
    return 0


def cmd_eval(args) -> int:
    report = evaluate(args.pred, args.gt, args.iou, args.conf)
    d = report.to_dict()
    if args.json not in (None, "-"):
        Path(args.json).write_text(json.dumps(d, indent=2) + "\n")
    if args.json == "-":
        print(json.dumps(d, indent=2))
    else:
        print(_styled("precision  recall  mAP50", "1"))
        print(f"{report.precision:9.4f}  {report.recall:6.4f}  {report.map50:5.4f}")
        print(f"TP={report.tp} FP={report.fp} FN={report.fn} op_conf={report.op_conf}")
    return 0


def cmd_pipeline(args) -> int:
    overrides = {k: getattr(args, k) for k in (
        "run_dir", "frames_source", "detect_cmd", "train_cmd", "initial_weights",
        "eval_gt", "cycles", "epochs_per_cycle", "sample_fps", "mode")}
    overrides.update(_filter_overrides(args))
    cfg = load_config(args.config, overrides)
    records = run_pipeline(cfg, resume=args.resume)
    payload = {"run_dir": str(cfg.run_dir), "cycles": [r.to_dict() for r in records]}
    lines = [f"cycle {r.cycle_idx}: {r.status} kept={r.dataset_stats.get('boxes_kept')}"
             + (f" mAP50={r.eval.map50:.4f}" if r.eval else "") for r in records]
    _emit(args, payload, "\n".join(lines))
    return 0


def cmd_report(args) -> int:
    run_dir = Path(args.run_dir)
    if not (run_dir / "cycles").is_dir():
        raise DataError(f"not a run directory: {run_dir}")
    rows = metrics_rows(run_dir)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            fields = list(rows[0]) if rows else ["cycle"]
            writer = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
    human = "\n".join(
        f"{r['cycle']:>3} {r['status']:<7} kept={r['boxes_kept']} "
        + ("" if r["map50"] is None else
           f"P={r['precision']:.4f} R={r['recall']:.4f} mAP50={r['map50']:.4f}")
        for r in rows)
    _emit(args, {"cycles": rows}, human or "no cycles")
    return 0


COMMANDS = {
    "augment": cmd_augment,
    "track": cmd_track,
    "refine": cmd_refine,
    "eval": cmd_eval,
    "pipeline": cmd_pipeline,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_CODES["usage"]
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return COMMANDS[args.command](args)
    except RohanError as exc:
        print(f"rohan: {exc}", file=sys.stderr)
        return EXIT_CODES[exc.category]
    except (FileNotFoundError, NotADirectoryError, PermissionError) as exc:
        print(f"rohan: {exc}", file=sys.stderr)
        return EXIT_CODES["io"]
    except ValueError as exc:
        print(f"rohan: {exc}", file=sys.stderr)
        return EXIT_CODES["usage"]
    except Exception as exc:  # noqa: BLE001
        print(f"rohan: internal error: {exc!r}", file=sys.stderr)
        return EXIT_CODES["internal"]


if __name__ == "__main__":
    sys.exit(main())
