"""Iterative self-training loop driven by external detect/train commands.

Each cycle runs the detector over every video's frames, turns the
predictions into a filtered pseudo-labelled dataset, fine-tunes on it and
optionally evaluates the new weights on a labelled test set. The weights
produced by one cycle feed the next.

Run layout::

    <run_dir>/report.json
    <run_dir>/cycles/001/record.json
                        predictions/<video>/*.txt
                        dataset/{images,labels,provenance}/, data.yaml
                        weights/cycle001<ext>
                        eval_predictions/*.txt   (when eval_gt is set)
"""
from __future__ import annotations

import hashlib
import json
import logging
import shlex
import shutil
import subprocess
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import List, Optional

from .errors import ConfigError, DataError, ExternalCommandError, RohanError
from .eval import SCHEMA_VERSION, EvalReport, evaluate
from .labels import list_images, read_labels, read_video_labels
from .refine import MODES, FilterParams, build_pseudo_dataset, write_data_yaml
from .track import TrackerConfig

logger = logging.getLogger(__name__)

DETECT_PLACEHOLDERS = ("{weights}", "{frames}", "{out}")
TRAIN_PLACEHOLDERS = ("{weights}", "{dataset}", "{out_weights}", "{epochs}")


@dataclass
class PipelineConfig:
    frames_source: Path
    detect_cmd: str
    train_cmd: str
    initial_weights: Path
    epochs_per_cycle: int = 5
    cycles: int = 1
    mode: str = "tracking"
    filter: FilterParams = field(default_factory=FilterParams)
    tracker: Optional[TrackerConfig] = None
    eval_gt: Optional[Path] = None
    sample_fps: float = 5.0
    run_dir: Path = Path("run")

    def __post_init__(self):
        if self.cycles < 1:
            raise ConfigError("cycles must be >= 1")
        if self.epochs_per_cycle < 1:
            raise ConfigError("epochs_per_cycle must be >= 1")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        for name, tpl, needed in (("detect_cmd", self.detect_cmd, DETECT_PLACEHOLDERS),
                                  ("train_cmd", self.train_cmd, TRAIN_PLACEHOLDERS)):
            missing = [p for p in needed if p not in tpl]
            if missing:
                raise ConfigError(f"{name} lacks placeholders: {' '.join(missing)}")

    def videos(self) -> List[Path]:
        """Frame directories, one per video.

        ``frames_source`` may itself be a single frame directory.
        """
        src = Path(self.frames_source)
        if not src.is_dir():
            raise DataError(f"frames_source not found: {src}")
        subdirs = sorted(p for p in src.iterdir() if p.is_dir())
        if subdirs:
            return subdirs
        return [src]


_PATH_KEYS = ("frames_source", "initial_weights", "eval_gt", "run_dir")
_FILTER_KEYS = {f.name for f in fields(FilterParams)}
_TRACKER_KEYS = {f.name for f in fields(TrackerConfig)}


def config_from_dict(d: dict, base_dir=None) -> PipelineConfig:
    """Build a config from plain data; relative paths resolve against ``base_dir``."""
    d = dict(d)
    base = Path(base_dir) if base_dir is not None else Path.cwd()
    filt = dict(d.pop("filter", {}) or {})
    if "mode" in filt:
        d.setdefault("mode", filt.pop("mode"))
    tracker = d.pop("tracker", None)
    unknown = set(filt) - _FILTER_KEYS
    if unknown:
        raise ConfigError(f"unknown filter keys: {sorted(unknown)}")
    if tracker is not None and set(tracker) - _TRACKER_KEYS:
        raise ConfigError(f"unknown tracker keys: {sorted(set(tracker) - _TRACKER_KEYS)}")
    known = {f.name for f in fields(PipelineConfig)}
    unknown = set(d) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key in _PATH_KEYS:
        if d.get(key) is not None:
            p = Path(d[key])
            d[key] = p if p.is_absolute() else base / p
    try:
        d["filter"] = FilterParams(**filt)
        if tracker is not None:
            d["tracker"] = TrackerConfig(**tracker)
        return PipelineConfig(**d)
    except TypeError as exc:
        raise ConfigError(f"invalid pipeline config: {exc}") from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path, overrides: Optional[dict] = None) -> PipelineConfig:
    """Read a JSON config file. ``overrides`` replace top-level or filter keys."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"config not found: {path}")
    try:
        d = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key in _FILTER_KEYS:
            d.setdefault("filter", {})[key] = value
        else:
            d[key] = value
    return config_from_dict(d, path.parent)


def sample_indices(n_frames: int, native_fps: float, target_fps: float = 5.0) -> List[int]:
    """Frame indices to keep when subsampling a video to ``target_fps``.

    Picks the frame nearest each tick of the target clock. Frame extraction
    itself happens outside this package.
    """
    if native_fps <= 0 or target_fps <= 0:
        raise ValueError("frame rates must be positive")
    if target_fps >= native_fps:
        return list(range(n_frames))
    duration = n_frames / native_fps
    n_out = int(duration * target_fps + 1e-9)
    picks = []
    for k in range(n_out):
        idx = int(k * native_fps / target_fps + 0.5)
        if idx < n_frames and (not picks or idx > picks[-1]):
            picks.append(idx)
    return picks


def fill_template(template: str, **values) -> str:
    cmd = template
    for key, value in values.items():
        cmd = cmd.replace("{" + key + "}", shlex.quote(str(value)))
    return cmd


def run_command(cmd: str) -> subprocess.CompletedProcess:
    logger.info("running: %s", cmd)
    proc = subprocess.run(cmd, shell=True, capture_output=True, text=True)
    if proc.returncode != 0:
        raise ExternalCommandError(cmd, proc.returncode, proc.stderr)
    return proc


def validate_predictions(frames_dir, pred_dir) -> List[str]:
    """Check one confidence-carrying label file per frame image.

    Returns the frame stems in order. Raises ``DataError`` listing missing
    files, or the first ``LabelFormatError`` found.
    """
    stems = [p.stem for p in list_images(frames_dir)]
    pred_dir = Path(pred_dir)
    missing = [s for s in stems if not (pred_dir / f"{s}.txt").is_file()]
    if missing:
        shown = ", ".join(missing[:10]) + (" ..." if len(missing) > 10 else "")
        raise DataError(f"detector produced no predictions for {len(missing)} frame(s) "
                        f"in {frames_dir}: {shown}")
    for s in stems:
        read_labels(pred_dir / f"{s}.txt", require_conf=True)
    return stems


def run_detector(cfg: PipelineConfig, weights, frames_dir, out_dir) -> Path:
    frames_dir, out_dir = Path(frames_dir), Path(out_dir)
    if not list_images(frames_dir):
        raise DataError(f"no frame images in {frames_dir}")
    out_dir.mkdir(parents=True, exist_ok=True)
    run_command(fill_template(cfg.detect_cmd, weights=weights, frames=frames_dir, out=out_dir))
    validate_predictions(frames_dir, out_dir)
    return out_dir


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class CycleRecord:
    cycle_idx: int
    weights_in: str
    weights_ref: Optional[str] = None
    weights_sha256: Optional[str] = None
    dataset_stats: dict = field(default_factory=dict)
    eval: Optional[EvalReport] = None
    wall_time: float = 0.0
    status: str = "ok"
    error: Optional[str] = None

    def to_dict(self, timing: bool = True) -> dict:
        d = asdict(self)
        d["eval"] = self.eval.to_dict() if self.eval is not None else None
        if not timing:
            del d["wall_time"]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CycleRecord":
        d = dict(d)
        if d.get("eval") is not None:
            d["eval"] = EvalReport.from_dict(d["eval"])
        return cls(**d)


def _rel(path: Path, run_dir: Path) -> str:
    try:
        return str(Path(path).relative_to(run_dir))
    except ValueError:
        return str(path)


def _abs(ref: str, run_dir: Path) -> Path:
    p = Path(ref)
    return p if p.is_absolute() else run_dir / p


def cycle_dir(run_dir, cycle_idx: int) -> Path:
    return Path(run_dir) / "cycles" / f"{cycle_idx:03d}"


def run_cycle(cfg: PipelineConfig, weights_in, cycle_idx: int) -> CycleRecord:
    """One detect -> filter -> fine-tune (-> evaluate) round.

    The record is always written to ``record.json``; on failure it is marked
    ``failed`` and the error is re-raised.
    """
    run_dir = Path(cfg.run_dir)
    weights_in = _abs(str(weights_in), run_dir)
    cdir = cycle_dir(run_dir, cycle_idx)
    if cdir.exists():
        shutil.rmtree(cdir)
    cdir.mkdir(parents=True)
    record = CycleRecord(cycle_idx, _rel(weights_in, run_dir))
    start = time.perf_counter()
    try:
        if not weights_in.is_file():
            raise DataError(f"input weights not found: {weights_in}")
        dataset = cdir / "dataset"
        stats = {"videos": 0, "frames": 0, "boxes_in": 0, "boxes_kept": 0, "boxes_dropped": 0}
        for video in cfg.videos():
            pred_dir = run_detector(cfg, weights_in, video, cdir / "predictions" / video.name)
            stems = [p.stem for p in list_images(video)]
            preds = read_video_labels(pred_dir, stems, require_conf=True, missing_ok=False)
            ds = build_pseudo_dataset(video, preds, cfg.filter, cfg.mode, dataset,
                                      cycle=cycle_idx, prefix=f"{video.name}__",
                                      tracker=cfg.tracker)
            stats["videos"] += 1
            for k in ("frames", "boxes_in", "boxes_kept", "boxes_dropped"):
                stats[k] += ds.stats[k]
        write_data_yaml(dataset)
        record.dataset_stats = stats

        out_weights = cdir / "weights" / f"cycle{cycle_idx:03d}{weights_in.suffix}"
        out_weights.parent.mkdir()
        run_command(fill_template(cfg.train_cmd, weights=weights_in, dataset=dataset,
                                  out_weights=out_weights, epochs=cfg.epochs_per_cycle))
        if not out_weights.is_file():
            raise DataError(f"trainer did not write {out_weights}")
        record.weights_ref = _rel(out_weights, run_dir)
        record.weights_sha256 = file_sha256(out_weights)

        if cfg.eval_gt is not None:
            gt = Path(cfg.eval_gt)
            eval_pred = run_detector(cfg, out_weights, gt / "images", cdir / "eval_predictions")
            record.eval = evaluate(eval_pred, gt / "labels")
    except (RohanError, OSError) as exc:
        record.status = "failed"
        record.error = str(exc)
        raise
    finally:
        record.wall_time = time.perf_counter() - start
        (cdir / "record.json").write_text(json.dumps(record.to_dict(), indent=2) + "\n")
    return record


def load_records(run_dir) -> List[CycleRecord]:
    records = []
    for path in sorted((Path(run_dir) / "cycles").glob("*/record.json")):
        records.append(CycleRecord.from_dict(json.loads(path.read_text())))
    return records


def build_report(cfg: PipelineConfig, records: List[CycleRecord]) -> dict:
    """Run summary without timings, so identical runs give identical bytes."""
    ok = [r for r in records if r.status == "ok"]
    return {
        "schema_version": SCHEMA_VERSION,
        "mode": cfg.mode,
        "cycles_planned": cfg.cycles,
        "epochs_per_cycle": cfg.epochs_per_cycle,
        "filter": asdict(cfg.filter),
        "cycles": [r.to_dict(timing=False) for r in records],
        "series": {
            "cycle": [r.cycle_idx for r in ok],
            "precision": [r.eval.precision if r.eval else None for r in ok],
            "recall": [r.eval.recall if r.eval else None for r in ok],
            "map50": [r.eval.map50 if r.eval else None for r in ok],
            "boxes_kept": [r.dataset_stats.get("boxes_kept") for r in ok],
        },
    }


def write_report(cfg: PipelineConfig, records: List[CycleRecord]) -> Path:
    path = Path(cfg.run_dir) / "report.json"
    path.write_text(json.dumps(build_report(cfg, records), indent=2) + "\n")
    return path


def run_pipeline(cfg: PipelineConfig, resume: bool = False) -> List[CycleRecord]:
    """Run ``cfg.cycles`` cycles, chaining weights from one to the next.

    With ``resume`` the completed cycles already on disk are kept and the run
    continues after the last of them; any failed or partial cycle is redone.
    """
    run_dir = Path(cfg.run_dir)
    records: List[CycleRecord] = []
    if resume:
        for r in load_records(run_dir):
            if r.status != "ok" or r.cycle_idx != len(records) + 1:
                break
            if not _abs(r.weights_ref, run_dir).is_file():
                break
            records.append(r)
        for stale in sorted((run_dir / "cycles").glob("*")):
            if stale.is_dir() and int(stale.name) > len(records):
                shutil.rmtree(stale)
    elif (run_dir / "cycles").is_dir() and any((run_dir / "cycles").iterdir()):
        raise DataError(f"{run_dir} already holds cycles; pass resume=True to continue")
    run_dir.mkdir(parents=True, exist_ok=True)

    weights = _abs(records[-1].weights_ref, run_dir) if records else Path(cfg.initial_weights)
    for k in range(len(records) + 1, cfg.cycles + 1):
        try:
            record = run_cycle(cfg, weights, k)
        except (RohanError, OSError):
            partial = cycle_dir(run_dir, k) / "record.json"
            if partial.is_file():
                records.append(CycleRecord.from_dict(json.loads(partial.read_text())))
            write_report(cfg, records)
            raise
        records.append(record)
        write_report(cfg, records)
        logger.info("cycle %d done: %s", k, record.dataset_stats)
        weights = _abs(record.weights_ref, run_dir)
    write_report(cfg, records)
    return records


def check_chain(records: List[CycleRecord], initial_weights=None) -> bool:
    """True when each cycle consumed the weights the previous cycle produced."""
    for prev, cur in zip(records, records[1:]):
        if cur.weights_in != prev.weights_ref:
            return False
    if initial_weights is not None and records:
        return records[0].weights_in == str(initial_weights)
    return True


def metrics_rows(run_dir) -> List[dict]:
    rows = []
    for r in load_records(run_dir):
        ev = r.eval
        rows.append({
            "cycle": r.cycle_idx,
            "status": r.status,
            "frames": r.dataset_stats.get("frames"),
            "boxes_kept": r.dataset_stats.get("boxes_kept"),
            "boxes_dropped": r.dataset_stats.get("boxes_dropped"),
            "precision": ev.precision if ev else None,
            "recall": ev.recall if ev else None,
            "map50": ev.map50 if ev else None,
            "weights_sha256": r.weights_sha256,
        })
    return rows

