"""Pseudo-label cleaning for video frames.

Two independent filters remove detector output that is unlikely to be a
real hand:

* ``spatial_filter`` drops boxes whose center lies far from the mean
  center of a short block of frames (hands stay in a limited area).
* ``track_length_filter`` drops boxes belonging to short-lived tracks.

``build_pseudo_dataset`` applies one of them and writes a YOLO dataset.
"""
from __future__ import annotations

import json
import math
import shutil
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

from .core import FrameDetections
from .errors import DataError
from .labels import list_images, write_labels
from .track import Track, TrackerConfig, run_tracker

MODES = ("none", "spatial", "tracking")


@dataclass(frozen=True)
class FilterParams:
    window_len: int = 10
    radius: float = 0.35
    min_track_len: int = 5
    conf_floor: float = 0.25
    sliding: bool = False
    drop_empty: bool = False

    def __post_init__(self):
        if self.window_len < 1:
            raise ValueError("window_len must be >= 1")
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if self.min_track_len < 1:
            raise ValueError("min_track_len must be >= 1")
        if not 0.0 <= self.conf_floor <= 1.0:
            raise ValueError("conf_floor must be in [0, 1]")


def _block_mean(frames: Sequence[FrameDetections]):
    centers = [(b.cx, b.cy) for f in frames for b in f.boxes]
    if not centers:
        return None
    n = len(centers)
    return sum(c[0] for c in centers) / n, sum(c[1] for c in centers) / n


def _keep_near(frame: FrameDetections, mean, radius) -> FrameDetections:
    if mean is None:
        return FrameDetections(frame.frame_idx, list(frame.boxes))
    mx, my = mean
    kept = [b for b in frame.boxes if math.hypot(b.cx - mx, b.cy - my) <= radius]
    return FrameDetections(frame.frame_idx, kept)


def spatial_filter(video: Sequence[FrameDetections],
                   p: FilterParams = FilterParams()) -> List[FrameDetections]:
    """Area-of-interest filter.

    Frames are split into consecutive blocks of ``p.window_len`` (the last
    block may be shorter). Within a block every box whose center is farther
    than ``p.radius`` from the mean of all centers in the block is removed.
    With ``p.sliding`` each frame instead uses the window of
    ``p.window_len`` frames centered on it.
    """
    video = list(video)
    n = len(video)
    w = p.window_len
    out = []
    if p.sliding:
        half = (w - 1) // 2
        for i, frame in enumerate(video):
            lo = max(0, min(i - half, n - w))
            out.append(_keep_near(frame, _block_mean(video[lo:lo + w]), p.radius))
        return out
    for start in range(0, n, w):
        block = video[start:start + w]
        mean = _block_mean(block)
        out.extend(_keep_near(f, mean, p.radius) for f in block)
    return out


def track_length_filter(tracks: Sequence[Track], p: FilterParams = FilterParams(),
                        frame_indices: Optional[Sequence[int]] = None) -> List[FrameDetections]:
    """Keep only observations of tracks with at least ``p.min_track_len`` of them.

    The result lists frames in increasing order. If ``frame_indices`` is
    given, every one of those frames appears (possibly empty); otherwise
    only frames with surviving boxes do.
    """
    per_frame = {}
    if frame_indices is not None:
        per_frame = {f: [] for f in frame_indices}
    for track in sorted(tracks, key=lambda t: t.id):
        if len(track) < p.min_track_len:
            continue
        for f, box in track.observations:
            per_frame.setdefault(f, []).append(box)
    return [FrameDetections(f, per_frame[f]) for f in sorted(per_frame)]


def apply_conf_floor(video: Sequence[FrameDetections], floor: float) -> List[FrameDetections]:
    return [FrameDetections(f.frame_idx,
                            [b for b in f.boxes if b.conf is None or b.conf >= floor])
            for f in video]


def filter_video(video: Sequence[FrameDetections], mode: str,
                 p: FilterParams = FilterParams(),
                 tracker: Optional[TrackerConfig] = None) -> List[FrameDetections]:
    """Confidence floor followed by the filter named by ``mode``."""
    if mode not in MODES:
        raise ValueError(f"unknown filter mode {mode!r}; expected one of {MODES}")
    video = apply_conf_floor(video, p.conf_floor)
    if mode == "spatial":
        return spatial_filter(video, p)
    if mode == "tracking":
        if tracker is None:
            tracker = TrackerConfig(min_conf=p.conf_floor)
        tracks = run_tracker(video, tracker)
        return track_length_filter(tracks, p, [f.frame_idx for f in video])
    return video


@dataclass
class PseudoDataset:
    root: Path
    frames: list = field(default_factory=list)  # (image path, FrameDetections)
    provenance: dict = field(default_factory=dict)

    @property
    def stats(self) -> dict:
        return self.provenance.get("stats", {})


def build_pseudo_dataset(frames_dir, predictions: Sequence[FrameDetections],
                         p: FilterParams = FilterParams(), mode: str = "none",
                         out=None, cycle: Optional[int] = None, prefix: str = "",
                         tracker: Optional[TrackerConfig] = None) -> PseudoDataset:
    """Filter predictions for one video and write them as a YOLO dataset.

    ``predictions[k].frame_idx`` indexes the name-sorted images of
    ``frames_dir``. Images go to ``<out>/images`` and labels (without
    confidence) to ``<out>/labels``, both named ``<prefix><stem>``; a
    provenance record is written to ``<out>/provenance/<prefix or
    'frames'>.json``. Several videos may share one ``out``.
    """
    if out is None:
        raise ValueError("an output directory is required")
    images = list_images(frames_dir)
    for f in predictions:
        if not 0 <= f.frame_idx < len(images):
            raise DataError(f"no image for predicted frame {f.frame_idx} in {frames_dir}")
    by_idx = {f.frame_idx: f for f in predictions}
    video = [by_idx.get(i, FrameDetections(i, [])) for i in range(len(images))]

    filtered = filter_video(video, mode, p, tracker)
    boxes_in = sum(len(f) for f in video)
    boxes_kept = sum(len(f) for f in filtered)
    if p.drop_empty:
        filtered = [f for f in filtered if f.boxes]

    out = Path(out)
    (out / "images").mkdir(parents=True, exist_ok=True)
    (out / "labels").mkdir(parents=True, exist_ok=True)
    (out / "provenance").mkdir(parents=True, exist_ok=True)
    frames = []
    for f in filtered:
        src = images[f.frame_idx]
        dst = out / "images" / f"{prefix}{src.name}"
        shutil.copyfile(src, dst)
        write_labels(out / "labels" / f"{prefix}{src.stem}.txt", f.boxes, with_conf=False)
        frames.append((dst, f))

    provenance = {
        "cycle": cycle,
        "frames_dir": str(frames_dir),
        "mode": mode,
        "filter": asdict(p),
        "stats": {
            "frames": len(frames),
            "boxes_in": boxes_in,
            "boxes_kept": boxes_kept,
            "boxes_dropped": boxes_in - boxes_kept,
        },
    }
    name = prefix.rstrip("_") or "frames"
    (out / "provenance" / f"{name}.json").write_text(
        json.dumps(provenance, indent=2, sort_keys=True) + "\n")
    return PseudoDataset(out, frames, provenance)


def write_data_yaml(root, names=("hand",)) -> Path:
    """Minimal dataset descriptor understood by common YOLO trainers."""
    root = Path(root)
    lines = [f"path: {root.resolve()}", "train: images", "val: images",
             f"nc: {len(names)}", "names: [" + ", ".join(names) + "]"]
    path = root / "data.yaml"
    path.write_text("\n".join(lines) + "\n")
    return path
