"""YOLO text label files.

One ``.txt`` per image with the image's basename. Each line is
``class cx cy w h`` with normalized coordinates; prediction files append a
sixth ``conf`` field. Numbers are written positionally with exactly six
significant digits, which makes write -> parse -> write byte-stable.
"""
from __future__ import annotations

from decimal import Decimal
from pathlib import Path
from typing import Iterable, List, Optional

from .core import BBox, FrameDetections
from .errors import DataError, LabelFormatError

IMAGE_EXTENSIONS = (".jpg", ".jpeg", ".png", ".bmp", ".tif", ".tiff", ".webp")


def format_number(x: float) -> str:
    return format(Decimal(f"{x:.5e}"), "f")


def format_box(b: BBox, with_conf: Optional[bool] = None) -> str:
    if with_conf is None:
        with_conf = b.conf is not None
    fields = [str(b.class_id)] + [format_number(v) for v in (b.cx, b.cy, b.w, b.h)]
    if with_conf:
        if b.conf is None:
            raise ValueError("box has no confidence to write")
        fields.append(format_number(b.conf))
    return " ".join(fields)


def format_labels(boxes: Iterable[BBox], with_conf: Optional[bool] = None) -> str:
    return "".join(format_box(b, with_conf) + "\n" for b in boxes)


def parse_line(line: str, path="<string>", line_no: int = 1,
               require_conf: bool = False) -> BBox:
    fields = line.split()
    if len(fields) not in (5, 6):
        raise LabelFormatError(path, line_no, f"expected 5 or 6 fields, got {len(fields)}")
    if require_conf and len(fields) != 6:
        raise LabelFormatError(path, line_no, "prediction line is missing the confidence field")
    try:
        class_id = int(fields[0])
        values = [float(f) for f in fields[1:]]
    except ValueError as exc:
        raise LabelFormatError(path, line_no, str(exc)) from None
    conf = values[4] if len(values) == 5 else None
    try:
        return BBox(*values[:4], conf=conf, class_id=class_id)
    except ValueError as exc:
        raise LabelFormatError(path, line_no, str(exc)) from None


def parse_labels(text: str, path="<string>", require_conf: bool = False) -> List[BBox]:
    boxes = []
    for i, line in enumerate(text.splitlines(), start=1):
        if line.strip():
            boxes.append(parse_line(line, path, i, require_conf))
    return boxes


def read_labels(path, require_conf: bool = False) -> List[BBox]:
    path = Path(path)
    return parse_labels(path.read_text(), path, require_conf)


def write_labels(path, boxes: Iterable[BBox], with_conf: Optional[bool] = None) -> None:
    Path(path).write_text(format_labels(boxes, with_conf))


def list_images(directory) -> List[Path]:
    """Image files directly under ``directory``, sorted by name."""
    directory = Path(directory)
    if not directory.is_dir():
        raise DataError(f"not a directory: {directory}")
    return sorted(p for p in directory.iterdir()
                  if p.is_file() and p.suffix.lower() in IMAGE_EXTENSIONS)


def read_video_labels(label_dir, stems: List[str], require_conf: bool = False,
                      missing_ok: bool = True) -> List[FrameDetections]:
    """Load one label file per stem; frame index is the stem's position.

    With ``missing_ok`` an absent file means no boxes on that frame.
    """
    label_dir = Path(label_dir)
    frames = []
    for idx, stem in enumerate(stems):
        path = label_dir / f"{stem}.txt"
        if path.is_file():
            boxes = read_labels(path, require_conf)
        elif missing_ok:
            boxes = []
        else:
            raise DataError(f"missing label file: {path}")
        frames.append(FrameDetections(idx, boxes))
    return frames


def label_stems(label_dir) -> List[str]:
    label_dir = Path(label_dir)
    if not label_dir.is_dir():
        raise DataError(f"not a directory: {label_dir}")
    return sorted(p.stem for p in label_dir.glob("*.txt"))
