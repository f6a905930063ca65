"""Shared box/mask types and geometric primitives.

Boxes are stored the way YOLO label files store them: normalized center
and size. Pixel corner boxes only appear at I/O and rendering boundaries.
Images and masks are plain numpy arrays (``HxWx3`` uint8 and ``HxW`` bool).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage

HAND_CLASS = 0

XYXY = Tuple[float, float, float, float]


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box in normalized ``(cx, cy, w, h)`` form.

    ``conf`` is set for detector output and ``None`` for ground truth.
    """

    cx: float
    cy: float
    w: float
    h: float
    conf: Optional[float] = None
    class_id: int = HAND_CLASS

    def __post_init__(self):
        if not (0.0 <= self.cx <= 1.0 and 0.0 <= self.cy <= 1.0):
            raise ValueError(f"box center out of [0,1]: ({self.cx}, {self.cy})")
        if not (0.0 < self.w <= 1.0 and 0.0 < self.h <= 1.0):
            raise ValueError(f"box size must be in (0,1]: ({self.w}, {self.h})")
        if self.conf is not None and not 0.0 <= self.conf <= 1.0:
            raise ValueError(f"confidence out of [0,1]: {self.conf}")
        if self.class_id < 0:
            raise ValueError(f"negative class id: {self.class_id}")

    @property
    def center(self) -> Tuple[float, float]:
        return self.cx, self.cy

    @property
    def area(self) -> float:
        return self.w * self.h

    def xyxy(self) -> XYXY:
        return (self.cx - self.w / 2, self.cy - self.h / 2,
                self.cx + self.w / 2, self.cy + self.h / 2)

    @classmethod
    def from_xyxy(cls, x1, y1, x2, y2, conf=None, class_id=HAND_CLASS) -> "BBox":
        return cls((x1 + x2) / 2, (y1 + y2) / 2, x2 - x1, y2 - y1,
                   conf=conf, class_id=class_id)

    def clamped(self) -> "BBox":
        """Clip the box edges to the unit square."""
        x1, y1, x2, y2 = self.xyxy()
        x1, y1 = max(x1, 0.0), max(y1, 0.0)
        x2, y2 = min(x2, 1.0), min(y2, 1.0)
        return BBox.from_xyxy(x1, y1, x2, y2, conf=self.conf, class_id=self.class_id)


@dataclass
class FrameDetections:
    """Boxes predicted (or labeled) on one frame of a video."""

    frame_idx: int
    boxes: list = field(default_factory=list)

    def __len__(self):
        return len(self.boxes)


def box_iou_xyxy(a: Sequence[float], b: Sequence[float]) -> float:
    """IoU of two corner boxes ``(x1, y1, x2, y2)`` in any common unit.

    Touching boxes have zero intersection and therefore IoU 0.
    """
    iw = min(a[2], b[2]) - max(a[0], b[0])
    ih = min(a[3], b[3]) - max(a[1], b[1])
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter
    if union <= 0:
        return 0.0
    return inter / union


def iou(a: BBox, b: BBox) -> float:
    return box_iou_xyxy(a.xyxy(), b.xyxy())


def iou_matrix(a: Sequence[XYXY], b: Sequence[XYXY]) -> np.ndarray:
    """Pairwise IoU between two lists of corner boxes, shape ``(len(a), len(b))``."""
    out = np.zeros((len(a), len(b)))
    for i, ba in enumerate(a):
        for j, bb in enumerate(b):
            out[i, j] = box_iou_xyxy(ba, bb)
    return out


def to_pixel(b: BBox, width: int, height: int) -> Tuple[int, int, int, int]:
    """Integer pixel corners ``(x1, y1, x2, y2)``, clipped to the image."""
    if width <= 0 or height <= 0:
        raise ValueError(f"image dimensions must be positive, got {width}x{height}")
    x1, y1, x2, y2 = b.xyxy()
    x1 = min(max(int(round(x1 * width)), 0), width)
    x2 = min(max(int(round(x2 * width)), 0), width)
    y1 = min(max(int(round(y1 * height)), 0), height)
    y2 = min(max(int(round(y2 * height)), 0), height)
    return x1, y1, x2, y2


def to_normalized(x1, y1, x2, y2, width: int, height: int, conf=None,
                  class_id=HAND_CLASS) -> BBox:
    if width <= 0 or height <= 0:
        raise ValueError(f"image dimensions must be positive, got {width}x{height}")
    return BBox((x1 + x2) / (2 * width), (y1 + y2) / (2 * height),
                (x2 - x1) / width, (y2 - y1) / height,
                conf=conf, class_id=class_id)


def check_mask(mask: np.ndarray) -> np.ndarray:
    mask = np.asarray(mask)
    if mask.ndim != 2 or mask.size == 0:
        raise ValueError(f"mask must be a non-empty 2-D array, got shape {mask.shape}")
    return mask.astype(bool, copy=False)


def check_image(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3 or img.dtype != np.uint8:
        raise ValueError(f"expected HxWx3 uint8 image, got {img.shape} {img.dtype}")
    return img


def bbox_from_mask(mask: np.ndarray) -> Optional[BBox]:
    """Tight normalized box around all foreground pixels, or ``None`` if empty.

    Each pixel is treated as a unit cell, so a single pixel at column ``x``
    spans ``[x, x+1)``.
    """
    mask = check_mask(mask)
    rows = np.flatnonzero(mask.any(axis=1))
    if rows.size == 0:
        return None
    cols = np.flatnonzero(mask.any(axis=0))
    h, w = mask.shape
    return to_normalized(int(cols[0]), int(rows[0]), int(cols[-1]) + 1,
                         int(rows[-1]) + 1, w, h)


_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


def mask_components(mask: np.ndarray, min_area: int = 1) -> list:
    """Split a mask into 8-connected components, one boolean mask each.

    Components smaller than ``min_area`` pixels are dropped. Order follows
    the raster scan position of each component's first pixel.
    """
    mask = check_mask(mask)
    labels, n = ndimage.label(mask, structure=_EIGHT_CONNECTED)
    comps = []
    for k in range(1, n + 1):
        comp = labels == k
        if comp.sum() >= min_area:
            comps.append(comp)
    return comps


def boxes_from_mask(mask: np.ndarray, min_area: int = 1) -> list:
    """One tight box per connected hand instance in ``mask``."""
    return [bbox_from_mask(c) for c in mask_components(mask, min_area)]
