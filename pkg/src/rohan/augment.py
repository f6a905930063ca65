"""Artificial glove augmentation for bare-hand datasets.

A glove colour is alpha-blended into the hand region given by a
segmentation mask. Optionally a blood splatter mask is grown from seeded
noise (blur, threshold, close, open) and blended on top, restricted to the
glove. Dataset-level augmentation writes images plus YOLO labels derived
from the connected components of each mask.
"""
from __future__ import annotations

import json
import logging
import math
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
from PIL import Image
from scipy import ndimage

from .core import boxes_from_mask, check_image, check_mask
from .errors import ConfigError, DataError
from .labels import IMAGE_EXTENSIONS, write_labels

logger = logging.getLogger(__name__)

RGB = Tuple[int, int, int]

STERILE_WHITE = (235, 235, 235)
NON_STERILE_BLUE = (90, 140, 190)
LATEX_GREEN = (140, 190, 160)


def _check_rgb(color) -> RGB:
    color = tuple(int(c) for c in color)
    if len(color) != 3 or any(not 0 <= c <= 255 for c in color):
        raise ValueError(f"invalid RGB colour: {color}")
    return color


@dataclass(frozen=True)
class BloodParams:
    seed: int = 0
    density: float = 0.005
    blur_sigma: float = 4.0
    blob_threshold: float = 0.02
    close_radius: int = 3
    open_radius: int = 2
    blood_color: RGB = (120, 10, 15)
    blood_opacity: float = 0.8

    def __post_init__(self):
        object.__setattr__(self, "blood_color", _check_rgb(self.blood_color))
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if not 0.0 <= self.density < 1.0:
            raise ValueError("density must be in [0, 1)")
        if self.blur_sigma <= 0:
            raise ValueError("blur_sigma must be positive")
        if not 0.0 < self.blob_threshold < 1.0:
            raise ValueError("blob_threshold must be in (0, 1)")
        if self.close_radius < 0 or self.open_radius < 0:
            raise ValueError("morphology radii must be non-negative")
        if not 0.0 <= self.blood_opacity <= 1.0:
            raise ValueError("blood_opacity must be in [0, 1]")


@dataclass(frozen=True)
class GloveSpec:
    color: RGB
    opacity: float = 0.5
    blood: Optional[BloodParams] = None
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "color", _check_rgb(self.color))
        if not 0.0 <= self.opacity <= 1.0:
            raise ValueError("opacity must be in [0, 1]")


DEFAULT_PALETTE = (
    GloveSpec(STERILE_WHITE, 0.5, BloodParams(), "sterile_white"),
    GloveSpec(NON_STERILE_BLUE, 0.5, BloodParams(), "non_sterile_blue"),
    GloveSpec(LATEX_GREEN, 0.5, BloodParams(), "latex_green"),
)


def _blend(img, mask, color, alpha):
    img = check_image(img)
    mask = check_mask(mask)
    if img.shape[:2] != mask.shape:
        raise ValueError(f"image {img.shape[1]}x{img.shape[0]} and mask "
                         f"{mask.shape[1]}x{mask.shape[0]} differ in size")
    out = img.copy()
    px = img[mask].astype(np.float64)
    blended = alpha * np.asarray(color, dtype=np.float64) + (1.0 - alpha) * px
    out[mask] = np.floor(blended + 0.5).astype(np.uint8)
    return out


def overlay_glove(img: np.ndarray, mask: np.ndarray, spec: GloveSpec) -> np.ndarray:
    """Blend the glove colour into every masked pixel (round half up)."""
    return _blend(img, mask, spec.color, spec.opacity)


def apply_blood(img: np.ndarray, blood: np.ndarray, color: RGB, opacity: float) -> np.ndarray:
    return _blend(img, blood, _check_rgb(color), opacity)


def disk(radius: int) -> np.ndarray:
    r = int(radius)
    yy, xx = np.mgrid[-r:r + 1, -r:r + 1]
    return xx * xx + yy * yy <= r * r


def gaussian_blur(field: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian, kernel radius ceil(3*sigma), clamp-to-edge borders."""
    return ndimage.gaussian_filter(field.astype(np.float64), sigma, mode="nearest",
                                   radius=int(math.ceil(3 * sigma)))


def binary_close(mask: np.ndarray, radius: int) -> np.ndarray:
    if radius == 0:
        return mask
    se = disk(radius)
    return ndimage.binary_erosion(ndimage.binary_dilation(mask, se), se)


def binary_open(mask: np.ndarray, radius: int) -> np.ndarray:
    if radius == 0:
        return mask
    se = disk(radius)
    return ndimage.binary_dilation(ndimage.binary_erosion(mask, se), se)


def synth_blood_mask(mask: np.ndarray, p: BloodParams) -> np.ndarray:
    """Splatter-shaped blobs inside ``mask``, fully determined by ``p.seed``."""
    mask = check_mask(mask)
    noise = np.random.default_rng(p.seed).random(mask.shape)
    seeds = noise < p.density
    if not seeds.any():
        return np.zeros_like(mask)
    blobs = gaussian_blur(seeds, p.blur_sigma) > p.blob_threshold
    blobs = binary_open(binary_close(blobs, p.close_radius), p.open_radius)
    return blobs & mask


def augment_image(img: np.ndarray, mask: np.ndarray, spec: GloveSpec,
                  blood: Optional[BloodParams] = None) -> np.ndarray:
    out = overlay_glove(img, mask, spec)
    if blood is not None:
        splatter = synth_blood_mask(mask, blood)
        out = apply_blood(out, splatter, blood.blood_color, blood.blood_opacity)
    return out


# -- dataset level -------------------------------------------------------------

@dataclass(frozen=True)
class AugmentPolicy:
    """How a glove spec and blood are picked for each image."""

    blood_probability: float = 0.5
    min_component_area: int = 1
    image_format: str = "jpg"
    jpeg_quality: int = 95

    def __post_init__(self):
        if not 0.0 <= self.blood_probability <= 1.0:
            raise ValueError("blood_probability must be in [0, 1]")
        if self.image_format not in ("jpg", "png"):
            raise ValueError("image_format must be 'jpg' or 'png'")


@dataclass
class ImageAssignment:
    spec_index: int
    blood_seed: Optional[int]


@dataclass
class AugmentSummary:
    images: int = 0
    boxes: int = 0
    skipped: List[Tuple[str, str]] = field(default_factory=list)
    assignments: dict = field(default_factory=dict)
    status: str = "ok"

    def merge(self, other: "AugmentSummary") -> "AugmentSummary":
        return AugmentSummary(
            self.images + other.images,
            self.boxes + other.boxes,
            self.skipped + other.skipped,
            {**self.assignments, **other.assignments},
            self.status if self.status == other.status else "partial",
        )

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "images": self.images,
            "boxes": self.boxes,
            "skipped": [{"name": n, "reason": r} for n, r in sorted(self.skipped)],
            "assignments": {k: asdict(v) for k, v in sorted(self.assignments.items())},
        }


def choose_spec(name: str, n_specs: int, has_blood: Sequence[bool],
                policy: AugmentPolicy, master_seed: int) -> ImageAssignment:
    """Per-image draw that depends only on (master_seed, name).

    Keyed by name rather than position so the assignment survives reordering
    and parallel processing.
    """
    seq = np.random.SeedSequence(master_seed, spawn_key=(zlib.crc32(name.encode()),))
    rng = np.random.default_rng(seq)
    idx = int(rng.integers(n_specs))
    blood_draw = rng.random()
    blood_seed = int(rng.integers(2**63))
    if has_blood[idx] and blood_draw < policy.blood_probability:
        return ImageAssignment(idx, blood_seed)
    return ImageAssignment(idx, None)


def read_rgb(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8).copy()


def read_mask(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("L")) > 0


def write_rgb(path, img: np.ndarray, jpeg_quality: int = 95) -> None:
    path = Path(path)
    im = Image.fromarray(img, mode="RGB")
    if path.suffix.lower() in (".jpg", ".jpeg"):
        im.save(path, quality=jpeg_quality)
    else:
        im.save(path)


def _augment_one(image_path: Path, mask_dir: Path, out_root: Path,
                 palette: Sequence[GloveSpec], policy: AugmentPolicy,
                 master_seed: int) -> AugmentSummary:
    name = image_path.stem
    result = AugmentSummary()
    mask_path = mask_dir / f"{name}.png"
    if not mask_path.is_file():
        result.skipped.append((name, "missing mask"))
        return result
    try:
        img = read_rgb(image_path)
    except (OSError, ValueError) as exc:
        result.skipped.append((name, f"unreadable image: {exc}"))
        return result
    try:
        mask = read_mask(mask_path)
    except (OSError, ValueError) as exc:
        result.skipped.append((name, f"unreadable mask: {exc}"))
        return result
    if mask.shape != img.shape[:2]:
        result.skipped.append((name, "mask size differs from image size"))
        return result

    choice = choose_spec(name, len(palette), [s.blood is not None for s in palette],
                         policy, master_seed)
    spec = palette[choice.spec_index]
    blood = None
    if choice.blood_seed is not None:
        blood = replace(spec.blood, seed=choice.blood_seed)
    out = augment_image(img, mask, spec, blood)
    boxes = boxes_from_mask(mask, policy.min_component_area)

    write_rgb(out_root / "images" / f"{name}.{policy.image_format}", out,
              policy.jpeg_quality)
    write_labels(out_root / "labels" / f"{name}.txt", boxes)
    result.images = 1
    result.boxes = len(boxes)
    result.assignments[name] = choice
    return result


def augment_dataset(in_root, out_root, palette: Sequence[GloveSpec] = DEFAULT_PALETTE,
                    policy: AugmentPolicy = AugmentPolicy(), master_seed: int = 0,
                    workers: int = 1) -> AugmentSummary:
    """Augment ``<in_root>/images`` using ``<in_root>/masks/<name>.png``.

    Writes ``<out_root>/images``, ``<out_root>/labels`` and
    ``<out_root>/summary.json``. Images without a usable mask are skipped
    and listed in the summary rather than aborting the run.
    """
    if not palette:
        raise ConfigError("palette is empty")
    in_root, out_root = Path(in_root), Path(out_root)
    image_dir, mask_dir = in_root / "images", in_root / "masks"
    if not in_root.is_dir():
        raise DataError(f"input root not found: {in_root}")
    images = []
    if image_dir.is_dir():
        images = sorted(p for p in image_dir.iterdir()
                        if p.is_file() and p.suffix.lower() in IMAGE_EXTENSIONS)
    (out_root / "images").mkdir(parents=True, exist_ok=True)
    (out_root / "labels").mkdir(parents=True, exist_ok=True)

    def work(path):
        return _augment_one(path, mask_dir, out_root, palette, policy, master_seed)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(work, images))
    else:
        parts = [work(p) for p in images]

    summary = AugmentSummary()
    for part in parts:
        summary = summary.merge(part)
    for name, reason in summary.skipped:
        logger.warning("skipped %s: %s", name, reason)
    (out_root / "summary.json").write_text(json.dumps(summary.to_dict(), indent=2) + "\n")
    return summary


def load_palette(path) -> Tuple[List[GloveSpec], AugmentPolicy]:
    """Read a JSON palette file.

    Shape::

        {"gloves": [{"name": "white", "color": [235, 235, 235], "opacity": 0.5}],
         "blood": {"density": 0.005, ...} | null,
         "blood_probability": 0.5}

    A glove entry may carry its own ``"blood"`` object, which overrides the
    top-level one; ``"blood": null`` on an entry disables blood for it.
    """
    try:
        cfg = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    try:
        default_blood = cfg.get("blood", {})
        default_blood = BloodParams(**default_blood) if default_blood is not None else None
        specs = []
        for entry in cfg.get("gloves", []):
            entry = dict(entry)
            if "blood" in entry:
                b = entry.pop("blood")
                blood = BloodParams(**b) if b is not None else None
            else:
                blood = default_blood
            specs.append(GloveSpec(color=entry.pop("color"),
                                   opacity=entry.pop("opacity", cfg.get("opacity", 0.5)),
                                   blood=blood, name=entry.pop("name", "")))
        policy_keys = {k: cfg[k] for k in ("blood_probability", "min_component_area",
                                           "image_format", "jpeg_quality") if k in cfg}
        policy = AugmentPolicy(**policy_keys)
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"{path}: invalid palette: {exc}") from None
    if not specs:
        specs = list(DEFAULT_PALETTE)
    return specs, policy
