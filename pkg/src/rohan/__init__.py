"""Robust hand detection tooling: artificial-glove augmentation, pseudo-label
refinement with spatial and tracking filters, detection metrics, and an
iterative self-training loop around external detector commands."""

__version__ = "0.1.0"

from .core import BBox, FrameDetections, bbox_from_mask, boxes_from_mask, iou, to_normalized, to_pixel
from .augment import BloodParams, GloveSpec, apply_blood, augment_dataset, overlay_glove, synth_blood_mask
from .track import Track, TrackerConfig, assign, run_tracker, step
from .refine import FilterParams, build_pseudo_dataset, spatial_filter, track_length_filter
from .eval import EvalReport, average_precision, evaluate, evaluate_sets, match_detections
from .pipeline import CycleRecord, PipelineConfig, load_config, run_cycle, run_pipeline
