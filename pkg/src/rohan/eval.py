"""Precision, recall and mAP50 for single-class box detection."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from .core import BBox, iou
from .errors import DataError
from .labels import read_labels

SCHEMA_VERSION = 1


@dataclass
class EvalReport:
    precision: float
    recall: float
    map50: float
    pr_curve: List[Tuple[float, float]] = field(default_factory=list)
    op_conf: Optional[float] = None
    tp: int = 0
    fp: int = 0
    fn: int = 0
    iou_thr: float = 0.5

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "precision": self.precision,
            "recall": self.recall,
            "map50": self.map50,
            "iou_thr": self.iou_thr,
            "op_conf": self.op_conf,
            "counts": {"tp": self.tp, "fp": self.fp, "fn": self.fn},
            "pr_curve": [list(pt) for pt in self.pr_curve],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        c = d.get("counts", {})
        return cls(d["precision"], d["recall"], d["map50"],
                   [tuple(pt) for pt in d.get("pr_curve", [])], d.get("op_conf"),
                   c.get("tp", 0), c.get("fp", 0), c.get("fn", 0), d.get("iou_thr", 0.5))


def _conf(b: BBox) -> float:
    return 1.0 if b.conf is None else b.conf


def confidence_order(preds: Sequence[BBox]) -> List[int]:
    """Indices by descending confidence; ties keep input order."""
    return sorted(range(len(preds)), key=lambda k: -_conf(preds[k]))


def match_detections(preds: Sequence[BBox], gts: Sequence[BBox],
                     iou_thr: float = 0.5) -> List[bool]:
    """Greedy matching; returns a TP flag per prediction, in input order.

    Predictions are visited by descending confidence and each claims the
    still-unmatched ground truth with the highest IoU, provided it reaches
    ``iou_thr``. Equal IoUs go to the lowest ground-truth index.
    """
    flags = [False] * len(preds)
    taken = [False] * len(gts)
    for k in confidence_order(preds):
        best, best_iou = -1, -1.0
        for g, gt in enumerate(gts):
            if taken[g]:
                continue
            v = iou(preds[k], gt)
            if v >= iou_thr and v > best_iou:
                best, best_iou = g, v
        if best >= 0:
            taken[best] = True
            flags[k] = True
    return flags


def pr_points(flags: Sequence[bool], n_gt: int) -> List[Tuple[float, float]]:
    """Cumulative (recall, precision) after each flag."""
    points = []
    tp = 0
    for i, f in enumerate(flags, start=1):
        tp += bool(f)
        points.append((tp / n_gt if n_gt else 0.0, tp / i))
    return points


def average_precision(flags: Sequence[bool], n_gt: int) -> float:
    """All-point interpolated AP of confidence-ordered TP/FP flags.

    Precision is replaced by its running maximum from the right (the
    monotone envelope) and integrated exactly over recall. Recall only
    moves at a TP, by ``1/n_gt``. With no ground truth AP is 0.
    """
    if n_gt <= 0:
        return 0.0
    points = pr_points(flags, n_gt)
    ap = 0.0
    envelope = 0.0
    for (_, prec), f in zip(reversed(points), reversed(flags)):
        envelope = max(envelope, prec)
        if f:
            ap += envelope
    return ap / n_gt


def _best_f1(pooled: Sequence[Tuple[float, bool]], n_gt: int):
    """Operating point maximizing F1 over distinct confidence cutoffs.

    Ties in F1 go to the highest cutoff. Returns (conf, tp, fp).
    """
    best = (None, 0, 0)
    best_f1 = -1.0
    tp = fp = 0
    i = 0
    while i < len(pooled):
        conf = pooled[i][0]
        while i < len(pooled) and pooled[i][0] == conf:
            tp += pooled[i][1]
            fp += not pooled[i][1]
            i += 1
        p = tp / (tp + fp)
        r = tp / n_gt if n_gt else 0.0
        f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
        if f1 > best_f1:
            best_f1 = f1
            best = (conf, tp, fp)
    return best


def evaluate_sets(preds: Sequence[Sequence[BBox]], gts: Sequence[Sequence[BBox]],
                  iou_thr: float = 0.5, conf: Optional[float] = None) -> EvalReport:
    """Pooled evaluation over paired per-image prediction / ground-truth lists.

    Precision and recall are reported at the F1-maximizing confidence
    cutoff unless ``conf`` fixes one.
    """
    if len(preds) != len(gts):
        raise ValueError("preds and gts must have one entry per image")
    pooled = []  # (conf, is_tp), image order then within-image order
    n_gt = 0
    for p_img, g_img in zip(preds, gts):
        flags = match_detections(p_img, g_img, iou_thr)
        pooled.extend((_conf(b), f) for b, f in zip(p_img, flags))
        n_gt += len(g_img)
    pooled.sort(key=lambda t: -t[0])  # stable

    flags = [f for _, f in pooled]
    ap = average_precision(flags, n_gt)
    curve = pr_points(flags, n_gt)

    if conf is None:
        op_conf, tp, fp = _best_f1(pooled, n_gt)
    else:
        op_conf = conf
        kept = [f for c, f in pooled if c >= conf]
        tp, fp = sum(kept), len(kept) - sum(kept)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / n_gt if n_gt else 0.0
    return EvalReport(precision, recall, ap, curve, op_conf, tp, fp, n_gt - tp, iou_thr)


def evaluate(pred_root, gt_root, iou_thr: float = 0.5,
             conf: Optional[float] = None) -> EvalReport:
    """Evaluate a directory of prediction files against ground-truth labels.

    Both directories hold YOLO ``.txt`` files (a ``labels`` subdirectory is
    used when present). A missing prediction file means no predictions; a
    missing ground-truth file means an image with no hands. Prediction
    files need the confidence field.
    """
    pred_dir, gt_dir = _label_dir(pred_root), _label_dir(gt_root)
    names = sorted({p.name for p in gt_dir.glob("*.txt")}
                   | {p.name for p in pred_dir.glob("*.txt")})
    preds, gts = [], []
    for name in names:
        gt_path, pred_path = gt_dir / name, pred_dir / name
        gts.append(read_labels(gt_path) if gt_path.is_file() else [])
        preds.append(read_labels(pred_path, require_conf=True) if pred_path.is_file() else [])
    return evaluate_sets(preds, gts, iou_thr, conf)


def _label_dir(root) -> Path:
    root = Path(root)
    if not root.is_dir():
        raise DataError(f"not a directory: {root}")
    sub = root / "labels"
    return sub if sub.is_dir() else root
