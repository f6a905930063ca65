"""Precision, recall and AP on a tiny hand-checkable set.

Three images, five hands, six predictions. Sorted by confidence the
predictions come out TP, TP, FP, FP, TP, FP, so the envelope gives
AP = (1 + 1 + 3/5) / 5 = 0.52.
"""
from rohan.core import BBox
from rohan.eval import evaluate_sets

gts = [
    [BBox(0.2, 0.2, 0.2, 0.2), BBox(0.7, 0.7, 0.2, 0.3)],
    [BBox(0.5, 0.5, 0.4, 0.4)],
    [BBox(0.3, 0.6, 0.2, 0.2), BBox(0.8, 0.2, 0.1, 0.1)],
]
preds = [
    [BBox(0.21, 0.2, 0.2, 0.2, conf=0.95), BBox(0.6, 0.75, 0.2, 0.3, conf=0.40)],
    [BBox(0.5, 0.52, 0.4, 0.4, conf=0.85), BBox(0.52, 0.5, 0.38, 0.4, conf=0.70)],
    [BBox(0.3, 0.62, 0.2, 0.2, conf=0.60), BBox(0.1, 0.9, 0.1, 0.1, conf=0.80)],
]

r = evaluate_sets(preds, gts)
print(f"mAP50 {r.map50:.3f}; best F1 at conf >= {r.op_conf}: P {r.precision:.2f} R {r.recall:.2f}")
for recall, precision in r.pr_curve:
    print(f"  R {recall:.2f}  P {precision:.2f}")

fixed = evaluate_sets(preds, gts, conf=0.8)
print(f"at conf >= 0.8: TP {fixed.tp} FP {fixed.fp} FN {fixed.fn}")
