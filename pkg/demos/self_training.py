"""Three self-training cycles with stand-in detector and trainer commands.

The "detector" writes a fixed box on every frame plus a random flicker,
the "trainer" copies its input weights. Both are plain shell snippets run
through the same templates a real YOLO setup would use.
"""
import json
import sys
import tempfile
from pathlib import Path

import numpy as np
from PIL import Image

from rohan.pipeline import PipelineConfig, metrics_rows, run_pipeline
from rohan.refine import FilterParams

work = Path(tempfile.mkdtemp(prefix="rohan-demo-"))
frames = work / "frames" / "clip"
frames.mkdir(parents=True)
for i in range(25):
    Image.fromarray(np.full((32, 32, 3), 10 * i, np.uint8)).save(frames / f"{i:04d}.png")
(work / "w0.pt").write_bytes(b"weights")

detector = work / "detect.py"
detector.write_text('''import sys, pathlib, random
_, weights, frames, out = sys.argv
out = pathlib.Path(out); out.mkdir(parents=True, exist_ok=True)
rng = random.Random(0)
for f in sorted(pathlib.Path(frames).glob("*.png")):
    lines = ["0 0.400000 0.500000 0.200000 0.250000 0.900000"]
    if rng.random() < 0.3:
        lines.append(f"0 {rng.uniform(.6,.9):.6f} {rng.uniform(.1,.9):.6f} 0.05 0.05 0.5")
    (out / (f.stem + ".txt")).write_text("\\n".join(lines) + "\\n")
''')
py = sys.executable
cfg = PipelineConfig(
    frames_source=work / "frames",
    detect_cmd=f"{py} {detector} {{weights}} {{frames}} {{out}}",
    train_cmd="cp {weights} {out_weights} # {dataset} {epochs}",
    initial_weights=work / "w0.pt",
    cycles=3,
    mode="tracking",
    filter=FilterParams(min_track_len=5),
    run_dir=work / "run",
)
for r in run_pipeline(cfg):
    print(f"cycle {r.cycle_idx}: kept {r.dataset_stats['boxes_kept']} of "
          f"{r.dataset_stats['boxes_in']} boxes -> {r.weights_ref}")
print(json.dumps(metrics_rows(cfg.run_dir)[-1]))
print("run directory:", cfg.run_dir)
