import json
import shlex
import sys
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from rohan.labels import write_labels

from synth import noisy_video

MOCKS = Path(__file__).parent / "mocks"


def _write_frames(directory, n, seed):
    directory.mkdir(parents=True)
    rng = np.random.default_rng(seed)
    for i in range(n):
        img = rng.integers(0, 256, (24, 32, 3), dtype=np.uint8)
        Image.fromarray(img).save(directory / f"frame_{i:04d}.png")


def detect_cmd(fixtures, extra=""):
    return (f"{shlex.quote(sys.executable)} {shlex.quote(str(MOCKS / 'mock_detect.py'))} "
            f"--weights {{weights}} --frames {{frames}} --out {{out}} "
            f"--fixtures {shlex.quote(str(fixtures))} {extra}").strip()


def train_cmd():
    return (f"{shlex.quote(sys.executable)} {shlex.quote(str(MOCKS / 'mock_train.py'))} "
            f"--weights {{weights}} --dataset {{dataset}} --out-weights {{out_weights}} "
            f"--epochs {{epochs}}")


class Workspace:
    """Two short videos with canned noisy predictions plus a labelled test set."""

    def __init__(self, root: Path, n_frames=20):
        self.root = root
        self.frames = root / "frames"
        self.fixtures = root / "fixtures"
        self.eval_gt = root / "test"
        self.weights = root / "init.pt"
        self.weights.write_bytes(b"initial weights\n")
        self.truth = {}
        for k, name in enumerate(["video_a", "video_b"]):
            _write_frames(self.frames / name, n_frames, seed=k)
            video, truth = noisy_video(n_frames=n_frames, n_true=1 + k, n_false=8, seed=k)
            self.truth[name] = truth
            (self.fixtures / name).mkdir(parents=True)
            for f in video:
                write_labels(self.fixtures / name / f"frame_{f.frame_idx:04d}.txt", f.boxes)
        # test set: its "images" directory name is the fixture key
        _write_frames(self.eval_gt / "images", 6, seed=9)
        video, truth = noisy_video(n_frames=6, n_true=1, n_false=3, seed=9)
        (self.eval_gt / "labels").mkdir()
        (self.fixtures / "images").mkdir()
        for f, t in zip(video, truth):
            write_labels(self.fixtures / "images" / f"frame_{f.frame_idx:04d}.txt", f.boxes)
            write_labels(self.eval_gt / "labels" / f"frame_{t.frame_idx:04d}.txt", t.boxes)

    def config(self, run_dir, **overrides) -> dict:
        cfg = {
            "frames_source": str(self.frames),
            "detect_cmd": detect_cmd(self.fixtures),
            "train_cmd": train_cmd(),
            "initial_weights": str(self.weights),
            "epochs_per_cycle": 5,
            "cycles": 3,
            "mode": "tracking",
            "filter": {"conf_floor": 0.25, "min_track_len": 5},
            "eval_gt": str(self.eval_gt),
            "sample_fps": 5,
            "run_dir": str(run_dir),
        }
        cfg.update(overrides)
        return cfg

    def config_file(self, run_dir, name="run.json", **overrides) -> Path:
        path = self.root / name
        path.write_text(json.dumps(self.config(run_dir, **overrides), indent=2))
        return path


@pytest.fixture
def workspace(tmp_path):
    return Workspace(tmp_path)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
