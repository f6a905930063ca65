import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from rohan.core import BBox, FrameDetections
from rohan.track import (FINISHED, LOST, TrackerConfig, TrackerState, assign, run_tracker, step,
                         track_ids)

from oracles import brute_force_assignment
from synth import moving_box_video, random_stream


def _total(cost, pairs):
    return sum(np.asarray(cost)[i, j] for i, j in pairs)


def test_assign_examples():
    assert assign(np.zeros((0, 0))) == []
    assert assign(np.zeros((0, 3))) == []
    eye = 1 - np.eye(3)
    assert assign(eye) == [(0, 0), (1, 1), (2, 2)]
    m = [[1, 2, 3], [2, 4, 6], [3, 6, 9]]
    pairs = assign(m)
    assert pairs == [(0, 2), (1, 1), (2, 0)]
    assert _total(m, pairs) == 10 == brute_force_assignment(m)


def test_assign_gate_drops_after_solving():
    cost = [[0.1, 0.9], [0.8, 0.95]]
    assert assign(cost, gate=0.85) == [(0, 0)]
    assert assign(cost, gate=0.95) == [(0, 0), (1, 1)]


def test_assign_rejects_non_finite():
    with pytest.raises(ValueError):
        assign([[np.inf, 1.0]])


@pytest.mark.parametrize("shape", [(1, 1), (2, 5), (5, 2), (4, 4), (6, 6), (3, 6), (6, 1)])
def test_assign_matches_brute_force(shape):
    rng = np.random.default_rng(sum(shape))
    for _ in range(20):
        cost = rng.integers(0, 50, shape)
        pairs = assign(cost)
        assert len(pairs) == min(shape)
        assert len({i for i, _ in pairs}) == len({j for _, j in pairs}) == len(pairs)
        assert _total(cost, pairs) == brute_force_assignment(cost)


def test_assign_agrees_with_scipy_on_larger_matrices():
    rng = np.random.default_rng(0)
    for n, m in [(20, 20), (15, 30), (30, 12)]:
        cost = rng.random((n, m))
        r, c = linear_sum_assignment(cost)
        assert _total(cost, assign(cost)) == pytest.approx(cost[r, c].sum(), abs=1e-9)


def test_first_detection_gets_id_one():
    state, ids = step(TrackerState(), FrameDetections(0, [BBox(0.5, 0.5, 0.1, 0.1, conf=0.9)]))
    assert ids == [1]


def test_low_confidence_detection_gets_no_track():
    state, ids = step(TrackerState(), FrameDetections(0, [BBox(0.5, 0.5, 0.1, 0.1, conf=0.1)]))
    assert ids == [None] and state.tracks == []


def test_out_of_order_frames_rejected():
    state = TrackerState()
    step(state, FrameDetections(3, []))
    with pytest.raises(ValueError):
        step(state, FrameDetections(3, []))


def test_moving_box_single_track():
    tracks = run_tracker(moving_box_video(10), TrackerConfig(iou_gate=0.3))
    assert len(tracks) == 1 and len(tracks[0]) == 10


def test_velocity_prediction_bridges_skipped_indices():
    # after frame 1 the box jumps 0.08 per step on a 0.1 box; a stationary
    # guess would overlap with IoU 0.11, below the 0.3 gate
    frames = [0, 1, 3, 5, 7, 9]
    video = moving_box_video(0, start=(0.1, 0.5), velocity=(0.04, 0.0), frames=frames)
    tracks = run_tracker(video, TrackerConfig(iou_gate=0.3))
    assert len(tracks) == 1 and len(tracks[0]) == 6


def test_two_stationary_boxes_keep_ids():
    video = [FrameDetections(i, [BBox(0.2, 0.2, 0.1, 0.1, conf=0.9),
                                 BBox(0.8, 0.8, 0.1, 0.1, conf=0.9)]) for i in range(10)]
    ids = track_ids(video)
    assert all(v == [1, 2] for v in ids.values())
    assert [len(t) for t in run_tracker(video)] == [10, 10]


def test_empty_video():
    assert run_tracker([]) == []


def test_flicker_detection():
    video = [FrameDetections(i, []) for i in range(10)]
    for i in range(3, 7):
        video[i].boxes.append(BBox(0.5, 0.5, 0.2, 0.2, conf=0.9))
    tracks = run_tracker(video)
    assert len(tracks) == 1
    assert [f for f, _ in tracks[0].observations] == [3, 4, 5, 6]


def test_gap_of_max_misses_keeps_id():
    cfg = TrackerConfig(max_misses=5)
    frames = [0, 1, 2, 8, 9]           # frames 3..7 missing: five misses
    video = [FrameDetections(i, [BBox(0.5, 0.5, 0.2, 0.2, conf=0.9)] if i in frames else [])
             for i in range(10)]
    tracks = run_tracker(video, cfg)
    assert len(tracks) == 1 and len(tracks[0]) == 5


def test_gap_longer_than_max_misses_starts_new_track():
    cfg = TrackerConfig(max_misses=5)
    frames = [0, 1, 2, 9]
    video = [FrameDetections(i, [BBox(0.5, 0.5, 0.2, 0.2, conf=0.9)] if i in frames else [])
             for i in range(10)]
    tracks = run_tracker(video, cfg)
    assert [len(t) for t in tracks] == [3, 1]
    assert tracks[0].state == FINISHED


def test_lost_track_prediction_is_frozen():
    video = moving_box_video(3, start=(0.2, 0.5), velocity=(0.05, 0.0))
    video.append(FrameDetections(3, []))
    state = TrackerState()
    for f in video:
        step(state, f)
    t = state.tracks[0]
    assert t.state == LOST
    assert t.predict(10) == t.observations[-1][1].xyxy()


def test_tracker_partitions_accepted_detections():
    rng = np.random.default_rng(5)
    cfg = TrackerConfig(min_conf=0.3)
    for _ in range(30):
        video = random_stream(rng)
        tracks = run_tracker(video, cfg)
        accepted = sorted((f.frame_idx, id(b)) for f in video for b in f.boxes if b.conf >= 0.3)
        observed = sorted((fi, id(b)) for t in tracks for fi, b in t.observations)
        assert observed == accepted
        ids = [t.id for t in tracks]
        assert ids == sorted(set(ids))
        for t in tracks:
            frames = [fi for fi, _ in t.observations]
            assert frames == sorted(set(frames))
