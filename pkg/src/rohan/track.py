"""Tracking-by-detection with constant-velocity prediction and IoU association.

Identities only need to be good enough to count how many frames each
object persists, so appearance features and camera-motion compensation
are left out.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .core import XYXY, BBox, FrameDetections, iou_matrix

ACTIVE = "active"
LOST = "lost"
FINISHED = "finished"


def _hungarian(cost: np.ndarray) -> List[int]:
    """Shortest augmenting path with potentials; requires rows <= cols.

    Returns, for each row, the column assigned to it.
    """
    n, m = cost.shape
    inf = float("inf")
    u = [0.0] * (n + 1)
    v = [0.0] * (m + 1)
    p = [0] * (m + 1)  # p[j]: row (1-based) matched to column j, 0 = free
    way = [0] * (m + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [inf] * (m + 1)
        used = [False] * (m + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = inf
            j1 = 0
            row = cost[i0 - 1]
            for j in range(1, m + 1):
                if not used[j]:
                    cur = row[j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(m + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while True:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break
    assignment = [-1] * n
    for j in range(1, m + 1):
        if p[j]:
            assignment[p[j] - 1] = j - 1
    return assignment


def assign(cost, gate: float = float("inf")) -> List[Tuple[int, int]]:
    """Minimum-cost one-to-one matching of rows to columns.

    Every row (or every column, whichever is fewer) is matched; pairs whose
    cost exceeds ``gate`` are then removed from the result. Pairs are
    returned sorted by row.
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.size == 0:
        return []
    if cost.ndim != 2:
        raise ValueError("cost must be a 2-D matrix")
    if not np.all(np.isfinite(cost)):
        raise ValueError("cost matrix must be finite")
    if cost.shape[0] <= cost.shape[1]:
        pairs = [(i, j) for i, j in enumerate(_hungarian(cost))]
    else:
        pairs = sorted((i, j) for j, i in enumerate(_hungarian(cost.T)))
    return [(i, j) for i, j in pairs if cost[i, j] <= gate]


@dataclass(frozen=True)
class TrackerConfig:
    iou_gate: float = 0.3
    max_misses: int = 5
    min_conf: float = 0.25

    def __post_init__(self):
        if not 0.0 < self.iou_gate < 1.0:
            raise ValueError("iou_gate must be in (0, 1)")
        if self.max_misses < 0:
            raise ValueError("max_misses must be >= 0")
        if not 0.0 <= self.min_conf <= 1.0:
            raise ValueError("min_conf must be in [0, 1]")


@dataclass
class Track:
    id: int
    observations: List[Tuple[int, BBox]] = field(default_factory=list)
    state: str = ACTIVE
    misses: int = 0

    def __len__(self):
        return len(self.observations)

    @property
    def first_frame(self) -> int:
        return self.observations[0][0]

    @property
    def last_frame(self) -> int:
        return self.observations[-1][0]

    def predict(self, frame_idx: int) -> XYXY:
        """Expected corner box at ``frame_idx``.

        Active tracks move with the center velocity of their last two
        observations; lost tracks stay where they were last seen.
        """
        last_f, last = self.observations[-1]
        if self.state != ACTIVE or len(self.observations) < 2:
            return last.xyxy()
        prev_f, prev = self.observations[-2]
        dt = last_f - prev_f
        vx = (last.cx - prev.cx) / dt
        vy = (last.cy - prev.cy) / dt
        step = frame_idx - last_f
        cx, cy = last.cx + vx * step, last.cy + vy * step
        return (cx - last.w / 2, cy - last.h / 2, cx + last.w / 2, cy + last.h / 2)

    def to_dict(self, names: Optional[Sequence[str]] = None) -> dict:
        frames = []
        for f, b in self.observations:
            rec = {"frame": f, "box": [b.cx, b.cy, b.w, b.h], "conf": b.conf}
            if names is not None:
                rec["name"] = names[f]
            frames.append(rec)
        return {"id": self.id, "start_frame": self.first_frame,
                "end_frame": self.last_frame, "length": len(self),
                "frames": frames}


# association cost for pairs below the IoU gate; keeps the solver from
# trading a valid match for an invalid one
_GATED = 1e6


@dataclass
class TrackerState:
    tracks: List[Track] = field(default_factory=list)
    next_id: int = 1
    last_frame: Optional[int] = None

    def live(self) -> List[Track]:
        return [t for t in self.tracks if t.state != FINISHED]


def step(state: TrackerState, frame: FrameDetections,
         cfg: TrackerConfig = TrackerConfig()) -> Tuple[TrackerState, List[Optional[int]]]:
    """Advance the tracker by one frame, mutating and returning ``state``.

    Returns the track id given to each detection of ``frame`` (``None`` for
    detections below ``cfg.min_conf``).
    """
    if state.last_frame is not None and frame.frame_idx <= state.last_frame:
        raise ValueError(f"frame {frame.frame_idx} is not after frame {state.last_frame}")
    state.last_frame = frame.frame_idx

    ids: List[Optional[int]] = [None] * len(frame.boxes)
    accepted = [k for k, b in enumerate(frame.boxes)
                if b.conf is None or b.conf >= cfg.min_conf]
    live = state.live()

    matches = []
    if live and accepted:
        predicted = [t.predict(frame.frame_idx) for t in live]
        dets = [frame.boxes[k].xyxy() for k in accepted]
        cost = 1.0 - iou_matrix(predicted, dets)
        gate = 1.0 - cfg.iou_gate
        cost[cost > gate] = _GATED
        matches = assign(cost, gate)

    matched_tracks = set()
    matched_dets = set()
    for ti, di in matches:
        track, k = live[ti], accepted[di]
        track.observations.append((frame.frame_idx, frame.boxes[k]))
        track.state = ACTIVE
        track.misses = 0
        ids[k] = track.id
        matched_tracks.add(ti)
        matched_dets.add(di)

    for ti, track in enumerate(live):
        if ti in matched_tracks:
            continue
        track.misses += 1
        track.state = FINISHED if track.misses > cfg.max_misses else LOST

    for di, k in enumerate(accepted):
        if di in matched_dets:
            continue
        track = Track(state.next_id, [(frame.frame_idx, frame.boxes[k])])
        state.next_id += 1
        state.tracks.append(track)
        ids[k] = track.id
    return state, ids


def run_tracker(video: Sequence[FrameDetections],
                cfg: TrackerConfig = TrackerConfig()) -> List[Track]:
    """Track a whole video; returns every track ever created, ordered by id."""
    state = TrackerState()
    for frame in video:
        step(state, frame, cfg)
    return list(state.tracks)


def track_ids(video: Sequence[FrameDetections],
              cfg: TrackerConfig = TrackerConfig()) -> Dict[int, List[Optional[int]]]:
    """Per-frame list of the track id assigned to each detection."""
    state = TrackerState()
    out = {}
    for frame in video:
        _, out[frame.frame_idx] = step(state, frame, cfg)
    return out
