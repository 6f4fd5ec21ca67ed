"""Overlap metrics and the tracking driver."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import tracker
from .errors import TargetLostError
from .features import Extractor, Frame, make_extractor


def iou_xywh(a, b) -> float:
    """IoU of two boxes in corner format ``(x, y, w, h)``."""
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    iw = max(0.0, min(ax + aw, bx + bw) - max(ax, bx))
    ih = max(0.0, min(ay + ah, by + bh) - max(ay, by))
    inter = iw * ih
    union = aw * ah + bw * bh - inter
    if union <= 0:
        return 0.0
    return float(min(1.0, max(0.0, inter / union)))


def center_to_corner(box):
    cx, cy, w, h = box
    return (cx - w / 2.0, cy - h / 2.0, w, h)


def iou(a, b) -> float:
    """IoU of two boxes in centre format ``(cx, cy, w, h)``."""
    return iou_xywh(center_to_corner(a), center_to_corner(b))


@dataclass(frozen=True)
class TrackMetrics:
    boxes: np.ndarray  # predicted (cx, cy, w, h) per frame
    center_errors: np.ndarray
    ious: np.ndarray
    mean_iou: float
    success_rate: float  # fraction of frames with IoU >= 0.5
    fps: float
    lost_at: Optional[int] = None


def evaluate(pred, gt, fps: float = float("nan"), lost_at: Optional[int] = None) -> TrackMetrics:
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise ValueError("prediction and ground truth lengths differ")
    ious = np.array([iou(p, g) for p, g in zip(pred, gt)])
    if lost_at is not None:
        ious[lost_at:] = 0.0
    errors = np.hypot(pred[:, 0] - gt[:, 0], pred[:, 1] - gt[:, 1])
    return TrackMetrics(pred, errors, ious, float(ious.mean()), float(np.mean(ious >= 0.5)), fps, lost_at)


def run_tracking(
    frames: Sequence[Frame],
    gt,
    cfg: tracker.TrackerConfig = tracker.TrackerConfig(),
    extractor: Optional[Extractor] = None,
) -> TrackMetrics:
    """Initialise on the first ground-truth box and track the rest.

    A lost target is not fatal: its last box is kept and IoU counts as 0 from
    that frame on.
    """
    gt = np.asarray(gt, dtype=np.float64)
    if len(frames) < 2 or len(frames) != len(gt):
        raise ValueError("need at least two frames with one ground-truth box each")
    extractor = extractor or make_extractor(cfg.extractor)
    t0 = time.perf_counter()
    state = tracker.init(frames[0], tuple(gt[0]), cfg, extractor)
    boxes = [tuple(gt[0])]
    lost_at = None
    for t in range(1, len(frames)):
        if lost_at is None:
            try:
                state, box = tracker.step(state, frames[t], extractor)
            except TargetLostError as exc:
                state = exc.state
                lost_at = t
        boxes.append(state.bbox)
    elapsed = time.perf_counter() - t0
    return evaluate(boxes, gt, len(frames) / elapsed if elapsed > 0 else float("inf"), lost_at)
