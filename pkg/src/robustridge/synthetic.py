"""Synthetic tracking sequences: a textured square moving over a noisy background."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy import ndimage

from .errors import InvalidSpecError
from .features import Frame

MOTIONS = ("static", "linear", "sinusoidal")


@dataclass(frozen=True)
class Motion:
    kind: str = "static"
    vx: float = 0.0
    vy: float = 0.0
    amp: float = 0.0
    period: float = 1.0

    @classmethod
    def static(cls):
        return cls("static")

    @classmethod
    def linear(cls, vx, vy):
        return cls("linear", vx=float(vx), vy=float(vy))

    @classmethod
    def sinusoidal(cls, amp, period):
        return cls("sinusoidal", amp=float(amp), period=float(period))

    def offset(self, t: int) -> Tuple[float, float]:
        if self.kind == "static":
            return 0.0, 0.0
        if self.kind == "linear":
            return self.vx * t, self.vy * t
        # horizontal oscillation
        return self.amp * math.sin(2.0 * math.pi * t / self.period), 0.0


@dataclass(frozen=True)
class SyntheticSpec:
    frames: int = 64
    frame_size: Tuple[int, int] = (128, 128)  # (H, W)
    target_size: Tuple[float, float] = (24.0, 24.0)  # (w, h)
    motion: Motion = field(default_factory=Motion)
    start: Optional[Tuple[float, float]] = None  # (cx, cy); frame centre if None
    scale_drift: float = 0.0  # relative size change per frame
    noise_std: float = 0.02
    occlusion: Optional[Tuple[int, int, float]] = None  # (start, length, fraction)
    seed: int = 0

    def __post_init__(self):
        if self.frames < 1:
            raise InvalidSpecError("frames must be >= 1")
        if self.noise_std < 0:
            raise InvalidSpecError("noise_std must be >= 0")
        if min(self.frame_size) < 1 or min(self.target_size) <= 0:
            raise InvalidSpecError("frame and target sizes must be positive")
        if self.motion.kind not in MOTIONS:
            raise InvalidSpecError(f"unknown motion {self.motion.kind!r}")
        if self.motion.kind == "sinusoidal" and self.motion.period <= 0:
            raise InvalidSpecError("sinusoidal period must be positive")
        if self.scale_drift <= -1:
            raise InvalidSpecError("scale_drift must exceed -1")
        if self.occlusion is not None and not 0.0 <= self.occlusion[2] <= 1.0:
            raise InvalidSpecError("occlusion fraction must lie in [0, 1]")


def ground_truth(spec: SyntheticSpec) -> np.ndarray:
    """(frames, 4) array of exact (cx, cy, w, h) boxes."""
    H, W = spec.frame_size
    cx0, cy0 = spec.start if spec.start is not None else ((W - 1) / 2.0, (H - 1) / 2.0)
    w0, h0 = spec.target_size
    gt = np.empty((spec.frames, 4))
    for t in range(spec.frames):
        ox, oy = spec.motion.offset(t)
        g = (1.0 + spec.scale_drift) ** t
        gt[t] = (cx0 + ox, cy0 + oy, w0 * g, h0 * g)
    left, top = gt[:, 0] - gt[:, 2] / 2, gt[:, 1] - gt[:, 3] / 2
    right, bottom = gt[:, 0] + gt[:, 2] / 2, gt[:, 1] + gt[:, 3] / 2
    bad = (left < -0.5) | (top < -0.5) | (right > W - 0.5) | (bottom > H - 0.5)
    if bad.any():
        raise InvalidSpecError(f"target leaves the frame at frame {int(np.argmax(bad))}")
    return gt


def _render_target(canvas, texture, box):
    cx, cy, w, h = box
    H, W = canvas.shape
    r0, r1 = max(0, math.ceil(cy - h / 2)), min(H - 1, math.floor(cy + h / 2 - 1e-9))
    c0, c1 = max(0, math.ceil(cx - w / 2)), min(W - 1, math.floor(cx + w / 2 - 1e-9))
    if r1 < r0 or c1 < c0:
        return
    rows = np.arange(r0, r1 + 1, dtype=np.float64)
    cols = np.arange(c0, c1 + 1, dtype=np.float64)
    n = texture.shape[0] - 1
    u = (rows - (cy - h / 2)) / h * n
    v = (cols - (cx - w / 2)) / w * n
    uu, vv = np.meshgrid(u, v, indexing="ij")
    canvas[r0 : r1 + 1, c0 : c1 + 1] = ndimage.map_coordinates(texture, [uu, vv], order=1, mode="nearest")


def synth_sequence(spec: SyntheticSpec) -> Tuple[List[Frame], np.ndarray]:
    """Render frames and exact ground-truth boxes; deterministic in ``spec.seed``."""
    gt = ground_truth(spec)
    H, W = spec.frame_size
    rng = np.random.default_rng(spec.seed)
    background = ndimage.gaussian_filter(rng.uniform(size=(H, W)), 2.0)
    background = 0.5 + 0.15 * (background - background.mean()) / (background.std() + 1e-12)
    texture = ndimage.zoom(rng.uniform(0.05, 0.95, size=(6, 6)), 4, order=1)

    frames = []
    for t in range(spec.frames):
        canvas = background.copy()
        _render_target(canvas, texture, gt[t])
        if spec.occlusion is not None:
            start, length, fraction = spec.occlusion
            if start <= t < start + length and fraction > 0:
                cx, cy, w, h = gt[t]
                _render_target(canvas, np.full((2, 2), 0.5), (cx - w / 2 + fraction * w / 2, cy, fraction * w, h))
        if spec.noise_std > 0:
            canvas = canvas + rng.normal(0.0, spec.noise_std, size=canvas.shape)
        frames.append(Frame(np.clip(canvas, 0.0, 1.0)))
    return frames, gt
