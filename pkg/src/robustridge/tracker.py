"""Correlation tracker over Domain-Aware channels.

``init`` crops the target, trains the ridge regression net on its features,
scores channels by the averaged loss gradient and keeps the top ones as the
template.  ``step`` correlates that template against search crops at each
pyramid scale and moves the box to the best peak.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import signal

from .errors import TargetLostError
from .features import Extractor, ExtractorSpec, FeatureMap, Frame, extract_patch, make_extractor
from .labels import LabelMap, gaussian_label, target_sigma
from .loss import LossParams
from .ridge import ChannelScores, RidgeNet, TrainConfig, channel_scores, select_top_k, train_net

Box = Tuple[float, float, float, float]  # (cx, cy, w, h)


@dataclass(frozen=True)
class TrackerConfig:
    scale_base: float = 1.0375
    scale_exponents: Tuple[int, ...] = (-2, 0, 2)
    scale_lerp: float = 0.435
    top_k: int = 100
    sigma_factor: float = 0.1
    extractor: ExtractorSpec = field(default_factory=lambda: ExtractorSpec(kind="gradients", stride=4))
    loss: LossParams = field(default_factory=LossParams)
    train: TrainConfig = field(default_factory=TrainConfig)
    template_size: int = 127
    search_size: int = 255
    template_context: float = 1.0
    # search/template crop ratio equal to the patch-size ratio keeps both
    # patches at the same pixel scale
    search_context: float = 255 / 127
    hidden_channels: int = 32
    kernel_size: int = 3
    lam: float = 1e-4
    subcell: bool = True
    cosine_window: bool = False
    scale_penalty: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "scale_exponents", tuple(int(s) for s in self.scale_exponents))
        if not self.scale_base > 1.0:
            raise ValueError("scale_base must exceed 1")
        if not self.scale_exponents:
            raise ValueError("scale_exponents must be non-empty")
        if not 0.0 <= self.scale_lerp <= 1.0:
            raise ValueError("scale_lerp must lie in [0, 1]")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")
        if self.search_size < self.template_size:
            raise ValueError("search patch must not be smaller than the template patch")
        if not (self.sigma_factor > 0 and self.template_context > 0 and self.search_context > 0):
            raise ValueError("sigma_factor and context factors must be positive")
        if not 0.0 < self.scale_penalty <= 1.0:
            raise ValueError("scale_penalty must lie in (0, 1]")

    def scale_factors(self) -> np.ndarray:
        return self.scale_base ** np.asarray(self.scale_exponents, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class TrackState:
    center: Tuple[float, float]
    target_size: Tuple[float, float]
    scale: float
    template: FeatureMap
    selected: Tuple[int, ...]
    config: TrackerConfig
    scores: Optional[ChannelScores] = None
    label: Optional[LabelMap] = None
    net: Optional[RidgeNet] = None

    @property
    def bbox(self) -> Box:
        w, h = self.target_size
        return (self.center[0], self.center[1], w * self.scale, h * self.scale)


@dataclass(frozen=True)
class ResponseMap:
    responses: List[np.ndarray]
    best: Tuple[int, int, int, float]  # (scale index, row, col, score)


def _overlaps(box: Box, frame: Frame) -> bool:
    cx, cy, w, h = box
    return cx + w / 2 >= 0 and cx - w / 2 <= frame.width - 1 and cy + h / 2 >= 0 and cy - h / 2 <= frame.height - 1


def template_label(feats: FeatureMap, bbox: Box, cfg: TrackerConfig) -> LabelMap:
    """Gaussian label on the template feature grid, centred on the target."""
    _, _, w, h = bbox
    side = cfg.template_context * math.sqrt(w * h)
    pc = (cfg.template_size - 1) / 2.0
    cell = (pc - feats.offset) / feats.stride
    row = min(max(cell, 0.0), feats.height - 1)
    col = min(max(cell, 0.0), feats.width - 1)
    cells_per_px = cfg.template_size / side / feats.stride
    sigma = target_sigma(w * cells_per_px, h * cells_per_px, cfg.sigma_factor)
    return gaussian_label(feats.height, feats.width, (row, col), sigma)


def init(frame: Frame, bbox: Box, cfg: TrackerConfig = TrackerConfig(), extractor: Optional[Extractor] = None) -> TrackState:
    cx, cy, w, h = (float(v) for v in bbox)
    if w < 2 or h < 2:
        raise ValueError(f"degenerate box {bbox}: width and height must be >= 2 px")
    if not _overlaps((cx, cy, w, h), frame):
        raise ValueError(f"box {bbox} does not overlap the frame")
    extractor = extractor or make_extractor(cfg.extractor)

    side = cfg.template_context * math.sqrt(w * h)
    feats = extractor(extract_patch(frame, (cx, cy), side, cfg.template_size))
    label = template_label(feats, (cx, cy, w, h), cfg)

    net = RidgeNet.default(feats.channels, cfg.hidden_channels, cfg.kernel_size, seed=cfg.train.seed, lam=cfg.lam)
    net, _ = train_net(net, feats, label, cfg.loss, cfg.train)
    score_params = cfg.loss.with_alpha(cfg.train.alphas(cfg.loss)[-1])
    scores = channel_scores(net, feats, label, score_params)
    selected = tuple(select_top_k(scores, min(cfg.top_k, feats.channels)))
    return TrackState(
        center=(cx, cy),
        target_size=(w, h),
        scale=1.0,
        template=feats.select(selected),
        selected=selected,
        config=cfg,
        scores=scores,
        label=label,
        net=net,
    )


def correlate(template: FeatureMap, search: FeatureMap, selected: Optional[Sequence[int]] = None) -> np.ndarray:
    """Valid cross-correlation summed over channels.

    If ``search`` still carries all channels, ``selected`` picks the ones the
    (already restricted) template was built from.
    """
    if selected is not None and search.channels != template.channels:
        search = search.select(selected)
    if search.channels != template.channels:
        raise ValueError(f"channel mismatch: template {template.channels}, search {search.channels}")
    if template.height > search.height or template.width > search.width:
        raise ValueError("template larger than search region")
    out = signal.correlate(search.data, template.data, mode="valid")
    return out[:, :, 0]


def _parabolic(m1, m0, p1) -> float:
    den = m1 - 2.0 * m0 + p1
    if den >= 0.0:
        return 0.0
    return float(np.clip(0.5 * (m1 - p1) / den, -0.5, 0.5))


def _refine(resp, r, c) -> Tuple[float, float]:
    dr = _parabolic(resp[r - 1, c], resp[r, c], resp[r + 1, c]) if 0 < r < resp.shape[0] - 1 else 0.0
    dc = _parabolic(resp[r, c - 1], resp[r, c], resp[r, c + 1]) if 0 < c < resp.shape[1] - 1 else 0.0
    return r + dr, c + dc


def respond(state: TrackState, frame: Frame, extractor: Optional[Extractor] = None) -> Tuple[ResponseMap, List[FeatureMap], np.ndarray]:
    """Response maps over the scale pyramid; also returns search features and crop sides."""
    cfg = state.config
    extractor = extractor or make_extractor(cfg.extractor)
    w0, h0 = state.target_size
    base = cfg.search_context * cfg.template_context * math.sqrt(w0 * h0) * state.scale
    sides = base * cfg.scale_factors()
    responses, feats_all = [], []
    best = None
    for i, (side, s) in enumerate(zip(sides, cfg.scale_exponents)):
        try:
            patch = extract_patch(frame, state.center, side, cfg.search_size)
        except ValueError as exc:
            raise TargetLostError(state, str(exc)) from exc
        feats = extractor(patch)
        resp = correlate(state.template, feats, state.selected)
        if cfg.cosine_window:
            resp = resp * np.outer(np.hanning(resp.shape[0]), np.hanning(resp.shape[1]))
        if s != 0 and cfg.scale_penalty != 1.0:
            resp = resp * cfg.scale_penalty
        r, c = np.unravel_index(int(np.argmax(resp)), resp.shape)
        # strict comparison: ties go to the lower scale index
        if best is None or resp[r, c] > best[3]:
            best = (i, int(r), int(c), float(resp[r, c]))
        responses.append(resp)
        feats_all.append(feats)
    return ResponseMap(responses, best), feats_all, sides


def update_scale(scale: float, factor: float, lerp: float) -> float:
    """Move ``scale`` a fraction ``lerp`` of the way toward ``scale * factor``.

    Same as ``(1 - lerp) * scale + lerp * scale * factor``, arranged so that
    ``factor == 1`` leaves the scale bit-for-bit unchanged.
    """
    return float(scale * (1.0 + lerp * (factor - 1.0)))


def step(state: TrackState, frame: Frame, extractor: Optional[Extractor] = None) -> Tuple[TrackState, Box]:
    cfg = state.config
    rmap, feats_all, sides = respond(state, frame, extractor)
    i, r, c, _ = rmap.best
    resp = rmap.responses[i]
    rr, cc = _refine(resp, r, c) if cfg.subcell else (float(r), float(c))
    stride = feats_all[i].stride
    # template pixel p sits over search pixel p + stride * peak
    shift = (cfg.template_size - 1) / 2.0 - (cfg.search_size - 1) / 2.0
    px_to_image = sides[i] / cfg.search_size
    dx = (stride * cc + shift) * px_to_image
    dy = (stride * rr + shift) * px_to_image

    new_scale = update_scale(state.scale, cfg.scale_factors()[i], cfg.scale_lerp)
    new_state = replace(state, center=(state.center[0] + dx, state.center[1] + dy), scale=float(new_scale))
    if not _overlaps(new_state.bbox, frame):
        raise TargetLostError(state)
    return new_state, new_state.bbox
