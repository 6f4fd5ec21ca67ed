"""Patch cropping and deterministic feature extractors.

The extractors stand in for a pretrained backbone: they turn a grayscale patch
into an H x W x C feature map whose cell ``(r, c)`` sits over patch pixel
``(offset + stride * r, offset + stride * c)``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import ndimage

KINDS = ("raw", "gradients", "random_filters")


@dataclass(frozen=True)
class Frame:
    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.ndim != 2 or px.size == 0:
            raise ValueError("frame must be a non-empty 2-D array")
        if not np.all(np.isfinite(px)) or px.min() < 0.0 or px.max() > 1.0:
            raise ValueError("frame pixels must be finite and lie in [0, 1]")
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True)
class FeatureMap:
    data: np.ndarray
    stride: int = 1
    offset: float = 0.0

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim == 2:
            data = data[:, :, None]
        if data.ndim != 3 or 0 in data.shape:
            raise ValueError("feature map must be H x W x C")
        if not np.all(np.isfinite(data)):
            raise ValueError("feature map contains non-finite values")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        object.__setattr__(self, "data", data)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    def select(self, indices: Sequence[int]) -> "FeatureMap":
        idx = list(indices)
        if not idx or min(idx) < 0 or max(idx) >= self.channels:
            raise ValueError(f"channel indices {idx} out of range for {self.channels} channels")
        return replace(self, data=self.data[:, :, idx])


@dataclass(frozen=True)
class ExtractorSpec:
    kind: str = "gradients"
    filter_count: int = 8
    filter_size: int = 5
    seed: int = 0
    stride: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown extractor kind {self.kind!r}")
        if self.filter_count < 1:
            raise ValueError("filter_count must be >= 1")
        if self.filter_size < 1 or self.filter_size % 2 == 0:
            raise ValueError("filter_size must be odd")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")


Extractor = Callable[[Frame], FeatureMap]


def extract_patch(frame: Frame, center, crop_size: float, out_size: int = 127) -> Frame:
    """Square crop of side ``crop_size`` centred on ``center = (cx, cy)``.

    The crop is bilinearly resampled to ``out_size x out_size``; output pixel
    ``i`` samples image coordinate ``c + (i - (out_size - 1) / 2) * crop_size / out_size``
    (pixel centres at integer coordinates).  Samples falling outside the frame
    take the mean of the in-frame samples.
    """
    if not crop_size > 0:
        raise ValueError("crop_size must be positive")
    if out_size < 1:
        raise ValueError("out_size must be >= 1")
    cx, cy = float(center[0]), float(center[1])
    step = crop_size / out_size
    grid = (np.arange(out_size, dtype=np.float64) - (out_size - 1) / 2.0) * step
    rows = cy + grid
    cols = cx + grid
    row_in = (rows >= 0.0) & (rows <= frame.height - 1)
    col_in = (cols >= 0.0) & (cols <= frame.width - 1)
    if not row_in.any() or not col_in.any():
        raise ValueError(f"crop at {center} of size {crop_size} does not overlap the frame")

    rr, cc = np.meshgrid(rows[row_in], cols[col_in], indexing="ij")
    inside = ndimage.map_coordinates(frame.pixels, [rr, cc], order=1, mode="nearest")
    out = np.full((out_size, out_size), inside.mean())
    out[np.ix_(row_in, col_in)] = inside
    return Frame(np.clip(out, 0.0, 1.0))


def _random_filters(spec: ExtractorSpec) -> np.ndarray:
    rng = np.random.default_rng(spec.seed)
    bank = rng.standard_normal((spec.filter_count, spec.filter_size, spec.filter_size))
    bank -= bank.mean(axis=(1, 2), keepdims=True)
    return bank / spec.filter_size


def extract_features(patch: Frame, spec: ExtractorSpec) -> FeatureMap:
    px = patch.pixels
    offset = 0.0
    if spec.kind == "raw":
        data = px[:, :, None].copy()
    elif spec.kind == "gradients":
        gy, gx = np.gradient(px)
        data = np.stack([gx, gy], axis=-1)
    else:
        k = spec.filter_size
        if min(px.shape) < k:
            raise ValueError("patch smaller than the filter size")
        windows = sliding_window_view(px, (k, k))
        data = np.einsum("hwij,fij->hwf", windows, _random_filters(spec))
        offset = (k - 1) / 2.0
    s = spec.stride
    return FeatureMap(np.ascontiguousarray(data[::s, ::s]), stride=s, offset=offset)


def make_extractor(spec: ExtractorSpec) -> Extractor:
    return functools.partial(extract_features, spec=spec)
