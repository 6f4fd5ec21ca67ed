"""Gaussian soft-label maps."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np


@dataclass(frozen=True)
class LabelMap:
    """H x W grid of Gaussian label values peaking at ``center`` (row, col)."""

    height: int
    width: int
    center: Tuple[float, float]
    sigma: float
    values: np.ndarray

    @property
    def shape(self):
        return self.values.shape


def gaussian_label(height: int, width: int, center, sigma: float) -> LabelMap:
    """Build ``exp(-((r - r0)^2 + (c - c0)^2) / (2 sigma^2))`` on an H x W grid.

    ``center`` is (row, col) in cell units and may be fractional, but must lie
    inside the grid.
    """
    if height < 1 or width < 1:
        raise ValueError("label grid must be at least 1x1")
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    r0, c0 = float(center[0]), float(center[1])
    if not (0.0 <= r0 <= height - 1 and 0.0 <= c0 <= width - 1):
        raise ValueError(f"center {center} outside a {height}x{width} grid")
    dr = np.arange(height, dtype=np.float64) - r0
    dc = np.arange(width, dtype=np.float64) - c0
    values = np.exp(-(dr[:, None] ** 2 + dc[None, :] ** 2) / (2.0 * sigma * sigma))
    values.setflags(write=False)
    return LabelMap(height, width, (r0, c0), float(sigma), values)


def target_sigma(target_w: float, target_h: float, factor: float = 0.1) -> float:
    """Label width proportional to the target extent (both in feature cells)."""
    return factor * math.sqrt(target_w * target_h)
