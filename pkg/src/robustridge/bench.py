"""Convergence-speed benchmark of the robust loss against plain baselines.

A batch of eight samples, one hard foreground sample with a target near 1 and
seven easy background samples with targets near 0, is fitted by a linear model
under each loss with identical momentum gradient descent.  Each loss is
tracked on its own scale; convergence is the first iteration whose batch-mean
loss drops to ``threshold`` times its starting value.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from .loss import LossParams, baseline, baseline_grad, loss, loss_grad_x

PROPOSED = "proposed"
KINDS = (PROPOSED, "l2", "l1")
NOT_CONVERGED = -1


@dataclass(frozen=True)
class BenchConfig:
    kinds: Tuple[str, ...] = KINDS
    n_samples: int = 8
    n_hard: int = 1
    n_features: int = 16
    hard_range: Tuple[float, float] = (0.9, 1.0)
    easy_range: Tuple[float, float] = (0.0, 0.1)
    init: str = "zeros"  # or "exact": start at an exact fit (zero residual)
    alpha: float = 1.0
    a: float = 1.0
    lr: float = 0.1
    momentum: float = 0.9
    max_iters: int = 2000
    threshold: float = 0.05
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kinds", tuple(self.kinds))
        if len(self.kinds) < 2:
            raise ValueError("loss_bench compares at least two loss kinds")
        unknown = set(self.kinds) - set(KINDS)
        if unknown:
            raise ValueError(f"unknown loss kinds {sorted(unknown)}")
        if not 0 < self.n_hard < self.n_samples:
            raise ValueError("need at least one hard and one easy sample")
        if self.init not in ("zeros", "exact"):
            raise ValueError("init must be 'zeros' or 'exact'")
        if self.max_iters < 1 or self.lr <= 0 or not 0 <= self.momentum < 1:
            raise ValueError("invalid optimiser settings")
        if not 0 < self.threshold < 1:
            raise ValueError("threshold must lie in (0, 1)")
        for lo, hi in (self.hard_range, self.easy_range):
            if not 0.0 <= lo <= hi <= 1.0:
                raise ValueError("target ranges must lie within [0, 1]")
        LossParams(alpha=self.alpha, a=self.a)


@dataclass(frozen=True)
class BenchResult:
    curves: Dict[str, np.ndarray]
    iters_to_threshold: Dict[str, int]
    features: np.ndarray = field(repr=False, default=None)
    targets: np.ndarray = field(repr=False, default=None)


def make_batch(cfg: BenchConfig):
    """Features (n x d), targets and starting weights of the imbalanced batch."""
    rng = np.random.default_rng(cfg.seed)
    X = rng.standard_normal((cfg.n_samples, cfg.n_features)) / np.sqrt(cfg.n_features)
    y = np.concatenate(
        [
            rng.uniform(*cfg.hard_range, size=cfg.n_hard),
            rng.uniform(*cfg.easy_range, size=cfg.n_samples - cfg.n_hard),
        ]
    )
    if cfg.init == "zeros":
        w0 = np.zeros(cfg.n_features)
    else:
        w0 = np.linalg.lstsq(X, y, rcond=None)[0]
        # absorb the solver's roundoff so the starting residual is exactly zero
        y = X @ w0
    return X, y, w0


def _objective(kind, cfg: BenchConfig):
    if kind == PROPOSED:
        p = LossParams(alpha=cfg.alpha, a=cfg.a)
        return (lambda r, y: loss(r, y, p)), (lambda r, y: loss_grad_x(r, y, p))
    return (lambda r, y: baseline(r, kind)), (lambda r, y: baseline_grad(r, kind))


def iterations_to_threshold(curve: np.ndarray, threshold: float) -> int:
    hit = np.flatnonzero(curve <= threshold * curve[0])
    return int(hit[0]) if hit.size else NOT_CONVERGED


def loss_bench(cfg: BenchConfig = BenchConfig()) -> BenchResult:
    X, y, w0 = make_batch(cfg)
    n = len(y)
    curves, iters = {}, {}
    for kind in cfg.kinds:
        value, grad = _objective(kind, cfg)
        w = w0.copy()
        v = np.zeros_like(w)
        curve = np.empty(cfg.max_iters + 1)
        for t in range(cfg.max_iters + 1):
            r = X @ w - y
            curve[t] = np.sum(value(r, y)) / n
            if t == cfg.max_iters:
                break
            v = cfg.momentum * v + X.T @ grad(r, y) / n
            w = w - cfg.lr * v
        curves[kind] = curve
        iters[kind] = iterations_to_threshold(curve, cfg.threshold)
    return BenchResult(curves, iters, X, y)
