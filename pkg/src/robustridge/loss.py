"""Weighted-dynamic robust loss.

The family is

    L(x, alpha) = e^{a y} * |alpha - 2| / alpha * ((x^2 / |alpha - 2| + 1)^{alpha / 2} - 1)

with the removable singularities at ``alpha = 2`` (quadratic) and ``alpha = 0``
(Lorentzian) plus the ``alpha -> -inf`` limit (Welsch) evaluated in closed form.
``y`` is the soft-label target of the sample; ``e^{a y}`` up-weights foreground
samples, which are rare compared to background.

Array functions (:func:`loss`, :func:`loss_grad_x`, :func:`loss_grad_alpha`)
broadcast over ``x`` and ``y`` with a scalar ``alpha``; the ``eval_*`` wrappers
take a single :class:`WeightedResidual`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import DomainError, EmptyBatchError, UnsupportedBranchError

NEG_INF = float("-inf")

L2, LOG, WELSCH, GENERAL = "l2", "log", "welsch", "general"


@dataclass(frozen=True)
class LossParams:
    """Shape ``alpha`` and weighting ``a`` of the loss, plus branch switching.

    ``alpha`` within ``branch_eps`` of 0 or 2 uses the corresponding limit;
    ``alpha <= welsch_threshold`` (or ``-inf``) uses the Welsch limit.
    """

    alpha: float = 1.0
    a: float = 1.0
    branch_eps: float = 1e-3
    welsch_threshold: float = -1e6

    def __post_init__(self):
        if math.isnan(self.alpha) or self.alpha == math.inf:
            raise DomainError(f"alpha must be finite or -inf, got {self.alpha}")
        if not 0.0 <= self.a <= 1.0:
            raise DomainError(f"a must lie in [0, 1], got {self.a}")
        if not 0.0 < self.branch_eps < 0.5:
            raise DomainError(f"branch_eps must lie in (0, 0.5), got {self.branch_eps}")
        if not self.welsch_threshold < 0.0:
            raise DomainError("welsch_threshold must be negative")

    def with_alpha(self, alpha: float) -> "LossParams":
        return replace(self, alpha=float(alpha))

    @property
    def branch(self) -> str:
        alpha = self.alpha
        if alpha == NEG_INF or alpha <= self.welsch_threshold:
            return WELSCH
        if abs(alpha - 2.0) <= self.branch_eps:
            return L2
        if abs(alpha) <= self.branch_eps:
            return LOG
        return GENERAL


@dataclass(frozen=True)
class WeightedResidual:
    """One regression sample: residual ``x`` and its soft-label target ``y``."""

    x: float
    y: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.x):
            raise DomainError(f"residual must be finite, got {self.x}")
        if not 0.0 <= self.y <= 1.0:
            raise DomainError(f"target must lie in [0, 1], got {self.y}")


def _check(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise DomainError("residuals must be finite")
    if np.any(y < 0.0) or np.any(y > 1.0) or np.any(np.isnan(y)):
        raise DomainError("targets must lie in [0, 1]")
    return x, y


def sample_weight(y, a):
    """Hard-sample weight ``e^{a y}``."""
    return np.exp(a * np.asarray(y, dtype=np.float64))


def _unweighted(x, p: LossParams):
    branch = p.branch
    x2 = x * x
    if branch == L2:
        return 0.5 * x2
    if branch == LOG:
        return np.log1p(0.5 * x2)
    if branch == WELSCH:
        return -np.expm1(-0.5 * x2)
    alpha = p.alpha
    b = abs(alpha - 2.0)
    # (z^{alpha/2} - 1) via expm1/log1p keeps precision for small x and alpha
    return (b / alpha) * np.expm1(0.5 * alpha * np.log1p(x2 / b))


def loss(x, y, p: LossParams):
    """Per-sample loss; broadcasts over ``x`` and ``y``."""
    x, y = _check(x, y)
    return sample_weight(y, p.a) * _unweighted(x, p)


def loss_grad_x(x, y, p: LossParams):
    """Derivative of :func:`loss` with respect to the residual."""
    x, y = _check(x, y)
    branch = p.branch
    x2 = x * x
    if branch == L2:
        d = x
    elif branch == LOG:
        d = x / (1.0 + 0.5 * x2)
    elif branch == WELSCH:
        d = x * np.exp(-0.5 * x2)
    else:
        alpha = p.alpha
        b = abs(alpha - 2.0)
        d = x * np.exp((0.5 * alpha - 1.0) * np.log1p(x2 / b))
    return sample_weight(y, p.a) * d


def loss_grad_alpha(x, y, p: LossParams):
    """Derivative of :func:`loss` with respect to ``alpha``.

    Only defined on the general branch; the limiting branches are constant in
    ``alpha`` by construction and raise :class:`UnsupportedBranchError`.
    """
    x, y = _check(x, y)
    if p.branch != GENERAL:
        raise UnsupportedBranchError(f"grad_alpha undefined on the {p.branch} branch")
    alpha = p.alpha
    s = 1.0 if alpha > 2.0 else -1.0
    b = abs(alpha - 2.0)
    x2 = x * x
    t = np.log1p(x2 / b)
    e = np.expm1(0.5 * alpha * t)
    z = 1.0 + x2 / b
    # d(b/alpha)/dalpha = (s*alpha - b)/alpha^2 = 2s/alpha^2
    d_coef = 2.0 * s / (alpha * alpha)
    # d(z^{alpha/2})/dalpha = z^{alpha/2} * (t/2 - (alpha/2) * s x^2 / (b^2 z))
    d_pow = (e + 1.0) * (0.5 * t - 0.5 * alpha * s * x2 / (b * b * z))
    return sample_weight(y, p.a) * (d_coef * e + (b / alpha) * d_pow)


def eval_loss(s: WeightedResidual, p: LossParams) -> float:
    return float(loss(s.x, s.y, p))


def grad_x(s: WeightedResidual, p: LossParams) -> float:
    return float(loss_grad_x(s.x, s.y, p))


def grad_alpha(s: WeightedResidual, p: LossParams) -> float:
    return float(loss_grad_alpha(s.x, s.y, p))


def batch_loss(samples: Sequence[WeightedResidual], p: LossParams, reduction: str = "mean") -> float:
    if reduction not in ("sum", "mean"):
        raise ValueError(f"unknown reduction {reduction!r}")
    if len(samples) == 0:
        raise EmptyBatchError("batch_loss needs at least one sample")
    x = np.array([s.x for s in samples])
    y = np.array([s.y for s in samples])
    total = float(np.sum(loss(x, y, p)))
    return total / len(samples) if reduction == "mean" else total


def baseline(x, kind: str):
    """Unweighted comparison losses: ``l2`` is ``x^2/2``, ``l1`` is ``|x|``."""
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise DomainError("residuals must be finite")
    if kind == "l2":
        return 0.5 * x * x
    if kind == "l1":
        return np.abs(x)
    raise ValueError(f"unknown baseline kind {kind!r}")


def baseline_grad(x, kind: str):
    x = np.asarray(x, dtype=np.float64)
    if kind == "l2":
        return x.copy()
    if kind == "l1":
        return np.sign(x)
    raise ValueError(f"unknown baseline kind {kind!r}")


def baseline_loss(s: WeightedResidual, kind: str) -> float:
    return float(baseline(s.x, kind))
