"""Ridge regression: closed-form oracle, convolutional regression net, channel scoring.

The net regresses a feature map onto its Gaussian soft-label map.  It is
trained under the weighted-dynamic loss applied per spatial cell (residual
``x = prediction - label``, target ``y = label``).  The gradient of that loss
with respect to each input channel, averaged over space, scores how strongly
the channel drives the regression; the highest-magnitude channels are kept.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DivergenceError, SingularSystemError
from .features import FeatureMap
from .labels import LabelMap
from .loss import LossParams, loss, loss_grad_x

__all__ = [
    "RidgeLinearModel",
    "ConvLayer",
    "RidgeNet",
    "AlphaSchedule",
    "TrainConfig",
    "ChannelScores",
    "closed_form",
    "ridge_objective",
    "robust_objective",
    "net_forward",
    "train_net",
    "channel_scores",
    "select_top_k",
]


# --------------------------------------------------------------------------
# closed form
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RidgeLinearModel:
    weights: np.ndarray
    lam: float

    def predict(self, X):
        return np.asarray(X, dtype=np.float64) @ self.weights


def closed_form(X, Y, lam: float) -> RidgeLinearModel:
    """Solve ``(X^T X + lam I) W = X^T Y``.

    Raises :class:`SingularSystemError` when the regularised Gram matrix is
    (numerically) singular, e.g. ``lam = 0`` with rank-deficient ``X``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.asarray(Y, dtype=np.float64)
    n, d = X.shape
    if n < 1 or d < 1:
        raise ValueError("design matrix must be at least 1x1")
    if Y.shape[0] != n:
        raise ValueError(f"Y has {Y.shape[0]} rows, X has {n}")
    if lam < 0:
        raise ValueError("lam must be non-negative")
    A = X.T @ X + lam * np.eye(d)
    if np.linalg.matrix_rank(A) < d:
        raise SingularSystemError("X^T X + lam I is singular")
    try:
        W = np.linalg.solve(A, X.T @ Y)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(str(exc)) from exc
    return RidgeLinearModel(W, float(lam))


# --------------------------------------------------------------------------
# convolutional net
# --------------------------------------------------------------------------


@dataclass
class ConvLayer:
    kernel: np.ndarray  # (k, k, c_in, c_out)
    bias: np.ndarray  # (c_out,)

    @property
    def size(self) -> int:
        return self.kernel.shape[0]

    @property
    def in_channels(self) -> int:
        return self.kernel.shape[2]

    @property
    def out_channels(self) -> int:
        return self.kernel.shape[3]


class RidgeNet:
    """Stack of same-padded convolutions with identity activations.

    The last layer must have a single output channel.  ``lam`` is the ridge
    penalty on the kernels (biases are not penalised).
    """

    def __init__(self, layers: Sequence[ConvLayer], lam: float = 1e-4):
        if not layers:
            raise ValueError("RidgeNet needs at least one layer")
        for layer in layers:
            k = layer.kernel
            if k.ndim != 4 or k.shape[0] != k.shape[1] or k.shape[0] % 2 == 0:
                raise ValueError("kernels must be (k, k, c_in, c_out) with odd k")
            if layer.bias.shape != (k.shape[3],):
                raise ValueError("bias length must match output channels")
        for prev, nxt in zip(layers, layers[1:]):
            if prev.out_channels != nxt.in_channels:
                raise ValueError("layer channel counts do not chain")
        if layers[-1].out_channels != 1:
            raise ValueError("the last layer must produce one channel")
        if lam < 0:
            raise ValueError("lam must be non-negative")
        self.layers = [ConvLayer(np.array(l.kernel, dtype=np.float64), np.array(l.bias, dtype=np.float64)) for l in layers]
        self.lam = float(lam)

    @classmethod
    def default(cls, in_channels: int, hidden: int = 32, kernel_size: int = 3, seed: int = 0, lam: float = 1e-4):
        """3x3 conv to ``hidden`` channels, then 1x1 conv to one channel."""
        rng = np.random.default_rng(seed)
        return cls([_init_layer(rng, kernel_size, in_channels, hidden), _init_layer(rng, 1, hidden, 1)], lam)

    @classmethod
    def linear(cls, in_channels: int, seed: int = 0, lam: float = 1e-4):
        """Single 1x1 layer: a per-cell linear model over the channels."""
        return cls([_init_layer(np.random.default_rng(seed), 1, in_channels, 1)], lam)

    @property
    def in_channels(self) -> int:
        return self.layers[0].in_channels

    def copy(self) -> "RidgeNet":
        return RidgeNet(self.layers, self.lam)

    def weight_norm2(self) -> float:
        return float(sum(np.sum(l.kernel**2) for l in self.layers))

    def __eq__(self, other):
        if not isinstance(other, RidgeNet) or len(self.layers) != len(other.layers) or self.lam != other.lam:
            return False
        return all(
            np.array_equal(a.kernel, b.kernel) and np.array_equal(a.bias, b.bias)
            for a, b in zip(self.layers, other.layers)
        )

    def __repr__(self):
        shapes = ", ".join(f"{l.size}x{l.size}:{l.in_channels}->{l.out_channels}" for l in self.layers)
        return f"RidgeNet([{shapes}], lam={self.lam})"


def _init_layer(rng, k, c_in, c_out) -> ConvLayer:
    s = 1.0 / math.sqrt(k * k * c_in)
    return ConvLayer(rng.uniform(-s, s, size=(k, k, c_in, c_out)), np.zeros(c_out))


def _columns(x, k):
    """im2col for a same-padded k x k correlation: (B*H*W, k*k*C), (i, j, c) order."""
    b, h, w, c = x.shape
    if k == 1:
        return x.reshape(b * h * w, c)
    p = k // 2
    xp = np.pad(x, ((0, 0), (p, p), (p, p), (0, 0)))
    cols = np.concatenate([xp[:, i : i + h, j : j + w, :] for i in range(k) for j in range(k)], axis=-1)
    return cols.reshape(b * h * w, k * k * c)


def _kernel_matrix(kernel):
    k, _, c_in, c_out = kernel.shape
    return kernel.reshape(k * k * c_in, c_out)


def _conv(x, kernel, bias):
    b, h, w, _ = x.shape
    out = _columns(x, kernel.shape[0]) @ _kernel_matrix(kernel) + bias
    return out.reshape(b, h, w, kernel.shape[3])


def _conv_backward(x, kernel, dout, need_input=True):
    k, _, c_in, c_out = kernel.shape
    cols = _columns(x, k)
    dflat = dout.reshape(-1, c_out)
    dk = (cols.T @ dflat).reshape(k, k, c_in, c_out)
    db = dflat.sum(axis=0)
    dx = None
    if need_input:
        flipped = kernel[::-1, ::-1].transpose(0, 1, 3, 2)
        dx = _conv(dout, flipped, np.zeros(c_in))
    return dx, dk, db


def _as_batch(F) -> np.ndarray:
    data = F.data if isinstance(F, FeatureMap) else np.asarray(F, dtype=np.float64)
    if data.ndim == 2:
        data = data[:, :, None]
    if data.ndim == 3:
        data = data[None]
    return data


def _label_values(Y) -> np.ndarray:
    return Y.values if isinstance(Y, LabelMap) else np.asarray(Y, dtype=np.float64)


def _forward(net: RidgeNet, xb):
    acts = [xb]
    for layer in net.layers:
        acts.append(_conv(acts[-1], layer.kernel, layer.bias))
    return acts


def _backward(net: RidgeNet, acts, dpred, need_input=False):
    """Gradients of a scalar w.r.t. kernels, biases (and input) given d/d prediction."""
    grad = dpred[..., None]
    dks: List[np.ndarray] = [None] * len(net.layers)
    dbs: List[np.ndarray] = [None] * len(net.layers)
    for i in reversed(range(len(net.layers))):
        want_dx = i > 0 or need_input
        grad_in, dks[i], dbs[i] = _conv_backward(acts[i], net.layers[i].kernel, grad, want_dx)
        grad = grad_in
    return dks, dbs, grad


def net_forward(net: RidgeNet, F) -> np.ndarray:
    """Prediction map (H x W) for one feature map."""
    xb = _as_batch(F)
    if xb.shape[0] != 1:
        raise ValueError("net_forward takes a single feature map")
    if xb.shape[3] != net.in_channels:
        raise ValueError(f"feature map has {xb.shape[3]} channels, net expects {net.in_channels}")
    return _forward(net, xb)[-1][0, :, :, 0]


ModelOrNet = Union[RidgeLinearModel, RidgeNet]


def ridge_objective(model: ModelOrNet, X, Y, lam: Optional[float] = None) -> float:
    """``sum((prediction - Y)^2) + lam * sum(weights^2)``.

    For a :class:`RidgeLinearModel`, ``X`` is an N x D design matrix and ``Y``
    an N-vector; for a :class:`RidgeNet`, ``X`` is a feature map and ``Y`` a
    label map.  ``lam`` defaults to the model's own.
    """
    Yv = _label_values(Y)
    if isinstance(model, RidgeLinearModel):
        pred = model.predict(X)
        norm2 = float(np.sum(model.weights**2))
        lam = model.lam if lam is None else lam
    else:
        pred = net_forward(model, X)
        norm2 = model.weight_norm2()
        lam = model.lam if lam is None else lam
    if pred.shape != Yv.shape:
        raise ValueError(f"prediction shape {pred.shape} does not match target shape {Yv.shape}")
    return float(np.sum((pred - Yv) ** 2) + lam * norm2)


def robust_objective(net: RidgeNet, F, Y, p: LossParams) -> float:
    """Training objective: per-cell robust loss summed, plus ``lam/2 * ||W||^2``.

    With ``alpha = 2`` and ``a = 0`` this is exactly half of
    :func:`ridge_objective`, so both share the same minimiser.
    """
    Yv = _label_values(Y)
    pred = net_forward(net, F)
    if pred.shape != Yv.shape:
        raise ValueError("prediction and label shapes differ")
    return float(np.sum(loss(pred - Yv, Yv, p)) + 0.5 * net.lam * net.weight_norm2())


# --------------------------------------------------------------------------
# training
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class AlphaSchedule:
    """Per-epoch robustness: constant ``start``, or linear ``start -> end``."""

    start: float = 1.0
    end: Optional[float] = None

    @classmethod
    def fixed(cls, alpha: float) -> "AlphaSchedule":
        return cls(float(alpha))

    @classmethod
    def linear(cls, start: float, end: float) -> "AlphaSchedule":
        return cls(float(start), float(end))

    def at(self, epoch: int, epochs: int) -> float:
        if self.end is None or epochs == 1:
            return self.start
        return self.start + (self.end - self.start) * epoch / (epochs - 1)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 70
    batch_size: int = 8
    momentum: float = 0.9
    lr_start: float = 1e-3
    lr_end: float = 1e-8
    # None trains at the LossParams alpha
    alpha_schedule: Optional[AlphaSchedule] = None
    steps_per_epoch: int = 10
    max_shift: int = 4
    train_bias: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1 or self.steps_per_epoch < 1:
            raise ValueError("batch_size and steps_per_epoch must be >= 1")
        if not self.lr_start >= self.lr_end > 0:
            raise ValueError("need lr_start >= lr_end > 0")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")
        if self.max_shift < 0:
            raise ValueError("max_shift must be >= 0")

    def learning_rates(self) -> np.ndarray:
        """Geometric annealing from ``lr_start`` to ``lr_end``, one value per epoch."""
        if self.epochs == 1:
            return np.array([self.lr_start])
        e = np.arange(self.epochs) / (self.epochs - 1)
        return self.lr_start * (self.lr_end / self.lr_start) ** e

    def alphas(self, p: LossParams) -> List[float]:
        if self.alpha_schedule is None:
            return [p.alpha] * self.epochs
        return [self.alpha_schedule.at(e, self.epochs) for e in range(self.epochs)]


def train_net(net: RidgeNet, F, Y, p: LossParams, cfg: TrainConfig = TrainConfig()) -> Tuple[RidgeNet, np.ndarray]:
    """Fit ``net`` to map ``F`` onto ``Y`` with momentum SGD.

    Each iteration draws ``batch_size`` cyclic shifts (up to ``max_shift``
    cells) of the (feature, label) pair and descends the batch-mean robust
    objective.  Returns a trained copy and the per-iteration objective
    (evaluated before each update).  ``net`` itself is left untouched.
    """
    xb = _as_batch(F)
    Yv = _label_values(Y)
    if xb.shape[0] != 1 or xb.shape[1:3] != Yv.shape:
        raise ValueError("feature map and label map must share spatial shape")
    if xb.shape[3] != net.in_channels:
        raise ValueError("feature channels do not match the net")

    net = net.copy()
    rng = np.random.default_rng(cfg.seed)
    lrs = cfg.learning_rates()
    alphas = cfg.alphas(p)
    vk = [np.zeros_like(l.kernel) for l in net.layers]
    vb = [np.zeros_like(l.bias) for l in net.layers]
    history = []
    it = 0
    for epoch in range(cfg.epochs):
        pe = p.with_alpha(alphas[epoch])
        lr = lrs[epoch]
        for _ in range(cfg.steps_per_epoch):
            shifts = rng.integers(-cfg.max_shift, cfg.max_shift + 1, size=(cfg.batch_size, 2))
            xs = np.concatenate([np.roll(xb, tuple(s), axis=(1, 2)) for s in shifts])
            ys = np.stack([np.roll(Yv, tuple(s), axis=(0, 1)) for s in shifts])
            # overflow is caught below as divergence
            with np.errstate(over="ignore", invalid="ignore"):
                acts = _forward(net, xs)
                resid = acts[-1][..., 0] - ys
                if not np.all(np.isfinite(resid)):
                    raise DivergenceError(it, math.inf)
                value = np.sum(loss(resid, ys, pe)) / cfg.batch_size + 0.5 * net.lam * net.weight_norm2()
            if not math.isfinite(value):
                raise DivergenceError(it, value)
            history.append(float(value))
            dpred = loss_grad_x(resid, ys, pe) / cfg.batch_size
            dks, dbs, _ = _backward(net, acts, dpred)
            for i, layer in enumerate(net.layers):
                vk[i] = cfg.momentum * vk[i] + dks[i] + net.lam * layer.kernel
                layer.kernel = layer.kernel - lr * vk[i]
                if cfg.train_bias:
                    vb[i] = cfg.momentum * vb[i] + dbs[i]
                    layer.bias = layer.bias - lr * vb[i]
            it += 1
    return net, np.asarray(history)


# --------------------------------------------------------------------------
# channel scores
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ChannelScores:
    """Spatially averaged loss gradient per input channel, ranked by magnitude."""

    scores: np.ndarray
    ranking: np.ndarray = field(default=None)

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=np.float64)
        object.__setattr__(self, "scores", scores)
        if self.ranking is None:
            # stable sort keeps the lower index first among equal magnitudes
            object.__setattr__(self, "ranking", np.argsort(-np.abs(scores), kind="stable"))


def channel_scores(net: RidgeNet, F, Y, p: LossParams) -> ChannelScores:
    xb = _as_batch(F)
    Yv = _label_values(Y)
    if xb.shape[0] != 1 or xb.shape[1:3] != Yv.shape:
        raise ValueError("feature map and label map must share spatial shape")
    if xb.shape[3] != net.in_channels:
        raise ValueError("feature channels do not match the net")
    acts = _forward(net, xb)
    resid = acts[-1][0, :, :, 0] - Yv
    dpred = loss_grad_x(resid, Yv, p)[None]
    _, _, dx = _backward(net, acts, dpred, need_input=True)
    return ChannelScores(dx[0].mean(axis=(0, 1)))


def select_top_k(scores: ChannelScores, k: int) -> List[int]:
    n = len(scores.scores)
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside [1, {n}]")
    return [int(i) for i in scores.ranking[:k]]
