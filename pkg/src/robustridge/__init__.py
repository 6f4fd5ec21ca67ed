"""Weighted-dynamic robust loss, ridge-regression channel selection and a
correlation tracker built on them, runnable on synthetic features."""

from .errors import (
    ConfigError,
    DivergenceError,
    DomainError,
    EmptyBatchError,
    InvalidSpecError,
    SingularSystemError,
    TargetLostError,
    UnsupportedBranchError,
)
from .features import ExtractorSpec, FeatureMap, Frame, extract_features, extract_patch
from .labels import LabelMap, gaussian_label
from .loss import (
    NEG_INF,
    LossParams,
    WeightedResidual,
    baseline_loss,
    batch_loss,
    eval_loss,
    grad_alpha,
    grad_x,
)
from .ridge import (
    AlphaSchedule,
    ChannelScores,
    RidgeLinearModel,
    RidgeNet,
    TrainConfig,
    channel_scores,
    closed_form,
    net_forward,
    ridge_objective,
    select_top_k,
    train_net,
)
from .tracker import TrackerConfig, TrackState, correlate

__version__ = "0.1.0"
