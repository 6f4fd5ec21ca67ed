"""Flat JSON configs for the command-line harness.

Each subcommand reads one flat JSON object whose keys mirror the typed
configs.  Unknown keys and ill-typed values raise :class:`ConfigError`;
command-line overrides are applied on top of the file.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

from .bench import BenchConfig
from .errors import ConfigError
from .features import ExtractorSpec
from .loss import LossParams
from .ridge import AlphaSchedule, TrainConfig
from .synthetic import Motion, SyntheticSpec
from .tracker import TrackerConfig

INT, FLOAT, BOOL, STR, INT_LIST, STR_LIST, ALPHA = "int", "float", "bool", "str", "int_list", "str_list", "alpha"

TRACKER_KEYS = {
    "scale_base": (FLOAT, 1.0375),
    "scale_exponents": (INT_LIST, [-2, 0, 2]),
    "scale_lerp": (FLOAT, 0.435),
    "top_k": (INT, 100),
    "sigma_factor": (FLOAT, 0.1),
    "template_size": (INT, 127),
    "search_size": (INT, 255),
    "template_context": (FLOAT, 1.0),
    "search_context": (FLOAT, 255 / 127),
    "hidden_channels": (INT, 32),
    "kernel_size": (INT, 3),
    "lam": (FLOAT, 1e-4),
    "subcell": (BOOL, True),
    "cosine_window": (BOOL, False),
    "scale_penalty": (FLOAT, 1.0),
    "extractor_kind": (STR, "gradients"),
    "filter_count": (INT, 8),
    "filter_size": (INT, 5),
    "extractor_seed": (INT, 0),
    "stride": (INT, 4),
    "alpha": (ALPHA, 1.0),
    "a": (FLOAT, 1.0),
    "branch_eps": (FLOAT, 1e-3),
    "welsch_threshold": (FLOAT, -1e6),
    "epochs": (INT, 70),
    "batch_size": (INT, 8),
    "momentum": (FLOAT, 0.9),
    "lr_start": (FLOAT, 1e-3),
    "lr_end": (FLOAT, 1e-8),
    "steps_per_epoch": (INT, 10),
    "max_shift": (INT, 4),
    "train_bias": (BOOL, False),
    "alpha_schedule": (STR, "fixed"),
    "alpha_start": (FLOAT, 2.0),
    "alpha_end": (FLOAT, 0.0),
    "seed": (INT, 0),
}

SYNTH_KEYS = {
    "frames": (INT, 64),
    "frame_height": (INT, 128),
    "frame_width": (INT, 128),
    "target_w": (FLOAT, 24.0),
    "target_h": (FLOAT, 24.0),
    "start_x": (FLOAT, None),
    "start_y": (FLOAT, None),
    "motion": (STR, "static"),
    "vx": (FLOAT, 0.0),
    "vy": (FLOAT, 0.0),
    "amp": (FLOAT, 0.0),
    "period": (FLOAT, 16.0),
    "scale_drift": (FLOAT, 0.0),
    "noise_std": (FLOAT, 0.02),
    "occlusion_start": (INT, None),
    "occlusion_length": (INT, None),
    "occlusion_fraction": (FLOAT, None),
    "seed": (INT, 0),
}

BENCH_KEYS = {
    "kinds": (STR_LIST, ["proposed", "l2", "l1"]),
    "n_samples": (INT, 8),
    "n_hard": (INT, 1),
    "n_features": (INT, 16),
    "hard_min": (FLOAT, 0.9),
    "hard_max": (FLOAT, 1.0),
    "easy_min": (FLOAT, 0.0),
    "easy_max": (FLOAT, 0.1),
    "init": (STR, "zeros"),
    "alpha": (ALPHA, 1.0),
    "a": (FLOAT, 1.0),
    "lr": (FLOAT, 0.1),
    "momentum": (FLOAT, 0.9),
    "max_iters": (INT, 2000),
    "threshold": (FLOAT, 0.05),
    "seed": (INT, 0),
}


def _coerce(key, kind, value):
    if value is None:
        return None
    ok = True
    if kind == INT:
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif kind == FLOAT:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        value = float(value) if ok else value
    elif kind == ALPHA:
        if value == "-inf":
            value = -math.inf
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        value = float(value) if ok else value
    elif kind == BOOL:
        ok = isinstance(value, bool)
    elif kind == STR:
        ok = isinstance(value, str)
    elif kind == INT_LIST:
        ok = isinstance(value, list) and all(isinstance(v, int) and not isinstance(v, bool) for v in value)
    elif kind == STR_LIST:
        ok = isinstance(value, list) and all(isinstance(v, str) for v in value)
    if not ok:
        raise ConfigError(f"config key {key!r}: expected {kind}, got {value!r}")
    return value


def merge(keys: Mapping[str, tuple], *layers: Optional[Mapping[str, Any]]) -> Dict[str, Any]:
    """Defaults overlaid by each layer in turn; rejects unknown keys."""
    flat = {k: default for k, (_, default) in keys.items()}
    for layer in layers:
        if not layer:
            continue
        unknown = sorted(set(layer) - set(keys))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        for k, v in layer.items():
            flat[k] = _coerce(k, keys[k][0], v)
    return flat


def load_json(path) -> Dict[str, Any]:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


def _build(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def tracker_config(flat: Mapping[str, Any]) -> TrackerConfig:
    def build():
        schedule = flat["alpha_schedule"]
        if schedule == "fixed":
            alpha_schedule = None
        elif schedule == "linear":
            alpha_schedule = AlphaSchedule.linear(flat["alpha_start"], flat["alpha_end"])
        else:
            raise ConfigError(f"alpha_schedule must be 'fixed' or 'linear', got {schedule!r}")
        return TrackerConfig(
            scale_base=flat["scale_base"],
            scale_exponents=tuple(flat["scale_exponents"]),
            scale_lerp=flat["scale_lerp"],
            top_k=flat["top_k"],
            sigma_factor=flat["sigma_factor"],
            extractor=ExtractorSpec(
                kind=flat["extractor_kind"],
                filter_count=flat["filter_count"],
                filter_size=flat["filter_size"],
                seed=flat["extractor_seed"],
                stride=flat["stride"],
            ),
            loss=LossParams(flat["alpha"], flat["a"], flat["branch_eps"], flat["welsch_threshold"]),
            train=TrainConfig(
                epochs=flat["epochs"],
                batch_size=flat["batch_size"],
                momentum=flat["momentum"],
                lr_start=flat["lr_start"],
                lr_end=flat["lr_end"],
                alpha_schedule=alpha_schedule,
                steps_per_epoch=flat["steps_per_epoch"],
                max_shift=flat["max_shift"],
                train_bias=flat["train_bias"],
                seed=flat["seed"],
            ),
            template_size=flat["template_size"],
            search_size=flat["search_size"],
            template_context=flat["template_context"],
            search_context=flat["search_context"],
            hidden_channels=flat["hidden_channels"],
            kernel_size=flat["kernel_size"],
            lam=flat["lam"],
            subcell=flat["subcell"],
            cosine_window=flat["cosine_window"],
            scale_penalty=flat["scale_penalty"],
        )

    return _build(build)


def synthetic_spec(flat: Mapping[str, Any]) -> SyntheticSpec:
    def build():
        kind = flat["motion"]
        if kind == "static":
            motion = Motion.static()
        elif kind == "linear":
            motion = Motion.linear(flat["vx"], flat["vy"])
        elif kind == "sinusoidal":
            motion = Motion.sinusoidal(flat["amp"], flat["period"])
        else:
            raise ConfigError(f"unknown motion {kind!r}")
        start = None
        if flat["start_x"] is not None or flat["start_y"] is not None:
            if flat["start_x"] is None or flat["start_y"] is None:
                raise ConfigError("start_x and start_y must be given together")
            start = (flat["start_x"], flat["start_y"])
        occ_keys = ("occlusion_start", "occlusion_length", "occlusion_fraction")
        occ = [flat[k] for k in occ_keys]
        if any(v is not None for v in occ) and any(v is None for v in occ):
            raise ConfigError("occlusion_start, occlusion_length and occlusion_fraction go together")
        return SyntheticSpec(
            frames=flat["frames"],
            frame_size=(flat["frame_height"], flat["frame_width"]),
            target_size=(flat["target_w"], flat["target_h"]),
            motion=motion,
            start=start,
            scale_drift=flat["scale_drift"],
            noise_std=flat["noise_std"],
            occlusion=tuple(occ) if occ[0] is not None else None,
            seed=flat["seed"],
        )

    return _build(build)


def bench_config(flat: Mapping[str, Any]) -> BenchConfig:
    return _build(
        BenchConfig,
        kinds=tuple(flat["kinds"]),
        n_samples=flat["n_samples"],
        n_hard=flat["n_hard"],
        n_features=flat["n_features"],
        hard_range=(flat["hard_min"], flat["hard_max"]),
        easy_range=(flat["easy_min"], flat["easy_max"]),
        init=flat["init"],
        alpha=flat["alpha"],
        a=flat["a"],
        lr=flat["lr"],
        momentum=flat["momentum"],
        max_iters=flat["max_iters"],
        threshold=flat["threshold"],
        seed=flat["seed"],
    )
