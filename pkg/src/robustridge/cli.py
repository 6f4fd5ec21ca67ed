"""Command-line harness.

    robustridge synth      --config synth.json --out seq/
    robustridge track      seq/ --config tracker.json --out run/
    robustridge loss-bench --config bench.json --out bench/
    robustridge channels   seq/frame_0000.pgm --bbox 63.5,63.5,24,24 --out chan/

Exit status: 0 on success, 2 on an invalid config, 3 on a runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import config as C
from .bench import loss_bench
from .errors import ConfigError
from .formats import read_csv, read_pgm, write_csv, write_pgm
from .metrics import run_tracking
from .synthetic import synth_sequence
from .tracker import init as tracker_init

log = logging.getLogger("robustridge")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def _overrides(args, mapping):
    """CLI flags that were actually given, keyed by config name."""
    out = {}
    for attr, key in mapping.items():
        value = getattr(args, attr, None)
        if value is not None:
            out[key] = value
    return out


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_synth(args) -> int:
    flat = C.merge(
        C.SYNTH_KEYS,
        C.load_json(args.config),
        _overrides(args, {"seed": "seed", "frames": "frames", "motion": "motion", "noise_std": "noise_std"}),
    )
    spec = C.synthetic_spec(flat)
    frames, gt = synth_sequence(spec)
    out = _out_dir(args)
    for t, frame in enumerate(frames):
        write_pgm(out / f"frame_{t:04d}.pgm", frame)
    write_csv(out / "gt.csv", ["frame", "cx", "cy", "w", "h"], [[t, *row] for t, row in enumerate(gt)])
    print(f"wrote {len(frames)} frames to {out}")
    return EXIT_OK


def _tracker_flat(args):
    return C.merge(
        C.TRACKER_KEYS,
        C.load_json(args.config),
        _overrides(args, {"seed": "seed", "top_k": "top_k", "extractor": "extractor_kind", "stride": "stride", "epochs": "epochs"}),
    )


def load_sequence(seq_dir):
    seq_dir = Path(seq_dir)
    rows = read_csv(seq_dir / "gt.csv")
    gt = np.array([[float(r[k]) for k in ("cx", "cy", "w", "h")] for r in rows])
    frames = [read_pgm(seq_dir / f"frame_{int(r['frame']):04d}.pgm") for r in rows]
    return frames, gt


def cmd_track(args) -> int:
    cfg = C.tracker_config(_tracker_flat(args))
    frames, gt = load_sequence(args.sequence)
    m = run_tracking(frames, gt, cfg)
    out = _out_dir(args)
    header = ["frame", "cx", "cy", "w", "h", "gt_cx", "gt_cy", "gt_w", "gt_h", "center_error", "iou"]
    rows = [[t, *m.boxes[t], *gt[t], m.center_errors[t], m.ious[t]] for t in range(len(gt))]
    write_csv(out / "metrics.csv", header, rows)
    lost = -1 if m.lost_at is None else m.lost_at
    write_csv(out / "summary.csv", ["frames", "mean_iou", "success_rate", "lost_at"], [[len(gt), m.mean_iou, m.success_rate, lost]])
    # wall-clock speed is reported here only, so CSVs stay byte-deterministic
    print(f"mean IoU {m.mean_iou:.4f}  success@0.5 {m.success_rate:.4f}  {m.fps:.1f} FPS")
    return EXIT_OK


def cmd_loss_bench(args) -> int:
    flat = C.merge(
        C.BENCH_KEYS,
        C.load_json(args.config),
        _overrides(args, {"seed": "seed", "max_iters": "max_iters", "lr": "lr", "alpha": "alpha"}),
    )
    cfg = C.bench_config(flat)
    result = loss_bench(cfg)
    out = _out_dir(args)
    kinds = list(cfg.kinds)
    n = cfg.max_iters + 1
    write_csv(out / "curves.csv", ["iteration", *kinds], ([t, *(result.curves[k][t] for k in kinds)] for t in range(n)))
    write_csv(
        out / "summary.csv",
        ["kind", "iterations_to_threshold", "initial_loss", "final_loss"],
        [[k, result.iters_to_threshold[k], result.curves[k][0], result.curves[k][-1]] for k in kinds],
    )
    for k in kinds:
        print(f"{k:>10}: {result.iters_to_threshold[k]} iterations to {cfg.threshold:g} x initial")
    return EXIT_OK


def _parse_bbox(text):
    try:
        parts = [float(v) for v in text.split(",")]
    except ValueError:
        parts = []
    if len(parts) != 4:
        raise ConfigError(f"--bbox expects cx,cy,w,h; got {text!r}")
    return tuple(parts)


def channel_rows(state):
    scores = state.scores
    chosen = set(state.selected)
    return [[int(ch), scores.scores[ch], rank + 1, int(ch) in chosen] for rank, ch in enumerate(scores.ranking)]


def cmd_channels(args) -> int:
    cfg = C.tracker_config(_tracker_flat(args))
    bbox = _parse_bbox(args.bbox)
    frame = read_pgm(args.frame)
    state = tracker_init(frame, bbox, cfg)
    out = _out_dir(args)
    write_csv(out / "channels.csv", ["channel", "score", "rank", "selected"], channel_rows(state))
    print(f"selected channels: {list(state.selected)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robustridge", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat JSON config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", default=".", help="output directory")

    p = sub.add_parser("synth", help="generate a synthetic sequence (PGM frames + gt.csv)")
    common(p)
    p.add_argument("--frames", type=int)
    p.add_argument("--motion", choices=["static", "linear", "sinusoidal"])
    p.add_argument("--noise-std", dest="noise_std", type=float)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("track", help="track a sequence directory and write metrics.csv")
    common(p)
    p.add_argument("sequence", help="directory with frame_NNNN.pgm and gt.csv")
    p.add_argument("--top-k", dest="top_k", type=int)
    p.add_argument("--extractor", choices=["raw", "gradients", "random_filters"])
    p.add_argument("--stride", type=int)
    p.add_argument("--epochs", type=int)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("loss-bench", help="convergence benchmark (curves.csv + summary.csv)")
    common(p)
    p.add_argument("--max-iters", dest="max_iters", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--alpha", type=float)
    p.set_defaults(func=cmd_loss_bench)

    p = sub.add_parser("channels", help="score and rank feature channels for one frame")
    common(p)
    p.add_argument("frame", help="PGM frame")
    p.add_argument("--bbox", required=True, help="cx,cy,w,h")
    p.add_argument("--top-k", dest="top_k", type=int)
    p.add_argument("--extractor", choices=["raw", "gradients", "random_filters"])
    p.add_argument("--stride", type=int)
    p.add_argument("--epochs", type=int)
    p.set_defaults(func=cmd_channels)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - any other failure maps to the runtime exit code
        log.debug("runtime failure", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
