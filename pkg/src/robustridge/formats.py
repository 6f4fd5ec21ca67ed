"""On-disk formats: binary PGM frames, the DSRN net container, CSV tables."""

from __future__ import annotations

import csv
import io
import struct
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .features import Frame
from .ridge import ConvLayer, RidgeNet

DSRN_MAGIC = b"DSRN"
DSRN_VERSION = 1


# -- PGM ---------------------------------------------------------------------


def _pgm_tokens(buf: bytes, count: int):
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    tokens, pos = [], 0
    while len(tokens) < count:
        while pos < len(buf) and buf[pos : pos + 1].isspace():
            pos += 1
        if buf[pos : pos + 1] == b"#":
            while pos < len(buf) and buf[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(buf) and not buf[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError("truncated PGM header")
        tokens.append(buf[start:pos])
    # exactly one whitespace byte separates the header from the raster
    return tokens, pos + 1


def read_pgm(path) -> Frame:
    buf = Path(path).read_bytes()
    tokens, pos = _pgm_tokens(buf, 4)
    if tokens[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM (P5) file")
    width, height, maxval = (int(t) for t in tokens[1:])
    if maxval != 255:
        raise ValueError(f"{path}: only maxval 255 is supported, got {maxval}")
    raster = np.frombuffer(buf, dtype=np.uint8, count=width * height, offset=pos)
    return Frame(raster.reshape(height, width).astype(np.float64) / 255.0)


def frame_to_bytes(frame: Frame) -> np.ndarray:
    return np.round(frame.pixels * 255.0).astype(np.uint8)


def write_pgm(path, frame: Frame) -> None:
    raster = frame_to_bytes(frame)
    h, w = raster.shape
    Path(path).write_bytes(b"P5\n%d %d\n255\n" % (w, h) + raster.tobytes())


# -- DSRN --------------------------------------------------------------------
#
# "DSRN" | u32 version | u32 n_layers | f64 lam |
# n_layers x (u32 k, u32 k, u32 c_in, u32 c_out) |
# per layer: kernel (k, k, c_in, c_out, C order) then bias, all f64, little-endian


def net_to_bytes(net: RidgeNet) -> bytes:
    out = [DSRN_MAGIC, struct.pack("<IId", DSRN_VERSION, len(net.layers), net.lam)]
    for layer in net.layers:
        out.append(struct.pack("<4I", *layer.kernel.shape))
    for layer in net.layers:
        out.append(layer.kernel.astype("<f8").tobytes())
        out.append(layer.bias.astype("<f8").tobytes())
    return b"".join(out)


def net_from_bytes(data: bytes) -> RidgeNet:
    try:
        return _parse_dsrn(data)
    except struct.error as exc:
        raise ValueError(f"truncated DSRN container: {exc}") from exc


def _parse_dsrn(data: bytes) -> RidgeNet:
    if data[:4] != DSRN_MAGIC:
        raise ValueError("not a DSRN container")
    version, n_layers, lam = struct.unpack_from("<IId", data, 4)
    if version != DSRN_VERSION:
        raise ValueError(f"unsupported DSRN version {version}")
    pos = 4 + struct.calcsize("<IId")
    shapes = []
    for _ in range(n_layers):
        shapes.append(struct.unpack_from("<4I", data, pos))
        pos += 16
    layers = []
    for shape in shapes:
        n = int(np.prod(shape))
        if pos + 8 * (n + shape[3]) > len(data):
            raise ValueError("truncated DSRN container")
        kernel = np.frombuffer(data, dtype="<f8", count=n, offset=pos).reshape(shape)
        pos += 8 * n
        bias = np.frombuffer(data, dtype="<f8", count=shape[3], offset=pos)
        pos += 8 * shape[3]
        layers.append(ConvLayer(kernel.astype(np.float64), bias.astype(np.float64)))
    if pos != len(data):
        raise ValueError("trailing bytes in DSRN container")
    return RidgeNet(layers, lam)


def save_net(path, net: RidgeNet) -> None:
    Path(path).write_bytes(net_to_bytes(net))


def load_net(path) -> RidgeNet:
    return net_from_bytes(Path(path).read_bytes())


# -- CSV ---------------------------------------------------------------------


def fmt(value) -> str:
    """Render a cell; reals get 17 significant digits so they round-trip."""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % value
    return str(value)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    Path(path).write_text(csv_text(header, rows))


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
