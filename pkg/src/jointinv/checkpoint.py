"""JLCK1 network checkpoints.

Layout (all little-endian)::

    b"JLCK1\\0"
    u32 tensor count
    per tensor, in layer order: u32 rank, rank x u32 dims, f64 values
    u32 byte length + UTF-8 JSON of the model config (sorted keys)
    4 x f64: seismic mean, seismic std, impedance mean, impedance std

Missing scalers are stored as NaN.
"""

import json
import math
import struct

import numpy as np

from .data import Scaler
from .model import ModelConfig, build_network

MAGIC = b"JLCK1\0"
_U32 = struct.Struct("<I")


class CheckpointFormatError(ValueError):
    """Malformed or inconsistent checkpoint file."""


def checkpoint_to_bytes(net, scalers=None):
    parts = [MAGIC]
    weights = net.weights()
    parts.append(_U32.pack(len(weights)))
    for w in weights:
        parts.append(_U32.pack(w.data.ndim))
        parts.append(struct.pack(f"<{w.data.ndim}I", *w.shape))
        parts.append(np.ascontiguousarray(w.data, dtype="<f8").tobytes())
    cfg = json.dumps(net.config.to_dict(), sort_keys=True, separators=(",", ":")).encode()
    parts.append(_U32.pack(len(cfg)))
    parts.append(cfg)
    if scalers is None:
        vals = [math.nan] * 4
    else:
        sx, sy = scalers
        vals = [sx.mean, sx.std, sy.mean, sy.std]
    parts.append(struct.pack("<4d", *vals))
    return b"".join(parts)


def checkpoint_from_bytes(buf):
    """Return ``(network, scalers)``; scalers is None when not stored."""
    if buf[:len(MAGIC)] != MAGIC:
        raise CheckpointFormatError("bad magic; not a JLCK1 checkpoint")
    off = len(MAGIC)

    def take(n):
        nonlocal off
        if off + n > len(buf):
            raise CheckpointFormatError("truncated checkpoint")
        chunk = buf[off:off + n]
        off += n
        return chunk

    (count,) = _U32.unpack(take(4))
    arrays = []
    for _ in range(count):
        (rank,) = _U32.unpack(take(4))
        if rank > 8:
            raise CheckpointFormatError(f"implausible tensor rank {rank}")
        dims = struct.unpack(f"<{rank}I", take(4 * rank))
        size = int(np.prod(dims)) if dims else 1
        arrays.append(np.frombuffer(take(8 * size), dtype="<f8").reshape(dims).astype(np.float64))
    (clen,) = _U32.unpack(take(4))
    try:
        cfg = ModelConfig(**json.loads(take(clen).decode()))
    except (ValueError, TypeError) as exc:
        raise CheckpointFormatError(f"bad model config: {exc}") from exc
    vals = struct.unpack("<4d", take(32))
    if off != len(buf):
        raise CheckpointFormatError(f"{len(buf) - off} trailing bytes")
    net = build_network(cfg, 0)
    weights = net.weights()
    if len(weights) != count:
        raise CheckpointFormatError(f"config implies {len(weights)} tensors, file has {count}")
    for w, a in zip(weights, arrays):
        if w.shape != a.shape:
            raise CheckpointFormatError(f"{w.name}: expected shape {w.shape}, file has {a.shape}")
        w.data[...] = a
    scalers = None
    if not any(math.isnan(v) for v in vals):
        scalers = (Scaler(vals[0], vals[1]), Scaler(vals[2], vals[3]))
    return net, scalers


def save_checkpoint(path, net, scalers=None):
    with open(path, "wb") as fh:
        fh.write(checkpoint_to_bytes(net, scalers))


def load_checkpoint(path):
    with open(path, "rb") as fh:
        return checkpoint_from_bytes(fh.read())
