"""Binary weight persistence for the network and its task heads.

Layout (little-endian):
  magic "RSNW" | format version u32 | meta CRC32 u32 | meta length u32 |
  meta JSON bytes | param count u32 | per param: ndim u32, dims u32...,
  raw float64 values.

The meta block stores the backbone config and each head's constructor
arguments, so load rebuilds the exact architecture before filling in
parameters.  Writes go to a temp file and are renamed into place, so a
crashed save never leaves a partial file at the target path.
"""
from __future__ import annotations

import json
import os
import struct
import zlib
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .model import NetConfig, SpectralNet, TaskHead

MAGIC = b"RSNW"
FORMAT_VERSION = 1


class WeightFormatError(ValueError):
    """File is not a valid weight file (magic, structure, or shapes)."""


class WeightVersionError(WeightFormatError):
    """File uses an unsupported format version."""


def _all_params(model: SpectralNet, heads: dict) -> list:
    params = model.params()
    for name in sorted(heads):
        params += heads[name].params()
    return params


def save_weights(path, model: SpectralNet, heads: dict | None = None) -> None:
    heads = heads or {}
    meta = {
        "net": asdict(model.config),
        "heads": {
            name: {
                "kind": h.kind,
                "n_bands": h.n_bands,
                "head_dims": list(h.head_dims),
                "n_classes": h.n_out if h.kind == "classification" else 1,
                "dropout_rate": h.dropout_rate,
            }
            for name, h in heads.items()
        },
    }
    meta_bytes = json.dumps(meta, sort_keys=True).encode()

    blob = bytearray()
    blob += MAGIC
    blob += struct.pack("<III", FORMAT_VERSION, zlib.crc32(meta_bytes),
                        len(meta_bytes))
    blob += meta_bytes
    params = _all_params(model, heads)
    blob += struct.pack("<I", len(params))
    for p in params:
        blob += struct.pack("<I", p.data.ndim)
        blob += struct.pack(f"<{p.data.ndim}I", *p.data.shape)
        blob += np.ascontiguousarray(p.data, dtype="<f8").tobytes()

    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as f:
        f.write(blob)
        f.flush()
        os.fsync(f.fileno())
    os.replace(tmp, path)


class _Reader:
    def __init__(self, data: bytes, path):
        self.data = data
        self.off = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.off + n > len(self.data):
            raise WeightFormatError(f"{self.path}: truncated weight file")
        out = self.data[self.off:self.off + n]
        self.off += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]


def load_weights(path):
    """Rebuild (model, heads) from a weight file; rejects malformed files."""
    raw = Path(path).read_bytes()
    r = _Reader(raw, path)
    if r.take(4) != MAGIC:
        raise WeightFormatError(f"{path}: bad magic, not a weight file")
    version = r.u32()
    if version != FORMAT_VERSION:
        raise WeightVersionError(
            f"{path}: format version {version}, expected {FORMAT_VERSION}"
        )
    crc, meta_len = r.u32(), r.u32()
    meta_bytes = r.take(meta_len)
    if zlib.crc32(meta_bytes) != crc:
        raise WeightFormatError(f"{path}: meta checksum mismatch")
    meta = json.loads(meta_bytes)

    config = NetConfig(**{**meta["net"],
                          "head_dims": tuple(meta["net"]["head_dims"])})
    model = SpectralNet(config, seed=0)
    heads = {
        name: TaskHead(kind=h["kind"], n_bands=h["n_bands"],
                       head_dims=tuple(h["head_dims"]),
                       n_classes=h["n_classes"],
                       dropout_rate=h["dropout_rate"], seed=0)
        for name, h in meta["heads"].items()
    }

    params = _all_params(model, heads)
    n = r.u32()
    if n != len(params):
        raise WeightFormatError(
            f"{path}: file has {n} parameters, architecture needs {len(params)}"
        )
    for p in params:
        ndim = r.u32()
        if ndim > 8:
            raise WeightFormatError(f"{path}: implausible ndim {ndim}")
        shape = struct.unpack(f"<{ndim}I", r.take(4 * ndim))
        if shape != p.data.shape:
            raise WeightFormatError(
                f"{path}: stored shape {shape} != expected {p.data.shape}"
            )
        count = int(np.prod(shape)) if shape else 1
        p.data = np.frombuffer(r.take(8 * count), dtype="<f8").reshape(
            shape).astype(np.float64)
    if r.off != len(raw):
        raise WeightFormatError(f"{path}: {len(raw) - r.off} trailing bytes")
    return model, heads
