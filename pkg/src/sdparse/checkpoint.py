"""Binary parameter checkpoints.

Layout (all integers little-endian, unsigned 32-bit):

    magic    8 bytes, b"SDPCKPT\\0"
    version  u32 (currently 1)
    count    u32, number of entries
    entry*   name_len u32, name bytes (UTF-8), rank u32,
             extents u32 * rank, payload float64 little-endian (row-major)

Model checkpoints reuse the same container and add one reserved entry,
``__meta__``, holding UTF-8 JSON (vocabulary and configuration) encoded
one byte per float64 element, so a single file carries everything needed
for prediction.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import FormatError

MAGIC = b"SDPCKPT\x00"
VERSION = 1
META_KEY = "__meta__"


def save_params(path: str | Path, arrays: dict[str, np.ndarray]) -> None:
    chunks = [MAGIC, struct.pack("<II", VERSION, len(arrays))]
    for name, arr in arrays.items():
        data = np.asarray(arr, dtype="<f8", order="C")  # preserves 0-d shapes
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<I", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<I", data.ndim))
        chunks.append(struct.pack(f"<{data.ndim}I", *data.shape))
        chunks.append(data.tobytes())
    Path(path).write_bytes(b"".join(chunks))


def load_params(path: str | Path) -> dict[str, np.ndarray]:
    buf = Path(path).read_bytes()
    if buf[: len(MAGIC)] != MAGIC:
        raise FormatError(f"{path}: not a parameter checkpoint (bad magic)")
    offset = len(MAGIC)

    def unpack(fmt: str):
        nonlocal offset
        size = struct.calcsize(fmt)
        if offset + size > len(buf):
            raise FormatError(f"{path}: truncated checkpoint")
        values = struct.unpack_from(fmt, buf, offset)
        offset += size
        return values

    version, count = unpack("<II")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported checkpoint version {version}")
    arrays: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = unpack("<I")
        name = buf[offset : offset + name_len].decode("utf-8")
        offset += name_len
        (rank,) = unpack("<I")
        extents = unpack(f"<{rank}I") if rank else ()
        n = int(np.prod(extents)) if extents else 1
        payload = buf[offset : offset + 8 * n]
        if len(payload) != 8 * n:
            raise FormatError(f"{path}: truncated payload for '{name}'")
        offset += 8 * n
        arrays[name] = np.frombuffer(payload, dtype="<f8").reshape(extents).astype(np.float64)
    return arrays


def save_model(path: str | Path, arrays: dict[str, np.ndarray], meta: dict) -> None:
    payload = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    combined = dict(arrays)
    combined[META_KEY] = np.frombuffer(payload, dtype=np.uint8).astype(np.float64)
    save_params(path, combined)


def load_model(path: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    arrays = load_params(path)
    if META_KEY not in arrays:
        raise FormatError(f"{path}: model checkpoint lacks a '{META_KEY}' entry")
    raw = arrays.pop(META_KEY)
    meta = json.loads(raw.astype(np.uint8).tobytes().decode("utf-8"))
    return arrays, meta
