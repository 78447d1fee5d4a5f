"""Binary checkpoint files.

Layout (little-endian throughout):

    bytes 0:4    magic b"ADYN"
    bytes 4:8    format version, uint32 (currently 1)
    bytes 8:12   header length in bytes, uint32
    header       UTF-8 JSON: {"desc": <bundle description>,
                              "arrays": [{"name": str, "shape": [int, ...]}]}
    payload      float64 array data, concatenated in header order

Round-trips are exact: float64 payloads are written bit-for-bit.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .bundle import ModelBundle, build_bundle

__all__ = ["CheckpointError", "save_checkpoint", "load_checkpoint"]

MAGIC = b"ADYN"
VERSION = 1


class CheckpointError(RuntimeError):
    """Unreadable or malformed checkpoint file."""


def save_checkpoint(path, bundle: ModelBundle) -> None:
    named = bundle.named_arrays()
    header = {
        "desc": bundle.describe(),
        "arrays": [{"name": n, "shape": list(a.shape)} for n, a in named],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(blob)))
        fh.write(blob)
        for _, arr in named:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path) -> ModelBundle:
    raw = Path(path).read_bytes()
    if len(raw) < 12 or raw[:4] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file (bad magic)")
    version, hlen = struct.unpack("<II", raw[4:12])
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported version {version}")
    if len(raw) < 12 + hlen:
        raise CheckpointError(f"{path}: truncated header")
    try:
        header = json.loads(raw[12 : 12 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: corrupt header") from exc
    offset = 12 + hlen
    arrays: dict[str, np.ndarray] = {}
    for entry in header["arrays"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * 8
        if offset + nbytes > len(raw):
            raise CheckpointError(f"{path}: truncated payload at {entry['name']}")
        arrays[entry["name"]] = np.frombuffer(
            raw, dtype="<f8", count=count, offset=offset
        ).reshape(shape).astype(np.float64)
        offset += nbytes
    if offset != len(raw):
        raise CheckpointError(f"{path}: {len(raw) - offset} trailing bytes")
    return build_bundle(header["desc"], arrays)
