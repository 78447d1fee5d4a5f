"""Binary dataset files.

Layout (little-endian throughout):

    bytes 0:4    magic b"ADDS"
    bytes 4:8    format version, uint32 (currently 1)
    bytes 8:12   header length in bytes, uint32
    header       UTF-8 JSON: {"platform": str, "dims": [sd, ad, ed],
                              "meta": dict,
                              "trajectories": [{"n_steps": int, "meta": dict}]}
    payload      per trajectory, in order: states (n_steps+1, sd),
                 actions (n_steps, ad), envs (n_steps, ed), float64

Round-trips are exact: float64 payloads are written bit-for-bit.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..envs import platform_info
from .dataset import Dataset, Trajectory

__all__ = ["DatasetError", "dataset_save", "dataset_load"]

MAGIC = b"ADDS"
VERSION = 1


class DatasetError(RuntimeError):
    """Unreadable or malformed dataset file."""


def dataset_save(path, ds: Dataset) -> None:
    info = platform_info(ds.platform)
    header = {
        "platform": ds.platform,
        "dims": [info.state_dim, info.action_dim, info.env_dim],
        "meta": ds.meta,
        "trajectories": [{"n_steps": len(t), "meta": t.meta} for t in ds.trajectories],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(blob)))
        fh.write(blob)
        for t in ds.trajectories:
            for arr in (t.states, t.actions, t.envs):
                fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def dataset_load(path) -> Dataset:
    raw = Path(path).read_bytes()
    if len(raw) < 12 or raw[:4] != MAGIC:
        raise DatasetError(f"{path}: not a dataset file (bad magic)")
    version, hlen = struct.unpack("<II", raw[4:12])
    if version != VERSION:
        raise DatasetError(f"{path}: unsupported version {version}")
    if len(raw) < 12 + hlen:
        raise DatasetError(f"{path}: truncated header")
    try:
        header = json.loads(raw[12 : 12 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DatasetError(f"{path}: corrupt header") from exc
    try:
        sd, ad, ed = header["dims"]
        entries = header["trajectories"]
        platform = header["platform"]
    except (KeyError, ValueError) as exc:
        raise DatasetError(f"{path}: header missing fields") from exc
    offset = 12 + hlen

    def block(shape):
        nonlocal offset
        count = int(np.prod(shape))
        nbytes = count * 8
        if offset + nbytes > len(raw):
            raise DatasetError(f"{path}: truncated payload")
        out = np.frombuffer(raw, dtype="<f8", count=count, offset=offset)
        offset += nbytes
        return out.reshape(shape).astype(np.float64)

    trajs = []
    for entry in entries:
        n = int(entry["n_steps"])
        trajs.append(Trajectory(block((n + 1, sd)), block((n, ad)), block((n, ed)),
                                entry.get("meta", {})))
    if offset != len(raw):
        raise DatasetError(f"{path}: {len(raw) - offset} trailing bytes")
    try:
        return Dataset(platform, trajs, header.get("meta", {}))
    except ValueError as exc:
        raise DatasetError(f"{path}: {exc}") from exc
