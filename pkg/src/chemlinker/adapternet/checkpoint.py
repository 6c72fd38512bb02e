"""Checkpoint file format.

Layout: 5-byte magic ``CLMK1``, 8-byte little-endian header length, UTF-8
JSON header, then the concatenated little-endian float32 tensor payload.
The header records tensor names, shapes, byte offsets, frozen flags, and an
echo of the training configuration.
"""

from __future__ import annotations

import dataclasses
import json
import struct

import numpy as np

from chemlinker.adapternet.model import ModelParams, TrainConfig

MAGIC = b"CLMK1"


def save_checkpoint(params: ModelParams, path) -> None:
    offset = 0
    entries = []
    blobs = []
    for name in sorted(params.tensors):
        array = np.ascontiguousarray(params.tensors[name], dtype="<f4")
        blob = array.tobytes()
        entries.append({
            "name": name,
            "shape": list(array.shape),
            "offset": offset,
            "frozen": name in params.frozen,
        })
        offset += len(blob)
        blobs.append(blob)
    header = json.dumps({
        "dtype": "f4",
        "tensors": entries,
        "config": dataclasses.asdict(params.config),
    }).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(header)))
        fh.write(header)
        for blob in blobs:
            fh.write(blob)


def load_checkpoint(path) -> ModelParams:
    with open(path, "rb") as fh:
        magic = fh.read(5)
        if magic != MAGIC:
            raise ValueError(f"not a checkpoint file (magic {magic!r})")
        (header_len,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(header_len).decode("utf-8"))
        payload = fh.read()
    if header.get("dtype") != "f4":
        raise ValueError("unsupported tensor dtype")
    tensors = {}
    frozen = set()
    for entry in header["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = entry["offset"]
        array = np.frombuffer(
            payload, dtype="<f4", count=count, offset=start)
        tensors[entry["name"]] = array.reshape(shape).copy()
        if entry["frozen"]:
            frozen.add(entry["name"])
    cfg = TrainConfig(**header["config"])
    return ModelParams(tensors, frozen, cfg)
