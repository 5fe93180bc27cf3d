"""Model checkpoints: JSON header + little-endian float32 tensor blobs.

Layout: magic "PSAL" | u32 header length | header JSON (utf-8) | blobs.
The header carries the model spec, seed, free-form metadata, and an index
of named tensors with shapes and byte offsets into the blob section.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import asdict
from pathlib import Path

import numpy as np

from ..errors import FormatError
from .models import Model, ModelSpec, build_model

MAGIC = b"PSAL"


def save_model(path, model: Model, meta: dict | None = None) -> None:
    tensors = model.named_params()
    index = []
    offset = 0
    blobs = []
    for name, arr in tensors:
        blob = arr.astype("<f4").tobytes(order="C")
        index.append({"name": name, "shape": list(arr.shape), "offset": offset, "dtype": "<f4"})
        blobs.append(blob)
        offset += len(blob)
    header = {
        "format": "phonosal-checkpoint-v1",
        "spec": asdict(model.spec),
        "seed": model.seed,
        "meta": meta or {},
        "tensors": index,
    }
    hdr = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(hdr)))
        f.write(hdr)
        for blob in blobs:
            f.write(blob)


def load_model(path) -> tuple[Model, dict]:
    """Returns (model, header metadata)."""
    data = Path(path).read_bytes()
    if len(data) < 8 or data[:4] != MAGIC:
        raise FormatError(f"{path}: not a phonosal checkpoint")
    (hlen,) = struct.unpack_from("<I", data, 4)
    if 8 + hlen > len(data):
        raise FormatError(f"{path}: truncated header")
    header = json.loads(data[8 : 8 + hlen].decode("utf-8"))
    base = 8 + hlen
    spec = ModelSpec(**header["spec"])
    model = build_model(spec, seed=header.get("seed") or 0)
    params = {}
    for entry in header["tensors"]:
        count = int(np.prod(entry["shape"])) if entry["shape"] else 1
        start = base + entry["offset"]
        if start + 4 * count > len(data):
            raise FormatError(f"{path}: tensor {entry['name']} extends past end of file")
        arr = np.frombuffer(data, dtype="<f4", count=count, offset=start)
        params[entry["name"]] = arr.reshape(entry["shape"]).astype(np.float64)
    model.set_named_params(params)
    return model, header


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
