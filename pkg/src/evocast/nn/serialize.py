"""Model artifact format.

Layout: magic ``GNAS`` | format version (u32) | descriptor length (u32) |
descriptor JSON (spec, training metadata, scaler ids) | tensor count (u32) |
per tensor: name (u16 length + utf-8), ndim (u8), dims (u32 each),
little-endian float32 payload | CRC32 (u32) of everything before it.

Round-trip is exact: loaded weights are byte-identical, so predictions
match the pre-save model bit for bit.
"""

from __future__ import annotations

import json
import struct
import zlib
from pathlib import Path

import numpy as np

from ..errors import ArtifactError
from .model import Model, ModelSpec
from .training import TrainedModel

MAGIC = b"GNAS"
FORMAT_VERSION = 1


def save_model(model: TrainedModel, path) -> int:
    """Serialize a trained model; returns bytes written."""
    path = Path(path)
    descriptor = {
        "spec": model.spec.descriptor(),
        "train_meta": model.train_meta,
        "scaler_ids": list(model.scaler_ids),
    }
    desc_bytes = json.dumps(descriptor, separators=(",", ":")).encode("utf-8")
    chunks = [MAGIC, struct.pack("<II", FORMAT_VERSION, len(desc_bytes)), desc_bytes,
              struct.pack("<I", len(model.params))]
    for name, tensor in model.params.items():
        if tensor.dtype != np.float32:
            raise ArtifactError(f"artifact tensors must be float32, {name} is {tensor.dtype}")
        name_b = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(name_b)))
        chunks.append(name_b)
        chunks.append(struct.pack("<B", tensor.ndim))
        chunks.append(struct.pack(f"<{tensor.ndim}I", *tensor.shape))
        chunks.append(np.ascontiguousarray(tensor, dtype="<f4").tobytes())
    blob = b"".join(chunks)
    blob += struct.pack("<I", zlib.crc32(blob) & 0xFFFFFFFF)
    path.write_bytes(blob)
    return len(blob)


def load_model(path) -> TrainedModel:
    """Load and validate an artifact (magic, version, checksum, shapes)."""
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise ArtifactError(f"cannot read artifact {path}: {exc}") from exc
    if len(blob) < 16:
        raise ArtifactError(f"{path}: too short to be a model artifact")
    if blob[:4] != MAGIC:
        raise ArtifactError(f"{path}: bad magic {blob[:4]!r}")
    stored_crc = struct.unpack("<I", blob[-4:])[0]
    if zlib.crc32(blob[:-4]) & 0xFFFFFFFF != stored_crc:
        raise ArtifactError(f"{path}: checksum mismatch (corrupt artifact)")
    version, desc_len = struct.unpack_from("<II", blob, 4)
    if version != FORMAT_VERSION:
        raise ArtifactError(f"{path}: unsupported format version {version}")
    pos = 12
    descriptor = json.loads(blob[pos:pos + desc_len].decode("utf-8"))
    pos += desc_len
    (n_tensors,) = struct.unpack_from("<I", blob, pos)
    pos += 4
    params = {}
    for _ in range(n_tensors):
        (name_len,) = struct.unpack_from("<H", blob, pos)
        pos += 2
        name = blob[pos:pos + name_len].decode("utf-8")
        pos += name_len
        (ndim,) = struct.unpack_from("<B", blob, pos)
        pos += 1
        shape = struct.unpack_from(f"<{ndim}I", blob, pos)
        pos += 4 * ndim
        count = int(np.prod(shape)) if ndim else 1
        tensor = np.frombuffer(blob, dtype="<f4", count=count, offset=pos).reshape(shape)
        pos += count * 4
        params[name] = tensor.copy()
    spec = ModelSpec.from_descriptor(descriptor["spec"])
    expected = Model(spec).param_defs()
    if set(expected) != set(params):
        missing = set(expected) ^ set(params)
        raise ArtifactError(f"{path}: tensor set does not match spec (diff: {sorted(missing)})")
    for name, (shape, _) in expected.items():
        if tuple(params[name].shape) != tuple(shape):
            raise ArtifactError(
                f"{path}: tensor {name} has shape {params[name].shape}, spec wants {shape}")
    return TrainedModel(
        spec=spec,
        params=params,
        train_meta=descriptor.get("train_meta", {}),
        scaler_ids=tuple(descriptor.get("scaler_ids", ())),
    )
