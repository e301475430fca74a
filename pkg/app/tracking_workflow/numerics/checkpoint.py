"""Self-describing weight checkpoint container.

Binary layout (little-endian):
    magic  b"NLGTCKPT"
    uint32 version, uint32 entry count
    per entry: uint16 name length, utf-8 name, uint8 ndim, uint32 dims..., float64 data
A sibling `<path>.manifest.txt` lists the layer specs in plain text.
"""

import struct
from pathlib import Path

import numpy as np

from app.core.exception import NumericsError
from app.infrastructure.blob_manager import BaseBlobManager
from app.tracking_workflow.numerics.layers import LayerSpec
from app.tracking_workflow.numerics.module import Module

MAGIC = b"NLGTCKPT"
VERSION = 1


def manifest_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".manifest.txt")


def encode_checkpoint(arrays: dict[str, np.ndarray]) -> bytes:
    chunks = [MAGIC, struct.pack("<II", VERSION, len(arrays))]
    for name, array in arrays.items():
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<B", array.ndim))
        chunks.append(struct.pack(f"<{array.ndim}I", *array.shape))
        chunks.append(np.ascontiguousarray(array, dtype="<f8").tobytes())
    return b"".join(chunks)


def decode_checkpoint(payload: bytes) -> dict[str, np.ndarray]:
    if payload[: len(MAGIC)] != MAGIC:
        raise NumericsError("checkpoint", "decode", "bad magic header")
    offset = len(MAGIC)
    version, count = struct.unpack_from("<II", payload, offset)
    offset += 8
    if version != VERSION:
        raise NumericsError("checkpoint", "decode", f"unsupported version {version}")
    arrays: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", payload, offset)
        offset += 2
        name = payload[offset : offset + name_len].decode("utf-8")
        offset += name_len
        (ndim,) = struct.unpack_from("<B", payload, offset)
        offset += 1
        shape = struct.unpack_from(f"<{ndim}I", payload, offset)
        offset += 4 * ndim
        size = int(np.prod(shape)) if ndim else 1
        data = np.frombuffer(payload, dtype="<f8", count=size, offset=offset)
        offset += 8 * size
        arrays[name] = data.reshape(shape).astype(np.float64)
    return arrays


def save_checkpoint(
    blob_manager: BaseBlobManager,
    path: str | Path,
    module: Module,
    specs: list[LayerSpec],
) -> None:
    """モジュールの全パラメータとマニフェストを保存."""
    blob_manager.save_blob_as_bytes(encode_checkpoint(module.parameters()), path)
    manifest = "\n".join(spec.to_manifest_line() for spec in specs) + "\n"
    blob_manager.save_blob_as_str(manifest, manifest_path(path))


def load_checkpoint(blob_manager: BaseBlobManager, path: str | Path, module: Module) -> None:
    """保存済みパラメータをモジュールへ名前で書き戻す（形状不一致は拒否）."""
    arrays = decode_checkpoint(blob_manager.read_blob_as_bytes(path))
    params = module.parameters()
    missing = sorted(set(params) - set(arrays))
    if missing:
        raise NumericsError("checkpoint", str(path), f"missing parameters: {missing[:5]}")
    for name, target in params.items():
        source = arrays[name]
        if source.shape != target.shape:
            raise NumericsError(
                "checkpoint", name, f"shape mismatch {source.shape} vs {target.shape}"
            )
        np.copyto(target, source.astype(target.dtype))
