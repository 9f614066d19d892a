"""Versioned binary container for model files.

Layout (all integers little-endian):
  8-byte magic tag | u16 format version | u32 header length | header JSON
  | u32 array count | per array: u8 ndim, ndim x u64 dims, float64 data.

Both model families (feed-forward nets and boosted trees) share this
container so round-trips are bit-exact and failures are diagnosable.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import DataError

MAGIC_LEN = 8


def write_model_file(path: str | Path, magic: bytes, version: int,
                     header: dict, arrays: list[np.ndarray]) -> Path:
    if len(magic) != MAGIC_LEN:
        raise ValueError("magic tag must be exactly 8 bytes")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(magic)
        fh.write(struct.pack("<H", version))
        fh.write(struct.pack("<I", len(header_bytes)))
        fh.write(header_bytes)
        fh.write(struct.pack("<I", len(arrays)))
        for arr in arrays:
            data = np.ascontiguousarray(arr, dtype="<f8")
            fh.write(struct.pack("<B", data.ndim))
            for dim in data.shape:
                fh.write(struct.pack("<Q", dim))
            fh.write(data.tobytes())
    return path


def _read_exact(fh, n: int, path: Path) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise DataError(f"{path}: truncated model file")
    return data


def read_model_file(path: str | Path, magic: bytes,
                    version: int) -> tuple[dict, list[np.ndarray]]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"model file not found: {path}")
    with open(path, "rb") as fh:
        tag = _read_exact(fh, MAGIC_LEN, path)
        if tag != magic:
            raise DataError(f"{path}: not a {magic!r} model file (magic {tag!r})")
        (found_version,) = struct.unpack("<H", _read_exact(fh, 2, path))
        if found_version != version:
            raise DataError(
                f"{path}: format version {found_version} unsupported (expected {version})"
            )
        (header_len,) = struct.unpack("<I", _read_exact(fh, 4, path))
        try:
            header = json.loads(_read_exact(fh, header_len, path).decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise DataError(f"{path}: corrupt model header ({exc})") from None
        (count,) = struct.unpack("<I", _read_exact(fh, 4, path))
        arrays = []
        for _ in range(count):
            (ndim,) = struct.unpack("<B", _read_exact(fh, 1, path))
            shape = struct.unpack(
                "<" + "Q" * ndim, _read_exact(fh, 8 * ndim, path)
            )
            n_items = int(np.prod(shape)) if ndim else 1
            raw = _read_exact(fh, 8 * n_items, path)
            arrays.append(np.frombuffer(raw, dtype="<f8").reshape(shape).copy())
        if fh.read(1):
            raise DataError(f"{path}: trailing bytes after model payload")
    return header, arrays
