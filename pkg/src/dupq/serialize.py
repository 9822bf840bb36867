"""Versioned binary container for trained models.

Layout: magic ``DQM1``, a little-endian u32 header length, a UTF-8 JSON
header (model kind, format version, shapes, anything else the loader
needs), then raw little-endian float64/int32 array payloads in the order
listed in the header.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import DataError

MAGIC = b"DQM1"
FORMAT_VERSION = 1

_DTYPES = {"f8": "<f8", "i4": "<i4", "i8": "<i8"}


def write_model(path: str | Path, header: dict, arrays: list[np.ndarray]) -> None:
    header = dict(header)
    header["format_version"] = FORMAT_VERSION
    header["arrays"] = []
    blobs = []
    for arr in arrays:
        arr = np.ascontiguousarray(arr)
        if arr.dtype == np.float64:
            code = "f8"
        elif arr.dtype == np.int32:
            code = "i4"
        elif arr.dtype == np.int64:
            code = "i8"
        else:
            raise ValueError(f"unsupported array dtype {arr.dtype}")
        header["arrays"].append({"shape": list(arr.shape), "dtype": code})
        blobs.append(arr.astype(_DTYPES[code]).tobytes())
    head = json.dumps(header, ensure_ascii=False).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(head)))
        fh.write(head)
        for blob in blobs:
            fh.write(blob)


def read_model(path: str | Path) -> tuple[dict, list[np.ndarray]]:
    path = Path(path)
    raw = path.read_bytes()
    if raw[:4] != MAGIC:
        raise DataError(f"{path}: not a dupq model file")
    (head_len,) = struct.unpack("<I", raw[4:8])
    try:
        header = json.loads(raw[8 : 8 + head_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: corrupt model header: {exc}") from exc
    if header.get("format_version") != FORMAT_VERSION:
        raise DataError(f"{path}: unsupported format version {header.get('format_version')}")
    arrays = []
    offset = 8 + head_len
    for spec in header.get("arrays", []):
        dtype = np.dtype(_DTYPES[spec["dtype"]])
        count = int(np.prod(spec["shape"])) if spec["shape"] else 1
        nbytes = count * dtype.itemsize
        if offset + nbytes > len(raw):
            raise DataError(f"{path}: truncated model payload")
        arr = np.frombuffer(raw, dtype=dtype, count=count, offset=offset).reshape(spec["shape"])
        arrays.append(arr.copy())
        offset += nbytes
    return header, arrays
