"""Writer for the georag version-1 binary formats.

Deliberately an independent implementation of the published layout (not
an import of the engine's code): producing files that the engine's own
validator accepts is the compatibility contract this component is held
to.

Layout, little-endian:

    magic "IMG2LOC1" | u32 version=1 | u32 dim | u64 count
    u64 CRC-64/ECMA over the data blocks in file order
    vector block  count * dim * f32   (unit-norm)
    coord block   count * (f64 lat, f64 lon)   [galleries only]
    id block      count * u64 strictly increasing   [galleries only]
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"IMG2LOC1"
VERSION = 1
_HEADER = struct.Struct("<8sIIQQ")

_CRC_POLY = 0x42F0E1EBA9EA3693
_MASK = 0xFFFFFFFFFFFFFFFF


def _make_table() -> list[int]:
    table = []
    for b in range(256):
        crc = b << 56
        for _ in range(8):
            crc = ((crc << 1) ^ _CRC_POLY) & _MASK if crc & (1 << 63) else (crc << 1) & _MASK
        table.append(crc)
    return table


_TABLE = _make_table()


def crc64_ecma(data: bytes, crc: int = 0) -> int:
    """CRC-64 with the ECMA-182 polynomial (init 0, no reflection)."""
    for byte in data:
        crc = ((crc << 8) & _MASK) ^ _TABLE[((crc >> 56) ^ byte) & 0xFF]
    return crc


def normalize_rows(vectors: np.ndarray) -> np.ndarray:
    vecs = np.asarray(vectors, dtype=np.float64)
    norms = np.linalg.norm(vecs, axis=1, keepdims=True)
    if np.any(norms < 1e-12):
        raise ValueError("zero-norm embedding cannot be normalized")
    return (vecs / norms).astype("<f4")


def wrap_longitude(lon: float) -> float:
    if -180.0 < lon <= 180.0:
        return lon + 0.0
    wrapped = ((lon + 180.0) % 360.0) - 180.0
    return 180.0 if wrapped == -180.0 else wrapped + 0.0


def write_gallery_file(path: str | Path, vectors, coords, ids) -> int:
    """Write a full gallery (vectors + coordinates + ids). Returns the
    checksum. Rows are sorted by id; ids must be unique."""
    vecs = normalize_rows(vectors)
    coord_arr = np.asarray(coords, dtype="<f8")
    id_arr = np.asarray(ids, dtype="<u8")
    count, dim = vecs.shape
    if coord_arr.shape != (count, 2) or id_arr.shape != (count,):
        raise ValueError("vectors, coords and ids must have matching lengths")
    if len(np.unique(id_arr)) != count:
        raise ValueError("record ids must be unique")
    for lat, lon in coord_arr:
        if not (-90.0 <= lat <= 90.0):
            raise ValueError(f"latitude {lat} outside [-90, 90]")
        if not (-180.0 < lon <= 180.0):
            raise ValueError(f"longitude {lon} outside (-180, 180]")

    order = np.argsort(id_arr, kind="stable")
    vec_bytes = np.ascontiguousarray(vecs[order]).tobytes()
    coord_bytes = np.ascontiguousarray(coord_arr[order]).tobytes()
    id_bytes = np.ascontiguousarray(id_arr[order]).tobytes()
    checksum = crc64_ecma(id_bytes, crc64_ecma(coord_bytes, crc64_ecma(vec_bytes)))
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, dim, count, checksum))
        fh.write(vec_bytes)
        fh.write(coord_bytes)
        fh.write(id_bytes)
    return checksum


def write_query_file(path: str | Path, vectors, labels=None) -> int:
    """Write a query-embedding file (header + vector block), optionally
    with a "<path>.ids" label sidecar. Returns the checksum."""
    vecs = normalize_rows(vectors)
    count, dim = vecs.shape
    vec_bytes = vecs.tobytes()
    checksum = crc64_ecma(vec_bytes)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, dim, count, checksum))
        fh.write(vec_bytes)
    if labels is not None:
        if len(labels) != count:
            raise ValueError(f"{len(labels)} labels for {count} queries")
        Path(str(path) + ".ids").write_text("".join(f"{label}\n" for label in labels))
    return checksum
