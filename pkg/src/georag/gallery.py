"""The on-disk gallery: embedding vectors paired with coordinates.

Binary layout (little-endian throughout):

    bytes 0-7    magic "IMG2LOC1"
    bytes 8-11   u32 version = 1
    bytes 12-15  u32 dim
    bytes 16-23  u64 count
    bytes 24-31  u64 CRC-64/ECMA of the data blocks, in file order
    vector block      count * dim float32
    coordinate block  count * (float64 lat, float64 lon)
    id block          count * u64, strictly increasing

Vectors are L2-normalized at write time so inner product equals cosine
similarity and scores stay within [-1, 1]. The columnar layout keeps
similarity scans inside the vector block; open_gallery memory-maps that
block read-only for zero-copy scanning.

Query-embedding files reuse the same header but carry only the vector
block (count = number of queries); an optional plain-text sidecar
"<file>.ids" labels queries, one id per line.
"""

from __future__ import annotations

import struct
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .crc64 import crc64
from .geodesy import GeoCoordinate

MAGIC = b"IMG2LOC1"
VERSION = 1
DEFAULT_DIM = 768
_HEADER = struct.Struct("<8sIIQQ")
HEADER_SIZE = _HEADER.size  # 32

NORM_TOLERANCE = 1e-3
_U64_MAX = 2**64 - 1


class GalleryError(Exception):
    """Base class for gallery file problems."""


class GalleryFormatError(GalleryError):
    """The file is not a recognizable gallery (bad magic or version)."""


class GalleryCorruptError(GalleryError):
    """The file claims to be a gallery but its structure is inconsistent."""


class GalleryBuildError(GalleryError):
    """Bad input while building a gallery."""


@dataclass
class EmbeddingRecord:
    """One embedding-location pair headed for a gallery."""

    id: int
    vector: np.ndarray
    location: GeoCoordinate
    source: str | None = None


@dataclass(frozen=True)
class BuildSummary:
    count: int
    dim: int
    checksum: int
    path: str


def normalize_vectors(vectors: np.ndarray) -> np.ndarray:
    """L2-normalize rows, computing norms in float64 and storing float32.

    Raises GalleryBuildError if any row has (near-)zero norm or is not
    finite; such a vector cannot carry a direction.
    """
    vecs = np.asarray(vectors, dtype=np.float64)
    single = vecs.ndim == 1
    if single:
        vecs = vecs[None, :]

    def where(row: int) -> str:
        return "vector" if single else f"vector at row {row}"

    if not np.all(np.isfinite(vecs)):
        bad = int(np.flatnonzero(~np.isfinite(vecs).all(axis=1))[0])
        raise GalleryBuildError(f"{where(bad)} has non-finite components")
    norms = np.linalg.norm(vecs, axis=1)
    if np.any(norms < 1e-12):
        bad = int(np.flatnonzero(norms < 1e-12)[0])
        raise GalleryBuildError(f"{where(bad)} has zero norm and cannot be normalized")
    return (vecs / norms[:, None]).astype(np.float32)


def build_gallery(
    records: Iterable[EmbeddingRecord], dim: int, output: str | Path
) -> BuildSummary:
    """Write a gallery file from a stream of records.

    Vectors are normalized, records are stored in ascending id order, and
    the checksum in the returned summary matches the file header. Raises
    GalleryBuildError on a dimension mismatch, duplicate id, or zero-norm
    vector, naming the offending id.
    """
    if dim < 1:
        raise GalleryBuildError(f"dimension must be positive, got {dim}")
    ids: list[int] = []
    seen: set[int] = set()
    rows: list[np.ndarray] = []
    coords: list[tuple[float, float]] = []
    for rec in records:
        rid = int(rec.id)
        if rid < 0 or rid > _U64_MAX:
            raise GalleryBuildError(f"record id {rec.id} outside u64 range")
        if rid in seen:
            raise GalleryBuildError(f"duplicate record id {rid}")
        vec = np.asarray(rec.vector, dtype=np.float64).reshape(-1)
        if vec.shape[0] != dim:
            raise GalleryBuildError(
                f"record {rid}: vector dimension {vec.shape[0]} != gallery dimension {dim}"
            )
        try:
            row = normalize_vectors(vec)[0]
        except GalleryBuildError as exc:
            raise GalleryBuildError(f"record {rid}: {exc}") from None
        seen.add(rid)
        ids.append(rid)
        rows.append(row)
        coords.append((rec.location.lat, rec.location.lon))
    if not ids:
        raise GalleryBuildError("record stream is empty; a gallery needs at least one record")

    id_arr = np.array(ids, dtype=np.uint64)
    order = np.argsort(id_arr, kind="stable")
    return write_gallery_arrays(
        output, np.stack(rows)[order], np.array(coords, dtype=np.float64)[order], id_arr[order]
    )


def write_gallery_arrays(
    output: str | Path, vectors: np.ndarray, coords: np.ndarray, ids: np.ndarray
) -> BuildSummary:
    """Bulk writer behind build_gallery, for callers that already hold
    normalized float32 vectors, float64 (lat, lon) rows and sorted u64 ids.

    Performs shape and id-order validation but no normalization; use
    build_gallery for record-level ingestion.
    """
    vectors = np.ascontiguousarray(vectors, dtype=np.float32)
    coords = np.ascontiguousarray(coords, dtype=np.float64)
    ids = np.ascontiguousarray(ids, dtype=np.uint64)
    if vectors.ndim != 2 or vectors.shape[0] < 1:
        raise GalleryBuildError(f"vectors must be a non-empty 2-D array, got shape {vectors.shape}")
    count, dim = vectors.shape
    if coords.shape != (count, 2):
        raise GalleryBuildError(f"coords shape {coords.shape} != ({count}, 2)")
    if ids.shape != (count,):
        raise GalleryBuildError(f"ids shape {ids.shape} != ({count},)")
    if count > 1 and not np.all(ids[1:] > ids[:-1]):
        raise GalleryBuildError("ids must be strictly increasing")

    vec_bytes = vectors.astype("<f4").tobytes()
    coord_bytes = coords.astype("<f8").tobytes()
    id_bytes = ids.astype("<u8").tobytes()
    checksum = crc64(id_bytes, crc64(coord_bytes, crc64(vec_bytes)))

    path = Path(output)
    header = _HEADER.pack(MAGIC, VERSION, dim, count, checksum)
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(vec_bytes)
            fh.write(coord_bytes)
            fh.write(id_bytes)
    except OSError as exc:
        raise GalleryError(f"cannot write gallery {path}: {exc}") from exc
    return BuildSummary(count=count, dim=dim, checksum=checksum, path=str(path))


def _read_header(path: Path) -> tuple[bytes, int, int, int, int]:
    try:
        with open(path, "rb") as fh:
            raw = fh.read(HEADER_SIZE)
    except OSError as exc:
        raise GalleryError(f"cannot read {path}: {exc}") from exc
    if len(raw) < HEADER_SIZE:
        raise GalleryFormatError(f"{path}: file shorter than the {HEADER_SIZE}-byte header")
    return _HEADER.unpack(raw)


def _block_sizes(dim: int, count: int) -> tuple[int, int, int]:
    return count * dim * 4, count * 16, count * 8


@dataclass
class Gallery:
    """A loaded, read-only gallery.

    vectors is a memory-mapped float32 (count, dim) view of the file;
    coords is float64 (count, 2) and ids u64 (count,), both in memory.
    """

    path: str
    dim: int
    count: int
    checksum: int
    vectors: np.ndarray
    coords: np.ndarray
    ids: np.ndarray

    def location(self, row: int) -> GeoCoordinate:
        lat, lon = self.coords[row]
        return GeoCoordinate(float(lat), float(lon))


def open_gallery(path: str | Path) -> Gallery:
    """Open a gallery read-only, memory-mapping the vector block.

    Only the header is validated here (magic, version, block sizes vs the
    file length); run validate_gallery for the full integrity checks
    including the checksum.
    """
    path = Path(path)
    magic, version, dim, count, checksum = _read_header(path)
    if magic != MAGIC:
        raise GalleryFormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise GalleryFormatError(f"{path}: unsupported version {version}, expected {VERSION}")
    if dim < 1 or count < 1:
        raise GalleryCorruptError(f"{path}: header declares dim={dim}, count={count}")
    vec_size, coord_size, id_size = _block_sizes(dim, count)
    expected = HEADER_SIZE + vec_size + coord_size + id_size
    actual = path.stat().st_size
    if actual != expected:
        raise GalleryCorruptError(
            f"{path}: file size {actual} inconsistent with header (expected {expected})"
        )

    if sys.byteorder == "little":
        vectors = np.memmap(path, dtype=np.float32, mode="r", offset=HEADER_SIZE, shape=(count, dim))
    else:
        # big-endian host: no zero-copy view, read and swap
        with open(path, "rb") as fh:
            fh.seek(HEADER_SIZE)
            vectors = np.frombuffer(fh.read(vec_size), dtype="<f4").reshape(count, dim).copy()
        vectors.setflags(write=False)
    with open(path, "rb") as fh:
        fh.seek(HEADER_SIZE + vec_size)
        coords = np.frombuffer(fh.read(coord_size), dtype="<f8").astype(np.float64).reshape(count, 2)
        ids = np.frombuffer(fh.read(id_size), dtype="<u8").astype(np.uint64)
    coords.setflags(write=False)
    ids.setflags(write=False)
    return Gallery(
        path=str(path), dim=dim, count=count, checksum=checksum,
        vectors=vectors, coords=coords, ids=ids,
    )


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool | None  # None means skipped (a prerequisite failed)
    detail: str


@dataclass
class ValidationReport:
    path: str
    checks: list[CheckResult]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed_checks(self) -> list[str]:
        return [c.name for c in self.checks if c.passed is False]


CHECK_NAMES = ("magic", "version", "block_sizes", "checksum", "norms", "id_uniqueness", "coordinate_range")


def validate_gallery(path: str | Path) -> ValidationReport:
    """Run every integrity check on a gallery file, reporting each.

    A failed check does not stop the rest; checks that cannot run because
    the block layout is broken are reported as skipped. Raises GalleryError
    only when the file cannot be read at all.
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise GalleryError(f"cannot read {path}: {exc}") from exc

    checks: list[CheckResult] = []

    def add(name: str, passed: bool | None, detail: str):
        checks.append(CheckResult(name, passed, detail))

    if len(data) < HEADER_SIZE:
        add("magic", data[:8] == MAGIC, f"file is {len(data)} bytes, shorter than the header")
        for name in CHECK_NAMES[1:]:
            add(name, None, "skipped: incomplete header")
        return ValidationReport(str(path), checks)

    magic, version, dim, count, stored_crc = _HEADER.unpack(data[:HEADER_SIZE])
    add("magic", magic == MAGIC, f"found {magic!r}" if magic != MAGIC else "ok")
    add("version", version == VERSION, f"found {version}" if version != VERSION else "ok")

    vec_size, coord_size, id_size = _block_sizes(dim, count)
    expected = HEADER_SIZE + vec_size + coord_size + id_size
    sizes_ok = dim >= 1 and count >= 1 and len(data) == expected
    add(
        "block_sizes",
        sizes_ok,
        "ok" if sizes_ok else f"dim={dim} count={count}: expected {expected} bytes, file has {len(data)}",
    )
    if not sizes_ok:
        for name in CHECK_NAMES[3:]:
            add(name, None, "skipped: block layout inconsistent")
        return ValidationReport(str(path), checks)

    vec_off = HEADER_SIZE
    coord_off = vec_off + vec_size
    id_off = coord_off + coord_size
    actual_crc = crc64(data[vec_off:])
    add(
        "checksum",
        actual_crc == stored_crc,
        "ok" if actual_crc == stored_crc else f"stored {stored_crc:#018x}, computed {actual_crc:#018x}",
    )

    vectors = np.frombuffer(data, dtype="<f4", count=count * dim, offset=vec_off).reshape(count, dim)
    norms = np.linalg.norm(vectors.astype(np.float64), axis=1)
    bad_norms = np.flatnonzero(np.abs(norms - 1.0) > NORM_TOLERANCE)
    add(
        "norms",
        bad_norms.size == 0,
        "ok" if bad_norms.size == 0
        else f"{bad_norms.size} vectors off unit norm (first at row {int(bad_norms[0])}, norm {norms[bad_norms[0]]:.6f})",
    )

    ids = np.frombuffer(data, dtype="<u8", count=count, offset=id_off)
    ids_ok = bool(np.all(ids[1:] > ids[:-1])) if count > 1 else True
    add("id_uniqueness", ids_ok, "ok" if ids_ok else "ids are not strictly increasing")

    coords = np.frombuffer(data, dtype="<f8", count=count * 2, offset=coord_off).reshape(count, 2)
    lat_ok = np.isfinite(coords[:, 0]) & (coords[:, 0] >= -90.0) & (coords[:, 0] <= 90.0)
    lon_ok = np.isfinite(coords[:, 1]) & (coords[:, 1] > -180.0) & (coords[:, 1] <= 180.0)
    bad_coords = np.flatnonzero(~(lat_ok & lon_ok))
    add(
        "coordinate_range",
        bad_coords.size == 0,
        "ok" if bad_coords.size == 0
        else f"{bad_coords.size} out-of-range coordinates (first at row {int(bad_coords[0])}: "
        f"{coords[bad_coords[0], 0]}, {coords[bad_coords[0], 1]})",
    )
    return ValidationReport(str(path), checks)


def write_query_file(path: str | Path, vectors: np.ndarray) -> BuildSummary:
    """Write a query-embedding file: the version-1 header plus the vector
    block only. Vectors are normalized exactly like gallery vectors; the
    checksum covers the vector block.
    """
    vecs = normalize_vectors(vectors)
    count, dim = vecs.shape
    vec_bytes = vecs.astype("<f4").tobytes()
    checksum = crc64(vec_bytes)
    path = Path(path)
    try:
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(MAGIC, VERSION, dim, count, checksum))
            fh.write(vec_bytes)
    except OSError as exc:
        raise GalleryError(f"cannot write query file {path}: {exc}") from exc
    return BuildSummary(count=count, dim=dim, checksum=checksum, path=str(path))


def load_query_vectors(path: str | Path) -> np.ndarray:
    """Load query embeddings from a query file or a full gallery file."""
    path = Path(path)
    magic, version, dim, count, _ = _read_header(path)
    if magic != MAGIC:
        raise GalleryFormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise GalleryFormatError(f"{path}: unsupported version {version}, expected {VERSION}")
    if dim < 1 or count < 1:
        raise GalleryCorruptError(f"{path}: header declares dim={dim}, count={count}")
    vec_size, coord_size, id_size = _block_sizes(dim, count)
    size = path.stat().st_size
    if size not in (HEADER_SIZE + vec_size, HEADER_SIZE + vec_size + coord_size + id_size):
        raise GalleryCorruptError(f"{path}: file size {size} matches neither a query file nor a gallery")
    with open(path, "rb") as fh:
        fh.seek(HEADER_SIZE)
        vecs = np.frombuffer(fh.read(vec_size), dtype="<f4").astype(np.float32).reshape(count, dim)
    vecs.setflags(write=False)
    return vecs


def load_query_ids(path: str | Path, count: int) -> list[str]:
    """Query labels from the "<path>.ids" sidecar, or q0..qN-1 defaults."""
    sidecar = Path(str(path) + ".ids")
    if sidecar.exists():
        labels = [line.strip() for line in sidecar.read_text().splitlines() if line.strip()]
        if len(labels) != count:
            raise GalleryError(
                f"{sidecar}: {len(labels)} labels for {count} queries"
            )
        return labels
    return [f"q{i}" for i in range(count)]


def read_ingest_text(path: str | Path, dim: int) -> Iterator[EmbeddingRecord]:
    """Parse the text ingestion format: one `id,lat,lon,v0,...,v{dim-1}`
    line per record. Blank lines and lines starting with # are skipped.
    """
    path = Path(path)
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fields = [f.strip() for f in line.split(",")]
            if len(fields) != 3 + dim:
                raise GalleryBuildError(
                    f"{path}:{lineno}: expected {3 + dim} comma-separated fields, got {len(fields)}"
                )
            try:
                rid = int(fields[0])
                lat = float(fields[1])
                lon = float(fields[2])
                vec = np.array([float(x) for x in fields[3:]], dtype=np.float64)
            except ValueError as exc:
                raise GalleryBuildError(f"{path}:{lineno}: {exc}") from None
            yield EmbeddingRecord(id=rid, vector=vec, location=GeoCoordinate(lat, lon))
