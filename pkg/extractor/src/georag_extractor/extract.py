"""Batch extraction: manifest of images -> gallery or query-embedding file.

Gallery manifests carry `id,image_path,lat,lon` rows; query manifests
carry `id,image_path`. Unreadable images are recorded as failures and
left out of the output, never silently skipped.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .encoder import ClipEncoder
from .format import wrap_longitude, write_gallery_file, write_query_file


class ExtractionError(ValueError):
    pass


@dataclass
class ManifestRow:
    id: int
    image_path: str
    lat: float | None = None
    lon: float | None = None


@dataclass
class ExtractSummary:
    count: int
    dim: int
    failures: list[tuple[int, str]] = field(default_factory=list)
    path: str = ""


def read_manifest(path: str | Path) -> list[ManifestRow]:
    """Parse an extraction manifest; every row must have the same shape
    (all geo-tagged or all query-style) and ids must be unique."""
    rows: list[ManifestRow] = []
    seen: set[int] = set()
    shapes: set[int] = set()
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fields = [f.strip() for f in line.split(",")]
            if len(fields) not in (2, 4):
                raise ExtractionError(f"{path}:{lineno}: expected 2 or 4 fields, got {len(fields)}")
            shapes.add(len(fields))
            try:
                rid = int(fields[0])
            except ValueError:
                raise ExtractionError(f"{path}:{lineno}: id {fields[0]!r} is not an integer") from None
            if rid in seen:
                raise ExtractionError(f"{path}:{lineno}: duplicate id {rid}")
            seen.add(rid)
            if len(fields) == 4:
                try:
                    lat, lon = float(fields[2]), wrap_longitude(float(fields[3]))
                except ValueError:
                    raise ExtractionError(f"{path}:{lineno}: bad coordinates") from None
                if not -90.0 <= lat <= 90.0:
                    raise ExtractionError(f"{path}:{lineno}: latitude {lat} outside [-90, 90]")
                rows.append(ManifestRow(rid, fields[1], lat, lon))
            else:
                rows.append(ManifestRow(rid, fields[1]))
    if not rows:
        raise ExtractionError(f"{path}: manifest is empty")
    if len(shapes) > 1:
        raise ExtractionError(f"{path}: mixed gallery (4-field) and query (2-field) rows")
    return rows


def extract(
    manifest: str | Path,
    encoder: ClipEncoder,
    output: str | Path,
    batch_size: int = 16,
) -> ExtractSummary:
    """Encode every readable image in the manifest and write the binary
    output (gallery when rows carry coordinates, query file otherwise).
    """
    rows = read_manifest(manifest)
    geo_tagged = rows[0].lat is not None

    good_rows: list[ManifestRow] = []
    images: list[Image.Image] = []
    failures: list[tuple[int, str]] = []
    for row in rows:
        try:
            with Image.open(row.image_path) as img:
                images.append(img.convert("RGB"))
            good_rows.append(row)
        except (OSError, UnidentifiedImageError) as exc:
            failures.append((row.id, f"{exc.__class__.__name__}: {exc}"))
    if not good_rows:
        raise ExtractionError("no readable images in the manifest")

    chunks = [
        encoder.encode(images[i : i + batch_size]) for i in range(0, len(images), batch_size)
    ]
    vectors = np.concatenate(chunks, axis=0)

    if geo_tagged:
        coords = [(row.lat, row.lon) for row in good_rows]
        ids = [row.id for row in good_rows]
        write_gallery_file(output, vectors, coords, ids)
    else:
        write_query_file(output, vectors, labels=[str(row.id) for row in good_rows])
    return ExtractSummary(
        count=len(good_rows), dim=encoder.dim, failures=failures, path=str(output)
    )
