"""Build a gallery file, validate it, and run exact similarity search."""

import tempfile
from pathlib import Path

import numpy as np

from georag import (
    EmbeddingRecord,
    GeoCoordinate,
    build_gallery,
    open_gallery,
    search,
    validate_gallery,
)

workdir = Path(tempfile.mkdtemp())
rng = np.random.default_rng(7)

# A desk-scale gallery: 2,000 random unit embeddings tagged with locations.
# Real galleries come from the embedding extractor over geo-tagged photos.
dim = 64
n = 2000
vectors = rng.standard_normal((n, dim))
records = [
    EmbeddingRecord(
        id=i,
        vector=vectors[i],  # build_gallery L2-normalizes for us
        location=GeoCoordinate(float(rng.uniform(-60, 60)), float(rng.uniform(-179, 180))),
    )
    for i in range(n)
]

gallery_path = workdir / "demo.gallery"
summary = build_gallery(records, dim, gallery_path)
print(f"built {summary.count} x {summary.dim} gallery, checksum {summary.checksum:#018x}")

# validate_gallery re-runs every integrity check on the bytes
report = validate_gallery(gallery_path)
for check in report.checks:
    print(f"  {check.name:17s} {'ok' if check.passed else check.detail}")

# The vector block is memory-mapped read-only: scans touch the file pages
gallery = open_gallery(gallery_path)

# Exact flat search: the most similar (positive) and most dissimilar
# (negative) records for a query embedding, with inner-product scores
query = vectors[42] / np.linalg.norm(vectors[42])
neighbors = search(gallery, query, k_pos=5, k_neg=3)

print("\npositives (most similar first):")
for hit in neighbors.positives:
    print(f"  id {hit.id:5d}  score {hit.score:+.4f}  at ({hit.location.lat:.3f}, {hit.location.lon:.3f})")
print("negatives (most dissimilar first):")
for hit in neighbors.negatives:
    print(f"  id {hit.id:5d}  score {hit.score:+.4f}  at ({hit.location.lat:.3f}, {hit.location.lon:.3f})")
