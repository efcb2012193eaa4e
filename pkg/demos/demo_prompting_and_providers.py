"""From retrieved neighbors to an anchor-augmented prompt to a prediction.

Runs entirely offline using the deterministic local providers; swap in a
remote-chat ProviderConfig to use a real multimodal model.
"""

import tempfile
from pathlib import Path

import numpy as np

from georag import (
    EmbeddingRecord,
    GeoCoordinate,
    ProviderConfig,
    build_gallery,
    build_prompt,
    geolocate,
    open_gallery,
    parse_coordinate,
    search,
)

workdir = Path(tempfile.mkdtemp())
rng = np.random.default_rng(1)

# Tiny gallery around two real places
places = [
    (35.6595, 139.7005, "shibuya"),
    (35.6586, 139.7454, "tokyo tower"),
    (35.7101, 139.8107, "skytree"),
    (48.8584, 2.2945, "eiffel"),
    (40.6892, -74.0445, "liberty"),
]
base = rng.standard_normal((len(places), 32))
base[0:3] += 4 * rng.standard_normal(32)  # Tokyo trio share structure
records = [
    EmbeddingRecord(id=i, vector=base[i], location=GeoCoordinate(lat, lon), source=tag)
    for i, (lat, lon, tag) in enumerate(places)
]
path = workdir / "places.gallery"
build_gallery(records, 32, path)
gallery = open_gallery(path)

query = base[0] / np.linalg.norm(base[0])  # "a photo like the Shibuya one"
neighbors = search(gallery, query, k_pos=3, k_neg=2)

# The prompt embeds anchor coordinates in rank order; the query image
# itself would ride along as an ImageRef for multimodal providers
prompt = build_prompt(neighbors)
print("=== prompt ===")
print(prompt.text)

# Deterministic local providers close the loop without any network:
# mock-midpoint averages the positive anchors, nearest-neighbor copies
# the top-1 location (the classic retrieval-only baseline)
for kind in ("mock-midpoint", "nearest-neighbor"):
    prediction = geolocate(prompt, ProviderConfig(kind=kind))
    print(f"{kind:17s} -> ({prediction.location.lat:.4f}, {prediction.location.lon:.4f})")

# Whatever a model replies, parse_coordinate digs the coordinates out
for reply in ("Latitude: 35.6812, Longitude: 139.7671", "(35.68, 139.76)", "35.68 139.76"):
    print(f"parse {reply!r:45s} -> {parse_coordinate(reply)}")
