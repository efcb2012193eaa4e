"""The full evaluation protocol on a synthetic self-retrieval benchmark,
plus rendering of a published-style results row.
"""

import tempfile
from pathlib import Path

import numpy as np

from georag import (
    GeoCoordinate,
    ProviderConfig,
    load_dataset,
    render_report,
    run_eval,
    write_query_file,
)
from georag.evaluation import EvalReport
from georag.gallery import EmbeddingRecord, build_gallery, open_gallery
from georag.geodesy import AccuracyTable

workdir = Path(tempfile.mkdtemp())
rng = np.random.default_rng(5)

# Gallery and queries where every query embedding exactly matches one
# gallery record whose stored coordinate is the ground truth: the
# retrieval-only baseline should score 100% everywhere
dim, n = 48, 60
vectors = rng.standard_normal((n, dim))
coords = [(float(rng.uniform(-60, 60)), float(rng.uniform(-170, 170))) for _ in range(n)]
records = [
    EmbeddingRecord(id=i, vector=vectors[i], location=GeoCoordinate(*coords[i]))
    for i in range(n)
]
gallery_path = workdir / "bench.gallery"
build_gallery(records, dim, gallery_path)
gallery = open_gallery(gallery_path)

queries_path = workdir / "bench.queries"
write_query_file(queries_path, vectors)
manifest_path = workdir / "bench.manifest"
manifest_path.write_text("".join(f"q{i},{lat!r},{lon!r}\n" for i, (lat, lon) in enumerate(coords)))

dataset = load_dataset(manifest_path, queries_path, name="self-retrieval-60")
report = run_eval(dataset, gallery, ProviderConfig(kind="nearest-neighbor"), k_pos=1, k_neg=1)
print(render_report(report, "md"))

# The markdown renderer reproduces the published table layout; feeding it
# a published row shows the exact formatting
published = EvalReport(
    dataset="Im2GPS3k",
    method="Img2Loc(GPT4V)",
    table=AccuracyTable(
        radii_km=(1.0, 25.0, 200.0, 750.0, 2500.0),
        fractions=(0.1710, 0.4514, 0.5787, 0.7291, 0.8468),
        count=0,
    ),
    records=[],
)
print(render_report(published, "md"))
