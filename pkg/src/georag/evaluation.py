"""End-to-end evaluation: retrieval + generation per query, scored with
accuracy-at-radius, rendered as Table-style reports.

A query that fails unrecoverably is never dropped: it is recorded with
an infinite distance and counts as a miss at every radius, keeping the
denominator honest.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .gallery import Gallery, load_query_vectors
from .geodesy import (
    AccuracyTable,
    GeoCoordinate,
    RadiusThresholds,
    RADIUS_LABELS,
    accuracy_from_distances,
    distance_km,
)
from .prompting import PromptTemplate, build_prompt, default_template
from .providers import Gateway, ProviderConfig, ProviderError
from .search import search


class EvalError(ValueError):
    """Bad evaluation input (manifest, dimensions, counts)."""


@dataclass
class EvalQuery:
    qid: str
    truth: GeoCoordinate
    embedding: np.ndarray
    image_path: str | None = None


@dataclass
class EvalDataset:
    name: str
    queries: list[EvalQuery]

    def __post_init__(self):
        if not self.queries:
            raise EvalError("evaluation dataset is empty")

    @property
    def dim(self) -> int:
        return int(self.queries[0].embedding.shape[0])

    def __len__(self) -> int:
        return len(self.queries)


def load_dataset(
    manifest: str | Path, embeddings: str | Path, name: str | None = None
) -> EvalDataset:
    """Pair a `query_id,lat,lon[,image_path]` manifest with a
    query-embedding file by position.
    """
    manifest = Path(manifest)
    vectors = load_query_vectors(embeddings)
    rows: list[tuple[str, GeoCoordinate, str | None]] = []
    with open(manifest) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fields = [f.strip() for f in line.split(",")]
            if len(fields) not in (3, 4):
                raise EvalError(f"{manifest}:{lineno}: expected 3 or 4 fields, got {len(fields)}")
            try:
                truth = GeoCoordinate(float(fields[1]), float(fields[2]))
            except ValueError as exc:
                raise EvalError(f"{manifest}:{lineno}: {exc}") from None
            rows.append((fields[0], truth, fields[3] if len(fields) == 4 else None))
    if len(rows) != vectors.shape[0]:
        raise EvalError(
            f"manifest has {len(rows)} rows but embedding file has {vectors.shape[0]} queries"
        )
    queries = [
        EvalQuery(qid=qid, truth=truth, embedding=vectors[i], image_path=img)
        for i, (qid, truth, img) in enumerate(rows)
    ]
    return EvalDataset(name=name or manifest.stem, queries=queries)


@dataclass
class QueryRecord:
    qid: str
    predicted: GeoCoordinate | None
    truth: GeoCoordinate
    distance_km: float  # math.inf for failed queries
    fallback_used: bool
    latency_ms: float
    error: str | None = None


@dataclass
class EvalReport:
    dataset: str
    method: str
    table: AccuracyTable
    records: list[QueryRecord]
    config: dict = field(default_factory=dict)


def run_eval(
    dataset: EvalDataset,
    gallery: Gallery,
    provider_cfg: ProviderConfig,
    k_pos: int = 16,
    k_neg: int = 16,
    thresholds: RadiusThresholds | None = None,
    template: PromptTemplate | None = None,
    workers: int = 1,
    method: str | None = None,
) -> EvalReport:
    """Retrieve, prompt and geolocate every query, then aggregate.

    Queries run concurrently up to `workers` (the gateway still enforces
    its own in-flight cap); records are emitted in dataset order and the
    aggregate is an order-independent count, so the worker count never
    changes the result.
    """
    if dataset.dim != gallery.dim:
        raise EvalError(
            f"dataset dimension {dataset.dim} != gallery dimension {gallery.dim}"
        )
    thresholds = thresholds or RadiusThresholds()
    template = template or default_template()
    gateway = Gateway(provider_cfg)

    def evaluate(query: EvalQuery) -> QueryRecord:
        neighbors = search(gallery, query.embedding, k_pos=k_pos, k_neg=k_neg)
        prompt = build_prompt(neighbors, template)
        try:
            pred = gateway.geolocate(prompt)
        except ProviderError as exc:
            return QueryRecord(
                qid=query.qid,
                predicted=None,
                truth=query.truth,
                distance_km=math.inf,
                fallback_used=False,
                latency_ms=0.0,
                error=f"{exc.__class__.__name__}: {exc}",
            )
        return QueryRecord(
            qid=query.qid,
            predicted=pred.location,
            truth=query.truth,
            distance_km=distance_km(pred.location, query.truth),
            fallback_used=pred.fallback_used,
            latency_ms=pred.latency_ms,
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(evaluate, dataset.queries))
    else:
        records = [evaluate(q) for q in dataset.queries]

    table = accuracy_from_distances(thresholds, [r.distance_km for r in records])
    config = {
        "k_pos": k_pos,
        "k_neg": k_neg,
        "provider": gateway.provider_id,
        "endpoint": provider_cfg.endpoint,
        "template_sha256": hashlib.sha256(template.text.encode("utf-8")).hexdigest(),
        "thresholds_km": list(thresholds.radii_km),
        "gallery": gallery.path,
    }
    return EvalReport(
        dataset=dataset.name,
        method=method or gateway.provider_id,
        table=table,
        records=records,
        config=config,
    )


def failed_queries(report: EvalReport) -> int:
    return sum(1 for r in report.records if r.error is not None)


# --- rendering ---------------------------------------------------------


def _column_label(radius: float) -> str:
    name = RADIUS_LABELS.get(radius)
    return f"{name} {radius:g} km" if name else f"{radius:g} km"


def render_markdown(report: EvalReport) -> str:
    headers = ["Dataset", "Method"] + [_column_label(r) for r in report.table.radii_km]
    values = [report.dataset, report.method] + [f"{p:.2f}" for p in report.table.percentages()]
    lines = [
        "| " + " | ".join(headers) + " |",
        "|" + "|".join(" --- " for _ in headers) + "|",
        "| " + " | ".join(values) + " |",
    ]
    return "\n".join(lines) + "\n"


def _coord_json(c: GeoCoordinate | None):
    return None if c is None else {"lat": c.lat, "lon": c.lon}


def render_json(report: EvalReport) -> str:
    doc = {
        "dataset": report.dataset,
        "method": report.method,
        "thresholds_km": list(report.table.radii_km),
        "fractions": list(report.table.fractions),
        "count": report.table.count,
        "config": report.config,
        "records": [
            {
                "qid": r.qid,
                "predicted": _coord_json(r.predicted),
                "truth": _coord_json(r.truth),
                "distance_km": None if math.isinf(r.distance_km) else r.distance_km,
                "fallback_used": r.fallback_used,
                "latency_ms": r.latency_ms,
                "error": r.error,
            }
            for r in report.records
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def report_from_json(text: str) -> EvalReport:
    doc = json.loads(text)
    records = [
        QueryRecord(
            qid=r["qid"],
            predicted=None if r["predicted"] is None else GeoCoordinate(**r["predicted"]),
            truth=GeoCoordinate(**r["truth"]),
            distance_km=math.inf if r["distance_km"] is None else r["distance_km"],
            fallback_used=r["fallback_used"],
            latency_ms=r["latency_ms"],
            error=r.get("error"),
        )
        for r in doc.get("records", [])
    ]
    table = AccuracyTable(
        radii_km=tuple(doc["thresholds_km"]),
        fractions=tuple(doc["fractions"]),
        count=doc["count"],
    )
    return EvalReport(
        dataset=doc["dataset"],
        method=doc["method"],
        table=table,
        records=records,
        config=doc.get("config", {}),
    )


def render_csv(report: EvalReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["qid", "predicted_lat", "predicted_lon", "truth_lat", "truth_lon",
         "distance_km", "fallback_used", "latency_ms", "error"]
    )
    for r in report.records:
        writer.writerow(
            [
                r.qid,
                "" if r.predicted is None else repr(r.predicted.lat),
                "" if r.predicted is None else repr(r.predicted.lon),
                repr(r.truth.lat),
                repr(r.truth.lon),
                "inf" if math.isinf(r.distance_km) else repr(r.distance_km),
                r.fallback_used,
                repr(r.latency_ms),
                r.error or "",
            ]
        )
    return buf.getvalue()


def render_report(report: EvalReport, fmt: str) -> str:
    """Render a report as markdown, json or csv."""
    if fmt in ("md", "markdown"):
        return render_markdown(report)
    if fmt == "json":
        return render_json(report)
    if fmt == "csv":
        return render_csv(report)
    raise EvalError(f"unknown report format {fmt!r}; expected md, json or csv")
