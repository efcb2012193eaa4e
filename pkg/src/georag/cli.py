"""Command-line surface: build/validate galleries, query them, geolocate
single embeddings or images, run evaluations, and serve the HTTP API.

Exit codes: 0 success, 1 validation or input error, 2 transport or
provider error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import requests

from .evaluation import (
    EvalError,
    failed_queries,
    load_dataset,
    render_markdown,
    render_report,
    report_from_json,
    run_eval,
)
from .gallery import (
    GalleryError,
    MAGIC,
    build_gallery,
    EmbeddingRecord,
    load_query_ids,
    load_query_vectors,
    open_gallery,
    read_ingest_text,
    validate_gallery,
)
from .geodesy import GeodesyError, RadiusThresholds
from .prompting import ImageRef, PromptError, PromptTemplate, build_prompt, default_template
from .providers import (
    Gateway,
    PredictionError,
    ProviderConfig,
    ProviderConfigError,
    TransportError,
)
from .search import SearchError, search
from .service import LOCAL_PROVIDERS, ServiceError, load_service_config, serve

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_PROVIDER = 2

_INPUT_ERRORS = (
    GalleryError,
    GeodesyError,
    EvalError,
    SearchError,
    PromptError,
    ServiceError,
    ProviderConfigError,
    OSError,
)


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage by default; this tool reserves 2 for
    # provider failures and reports input problems as 1
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="georag", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_index = sub.add_parser("index", help="gallery file operations")
    index_sub = p_index.add_subparsers(dest="index_command", required=True)

    p_build = index_sub.add_parser("build", help="build a gallery from a text or gallery file")
    p_build.add_argument("--input", required=True, help="ingestion text file (id,lat,lon,v0,...) or existing gallery")
    p_build.add_argument("--dim", type=int, required=True)
    p_build.add_argument("--output", required=True)

    p_validate = index_sub.add_parser("validate", help="run all integrity checks on a gallery")
    p_validate.add_argument("gallery")

    p_query = sub.add_parser("query", help="neighbor search for query embeddings")
    p_query.add_argument("--gallery", required=True)
    p_query.add_argument("--embedding-file", required=True)
    p_query.add_argument("--k-pos", type=int, default=16)
    p_query.add_argument("--k-neg", type=int, default=16)
    p_query.add_argument("--format", choices=["csv", "json"], default="csv")
    p_query.add_argument("--output", help="write here instead of stdout")

    p_geo = sub.add_parser("geolocate", help="geolocate one embedding or image")
    p_geo.add_argument("--gallery", required=True)
    src = p_geo.add_mutually_exclusive_group(required=True)
    src.add_argument("--embedding-file", help="query-embedding file (first query is used)")
    src.add_argument("--image", help="image file; requires --extractor-url")
    p_geo.add_argument("--provider", required=True)
    p_geo.add_argument("--k-pos", type=int, default=16)
    p_geo.add_argument("--k-neg", type=int, default=16)
    p_geo.add_argument("--template")
    p_geo.add_argument("--provider-config", help="JSON file with named provider configurations")
    p_geo.add_argument("--endpoint", help="remote-chat endpoint URL")
    p_geo.add_argument("--model", default="", help="remote-chat model name")
    p_geo.add_argument("--credential-env", default="", help="env var holding the API key")
    p_geo.add_argument("--timeout", type=float, default=60.0, help="remote request timeout seconds")
    p_geo.add_argument("--max-retries", type=int, default=2)
    p_geo.add_argument("--extractor-url", help="embedding extractor sidecar base URL")

    p_eval = sub.add_parser("eval", help="run the evaluation protocol or re-render a report")
    p_eval.add_argument("--gallery")
    p_eval.add_argument("--manifest")
    p_eval.add_argument("--queries")
    p_eval.add_argument("--provider")
    p_eval.add_argument("--k-pos", type=int, default=16)
    p_eval.add_argument("--k-neg", type=int, default=16)
    p_eval.add_argument("--thresholds", default="1,25,200,750,2500", help="comma-separated radii in km")
    p_eval.add_argument("--template")
    p_eval.add_argument("--provider-config")
    p_eval.add_argument("--endpoint")
    p_eval.add_argument("--model", default="")
    p_eval.add_argument("--credential-env", default="")
    p_eval.add_argument("--timeout", type=float, default=60.0)
    p_eval.add_argument("--max-retries", type=int, default=2)
    p_eval.add_argument("--workers", type=int, default=1)
    p_eval.add_argument("--report", help="write the rendered report here")
    p_eval.add_argument("--format", choices=["md", "json", "csv"], default="md")
    p_eval.add_argument("--from-report", help="re-render an existing JSON report instead of running")

    p_serve = sub.add_parser("serve", help="run the HTTP service until terminated")
    p_serve.add_argument("--config", required=True)

    return parser


def _resolve_provider(args) -> ProviderConfig:
    name = args.provider
    if args.provider_config:
        doc = json.loads(Path(args.provider_config).read_text())
        specs = doc.get("providers", doc)
        if name in specs:
            return ProviderConfig(**specs[name])
    if name in LOCAL_PROVIDERS:
        return ProviderConfig(kind=name)
    if name == "remote-chat":
        if not args.endpoint:
            raise ProviderConfigError("remote-chat needs --endpoint (or a --provider-config entry)")
        return ProviderConfig(
            kind="remote-chat",
            endpoint=args.endpoint,
            model=args.model,
            credential_env=args.credential_env,
            timeout_s=args.timeout,
            max_retries=args.max_retries,
        )
    raise ProviderConfigError(
        f"unknown provider {name!r}: use one of {LOCAL_PROVIDERS}, 'remote-chat', "
        "or a name from --provider-config"
    )


def _load_template(path: str | None) -> PromptTemplate:
    return PromptTemplate.from_file(path) if path else default_template()


def _embedding_via_extractor(url: str, image_bytes: bytes) -> np.ndarray:
    try:
        resp = requests.post(
            url.rstrip("/") + "/v1/embed",
            data=image_bytes,
            headers={"Content-Type": "application/octet-stream"},
            timeout=120,
        )
    except requests.RequestException as exc:
        raise TransportError(f"extractor unreachable: {exc.__class__.__name__}: {exc}") from exc
    if resp.status_code != 200:
        raise TransportError(f"extractor returned HTTP {resp.status_code}", status=resp.status_code)
    return np.asarray(resp.json()["embedding"], dtype=np.float64)


def _cmd_index_build(args) -> int:
    with open(args.input, "rb") as fh:
        head = fh.read(8)
    if head == MAGIC:
        source = open_gallery(args.input)
        records = (
            EmbeddingRecord(id=int(source.ids[i]), vector=np.array(source.vectors[i]), location=source.location(i))
            for i in range(source.count)
        )
    else:
        records = read_ingest_text(args.input, args.dim)
    summary = build_gallery(records, args.dim, args.output)
    print(json.dumps({
        "count": summary.count,
        "dim": summary.dim,
        "checksum": f"{summary.checksum:#018x}",
        "path": summary.path,
    }))
    return EXIT_OK


def _cmd_index_validate(args) -> int:
    report = validate_gallery(args.gallery)
    for check in report.checks:
        status = "PASS" if check.passed else ("SKIP" if check.passed is None else "FAIL")
        print(f"{status:4s} {check.name}: {check.detail}")
    print(f"overall: {'PASS' if report.passed else 'FAIL'}")
    return EXIT_OK if report.passed else EXIT_INPUT


def _cmd_query(args) -> int:
    gallery = open_gallery(args.gallery)
    queries = load_query_vectors(args.embedding_file)
    labels = load_query_ids(args.embedding_file, queries.shape[0])
    rows = []
    for i in range(queries.shape[0]):
        neighbors = search(gallery, queries[i], k_pos=args.k_pos, k_neg=args.k_neg)
        for kind, hits in (("pos", neighbors.positives), ("neg", neighbors.negatives)):
            for rank, hit in enumerate(hits, start=1):
                rows.append(
                    {
                        "query": labels[i],
                        "kind": kind,
                        "rank": rank,
                        "id": hit.id,
                        "score": hit.score,
                        "lat": hit.location.lat,
                        "lon": hit.location.lon,
                    }
                )
    if args.format == "json":
        text = json.dumps(rows, indent=2) + "\n"
    else:
        lines = ["query,kind,rank,id,score,lat,lon"]
        lines += [
            f"{r['query']},{r['kind']},{r['rank']},{r['id']},{r['score']!r},{r['lat']!r},{r['lon']!r}"
            for r in rows
        ]
        text = "\n".join(lines) + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_geolocate(args) -> int:
    gallery = open_gallery(args.gallery)
    image_ref = None
    if args.image:
        if not args.extractor_url:
            raise ProviderConfigError("--image requires --extractor-url pointing at an embedding extractor")
        image_bytes = Path(args.image).read_bytes()
        embedding = _embedding_via_extractor(args.extractor_url, image_bytes)
        image_ref = ImageRef(data=image_bytes)
    else:
        embedding = load_query_vectors(args.embedding_file)[0]
    cfg = _resolve_provider(args)
    neighbors = search(gallery, embedding, k_pos=args.k_pos, k_neg=args.k_neg)
    prompt = build_prompt(neighbors, _load_template(args.template), image_ref=image_ref)
    prediction = Gateway(cfg).geolocate(prompt)
    print(
        json.dumps(
            {
                "prediction": {"lat": prediction.location.lat, "lon": prediction.location.lon},
                "provider": prediction.provider,
                "fallback_used": prediction.fallback_used,
                "latency_ms": prediction.latency_ms,
                "raw_response": prediction.raw_response,
                "positives": [
                    {"id": h.id, "lat": h.location.lat, "lon": h.location.lon, "score": h.score}
                    for h in neighbors.positives
                ],
                "negatives": [
                    {"id": h.id, "lat": h.location.lat, "lon": h.location.lon, "score": h.score}
                    for h in neighbors.negatives
                ],
            },
            indent=2,
        )
    )
    return EXIT_OK


def _cmd_eval(args) -> int:
    if args.from_report:
        report = report_from_json(Path(args.from_report).read_text())
        rendered = render_report(report, args.format)
        if args.report:
            Path(args.report).write_text(rendered)
        sys.stdout.write(render_markdown(report))
        return EXIT_OK

    for flag in ("gallery", "manifest", "queries", "provider"):
        if not getattr(args, flag):
            raise EvalError(f"--{flag} is required when not using --from-report")
    gallery = open_gallery(args.gallery)
    dataset = load_dataset(args.manifest, args.queries)
    thresholds = RadiusThresholds(tuple(float(x) for x in args.thresholds.split(",")))
    report = run_eval(
        dataset,
        gallery,
        _resolve_provider(args),
        k_pos=args.k_pos,
        k_neg=args.k_neg,
        thresholds=thresholds,
        template=_load_template(args.template),
        workers=args.workers,
    )
    if args.report:
        Path(args.report).write_text(render_report(report, args.format))
    sys.stdout.write(render_markdown(report))
    failures = failed_queries(report)
    if failures:
        print(f"{failures} queries failed unrecoverably", file=sys.stderr)
        return EXIT_PROVIDER
    return EXIT_OK


def _cmd_serve(args) -> int:
    serve(load_service_config(args.config))
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "query": _cmd_query,
        "geolocate": _cmd_geolocate,
        "eval": _cmd_eval,
        "serve": _cmd_serve,
    }
    try:
        if args.command == "index":
            handler = _cmd_index_build if args.index_command == "build" else _cmd_index_validate
        else:
            handler = handlers[args.command]
        return handler(args)
    except (TransportError, PredictionError) as exc:
        print(f"georag: provider error: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    except _INPUT_ERRORS as exc:
        print(f"georag: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, json.JSONDecodeError) as exc:
        print(f"georag: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
