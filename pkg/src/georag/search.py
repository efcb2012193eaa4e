"""Exact maximum-inner-product search over a gallery.

The scan is a flat, exhaustive pass over every vector: a float32
matrix-vector product (memory-bandwidth bound, parallelizable across
record chunks), followed by an exact float64 re-scoring of the records
near the top-k boundary. The float32 pass only has to be right to within
its rounding error, so every record within a conservative slack of the
k-th best is re-scored; the final ranking therefore matches a full
float64 scan exactly, including tie handling.

Most-dissimilar search is defined as maximum-inner-product search on the
negated query with scores negated, which is also how it is implemented.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .gallery import Gallery
from .geodesy import GeoCoordinate

DEFAULT_K_POS = 16
DEFAULT_K_NEG = 16

_CHUNK_ROWS = 16384
# >= 20x the worst-case float32 dot-product rounding for dim <= 1024;
# grows with dim beyond that. Costs only a few extra exact re-scores.
_F32_EPS = float(np.finfo(np.float32).eps)


class SearchError(ValueError):
    """Invalid search input (bad k, bad query)."""


@dataclass(frozen=True)
class NeighborHit:
    id: int
    score: float
    location: GeoCoordinate


@dataclass(frozen=True)
class NeighborSet:
    """Ranked positive (most similar) and negative (most dissimilar) hits."""

    positives: tuple[NeighborHit, ...]
    negatives: tuple[NeighborHit, ...]
    k_pos: int
    k_neg: int


def _prepare_query(gallery: Gallery, query) -> tuple[np.ndarray, np.ndarray]:
    """Validate the query and return (float32 scan copy, float64 exact copy)."""
    q = np.asarray(query, dtype=np.float64).reshape(-1)
    if q.shape[0] != gallery.dim:
        raise SearchError(f"query dimension {q.shape[0]} != gallery dimension {gallery.dim}")
    if not np.all(np.isfinite(q)):
        raise SearchError("query vector has non-finite components")
    norm = float(np.linalg.norm(q))
    if norm < 1e-12:
        raise SearchError("query vector has zero norm")
    if abs(norm - 1.0) > 1e-3:
        q = q / norm
    return q.astype(np.float32), q


def _scan_scores(vectors: np.ndarray, q32: np.ndarray, workers: int) -> np.ndarray:
    """float32 inner products of every gallery row with the query.

    Chunk boundaries never affect a row's result, so any worker count
    produces identical output.
    """
    n = vectors.shape[0]
    scores = np.empty(n, dtype=np.float32)
    spans = [(a, min(a + _CHUNK_ROWS, n)) for a in range(0, n, _CHUNK_ROWS)]

    def run(span):
        a, b = span
        np.dot(vectors[a:b], q32, out=scores[a:b])

    if workers > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, spans))
    else:
        for span in spans:
            run(span)
    return scores


def top_k(gallery: Gallery, query, k: int, workers: int = 1) -> list[NeighborHit]:
    """The k records maximizing the inner product with the query.

    Exact and deterministic: results are ordered by non-increasing score,
    ties broken by ascending record id, and repeated or parallel calls
    return identical results. k is clamped to the gallery size.
    """
    if k <= 0:
        raise SearchError(f"k must be positive, got {k}")
    q32, q64 = _prepare_query(gallery, query)
    return _select(gallery, q32, q64, min(k, gallery.count), workers, negate=False)


def bottom_k(gallery: Gallery, query, k: int, workers: int = 1) -> list[NeighborHit]:
    """The k records minimizing the inner product: the most dissimilar.

    Defined as top_k on the negated query with scores negated, so results
    are ordered by non-decreasing score, ties by ascending id.
    """
    if k <= 0:
        raise SearchError(f"k must be positive, got {k}")
    q32, q64 = _prepare_query(gallery, query)
    return _select(gallery, -q32, -q64, min(k, gallery.count), workers, negate=True)


def _select(
    gallery: Gallery, q32: np.ndarray, q64: np.ndarray, k: int, workers: int, negate: bool
) -> list[NeighborHit]:
    scores32 = _scan_scores(gallery.vectors, q32, workers)
    n = scores32.shape[0]

    slack = max(1e-3, 8.0 * gallery.dim * _F32_EPS)
    kth = np.partition(scores32, n - k)[n - k]
    cand = np.flatnonzero(scores32 >= kth - slack)

    # einsum (not BLAS) so each row's float64 score depends only on that
    # row's bytes and the query: identical vectors score identically no
    # matter where they sit, which keeps exact ties exact
    exact = np.einsum("ij,j->i", gallery.vectors[cand].astype(np.float64), q64)
    order = np.lexsort((gallery.ids[cand], -exact))[:k]
    rows = cand[order]
    hits = []
    for row, score in zip(rows, exact[order]):
        s = -float(score) if negate else float(score)
        hits.append(
            NeighborHit(id=int(gallery.ids[row]), score=s + 0.0, location=gallery.location(row))
        )
    return hits


def search(
    gallery: Gallery,
    query,
    k_pos: int = DEFAULT_K_POS,
    k_neg: int = DEFAULT_K_NEG,
    workers: int = 1,
) -> NeighborSet:
    """Bundle top_k and bottom_k into one NeighborSet."""
    return NeighborSet(
        positives=tuple(top_k(gallery, query, k_pos, workers)),
        negatives=tuple(bottom_k(gallery, query, k_neg, workers)),
        k_pos=k_pos,
        k_neg=k_neg,
    )
