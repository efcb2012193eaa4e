"""Anchor-augmented prompt construction and coordinate text handling.

The prompt places the coordinates of the retrieved most-similar gallery
images (positive anchors) and most-dissimilar ones (negative anchors)
into a template, in embedding-rank order, and instructs the model to
answer with a single "lat, lon" line. Parsing goes the other way:
pulling the first coordinate pair out of whatever text a model returns.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

from .geodesy import GeoCoordinate
from .search import NeighborSet

PLACEHOLDERS = ("{POSITIVE_ANCHORS}", "{NEGATIVE_ANCHORS}", "{ANSWER_FORMAT}")

ANSWER_FORMAT = "Answer with exactly one line: <latitude>, <longitude> in decimal degrees."

CLARIFICATION = "Reply with only two numbers: latitude, longitude."


class PromptError(ValueError):
    """Malformed template (placeholder missing or repeated)."""


class CoordinateParseError(ValueError):
    """No coordinate pair could be extracted from the text."""

    def __init__(self, text: str):
        preview = text if len(text) <= 200 else text[:200] + "..."
        super().__init__(f"no coordinate pair found in: {preview!r}")
        self.text = text


def format_coordinate(c: GeoCoordinate) -> str:
    """Fixed-point "lat, lon" with exactly 6 fractional digits (~0.11 m)."""

    def fmt(value: float) -> str:
        s = f"{value:.6f}"
        return "0.000000" if s == "-0.000000" else s

    return f"{fmt(c.lat)}, {fmt(c.lon)}"


# Models emit unicode minus signs, en-dashes and degree marks; fold them
# into plain ASCII before matching. Every mapping is one char to one
# char, so match offsets carry over to the original text.
_NORMALIZE = str.maketrans({"−": "-", "–": "-", "°": " "})

_NUM = r"[-+]?\d+(?:\.\d+)?"
_LABEL = r"(?:lat(?:itude)?|lng|lon(?:gitude)?)\s*[:=]?\s*"
# two numbers separated by comma and/or whitespace, the second optionally
# carrying a label; a rank prefix like "3." never joins a pair because
# "." is not a separator
_PAIR_RE = re.compile(rf"({_NUM})[,\s]+(?:{_LABEL})?\(?\s*({_NUM})", re.IGNORECASE)


def parse_coordinate(text: str) -> GeoCoordinate:
    """Extract the first "lat, lon" pair from free-form model output.

    Accepts plain pairs, parenthesized pairs, and labeled forms like
    "Latitude: 48.8566, Longitude: 2.3522". Latitude is range-checked
    (out of range raises GeodesyError); longitude is wrapped into
    (-180, +180]. Raises CoordinateParseError when no pair is present.
    """
    match = _PAIR_RE.search(text.translate(_NORMALIZE))
    if match is None:
        raise CoordinateParseError(text)
    return GeoCoordinate(float(match.group(1)), float(match.group(2)))


def scan_coordinates(text: str) -> list[GeoCoordinate]:
    """All non-overlapping coordinate pairs in the text, in order.

    Pairs whose latitude is out of range are skipped rather than raised,
    making this suitable for sweeping arbitrary text.
    """
    normalized = text.translate(_NORMALIZE)
    out: list[GeoCoordinate] = []
    pos = 0
    while True:
        match = _PAIR_RE.search(normalized, pos)
        if match is None:
            return out
        pos = match.end()
        try:
            out.append(GeoCoordinate(float(match.group(1)), float(match.group(2))))
        except ValueError:
            continue


@dataclass(frozen=True)
class PromptTemplate:
    """Prompt scaffold with the three anchor/answer placeholders.

    Each of {POSITIVE_ANCHORS}, {NEGATIVE_ANCHORS} and {ANSWER_FORMAT}
    must appear exactly once.
    """

    text: str

    def __post_init__(self):
        for ph in PLACEHOLDERS:
            n = self.text.count(ph)
            if n != 1:
                raise PromptError(f"template must contain {ph} exactly once, found {n}")

    @classmethod
    def from_file(cls, path: str | Path) -> "PromptTemplate":
        return cls(Path(path).read_text(encoding="utf-8"))


def default_template() -> PromptTemplate:
    text = resources.files("georag").joinpath("templates/default.txt").read_text(encoding="utf-8")
    return PromptTemplate(text)


@dataclass(frozen=True)
class ImageRef:
    """Opaque handle to a query image payload for multimodal providers."""

    data: bytes
    media_type: str = "image/jpeg"


@dataclass(frozen=True)
class GeoPrompt:
    text: str
    image_ref: ImageRef | None
    pos_anchors: tuple[GeoCoordinate, ...]
    neg_anchors: tuple[GeoCoordinate, ...]


def _render_anchors(coords: Sequence[GeoCoordinate]) -> str:
    if not coords:
        return "none"
    return "\n".join(f"{rank}. {format_coordinate(c)}" for rank, c in enumerate(coords, start=1))


def build_prompt(
    neighbors: NeighborSet,
    template: PromptTemplate | None = None,
    image_ref: ImageRef | None = None,
) -> GeoPrompt:
    """Render the anchor-augmented prompt for one query.

    Anchors appear in embedding-rank order (most similar first, most
    dissimilar first); the output depends only on the inputs.
    """
    template = template or default_template()
    pos = tuple(hit.location for hit in neighbors.positives)
    neg = tuple(hit.location for hit in neighbors.negatives)
    text = (
        template.text
        .replace("{POSITIVE_ANCHORS}", _render_anchors(pos))
        .replace("{NEGATIVE_ANCHORS}", _render_anchors(neg))
        .replace("{ANSWER_FORMAT}", ANSWER_FORMAT)
    )
    return GeoPrompt(text=text, image_ref=image_ref, pos_anchors=pos, neg_anchors=neg)
