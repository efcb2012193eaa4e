"""Image-to-embedding extraction for georag galleries and live queries."""

from .encoder import DEFAULT_MODEL, ClipEncoder
from .extract import ExtractionError, ExtractSummary, ManifestRow, extract, read_manifest
from .format import crc64_ecma, write_gallery_file, write_query_file
from .sidecar import create_app, serve

__version__ = "0.1.0"
