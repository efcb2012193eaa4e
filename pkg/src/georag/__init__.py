"""georag: retrieval-augmented image geolocalization.

Index geo-tagged image embeddings in a flat binary gallery, retrieve the
most similar and most dissimilar locations for a query embedding, build
coordinate-anchored prompts for a multimodal model, parse the generated
coordinates, and score predictions with geodesic accuracy-at-radius.
"""

from .geodesy import (
    AccuracyTable,
    DEFAULT_RADII_KM,
    EARTH_RADIUS_KM,
    GeoCoordinate,
    GeodesyError,
    RadiusThresholds,
    accuracy_at,
    accuracy_from_distances,
    distance_km,
    geographic_midpoint,
)
from .gallery import (
    BuildSummary,
    EmbeddingRecord,
    Gallery,
    GalleryBuildError,
    GalleryCorruptError,
    GalleryError,
    GalleryFormatError,
    build_gallery,
    load_query_vectors,
    open_gallery,
    read_ingest_text,
    validate_gallery,
    write_gallery_arrays,
    write_query_file,
)
from .search import (
    NeighborHit,
    NeighborSet,
    SearchError,
    bottom_k,
    search,
    top_k,
)
from .prompting import (
    CoordinateParseError,
    GeoPrompt,
    ImageRef,
    PromptError,
    PromptTemplate,
    build_prompt,
    default_template,
    format_coordinate,
    parse_coordinate,
    scan_coordinates,
)
from .providers import (
    Gateway,
    GeoPrediction,
    PredictionError,
    ProviderConfig,
    ProviderConfigError,
    ProviderError,
    TransportError,
    geolocate,
)
from .evaluation import (
    EvalDataset,
    EvalError,
    EvalQuery,
    EvalReport,
    QueryRecord,
    load_dataset,
    render_report,
    report_from_json,
    run_eval,
)

__version__ = "0.1.0"
