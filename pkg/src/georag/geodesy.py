"""Geographic primitives: coordinates, great-circle distance, midpoints,
and accuracy-at-radius aggregation.

Distances use the spherical haversine formula with the IUGG mean Earth
radius. The coarse radii this project cares about (1 km and up) make
ellipsoidal precision unnecessary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

EARTH_RADIUS_KM = 6371.0088  # IUGG mean radius

DEFAULT_RADII_KM = (1.0, 25.0, 200.0, 750.0, 2500.0)

# Human-readable scale names for the default radii, used in reports.
RADIUS_LABELS = {1.0: "Street", 25.0: "City", 200.0: "Region", 750.0: "Country", 2500.0: "Continent"}


class GeodesyError(ValueError):
    """Invalid geographic input (bad latitude, empty point set, ...)."""


def wrap_longitude(lon: float) -> float:
    """Normalize a longitude in degrees into (-180, +180].

    Values already in range are returned unchanged so stored coordinates
    stay bit-exact; only out-of-range values go through modular arithmetic.
    """
    if -180.0 < lon <= 180.0:
        return lon + 0.0  # collapse -0.0 to +0.0
    wrapped = math.fmod(lon + 180.0, 360.0)
    if wrapped < 0:
        wrapped += 360.0
    wrapped -= 180.0
    if wrapped == -180.0:
        wrapped = 180.0
    return wrapped + 0.0


@dataclass(frozen=True)
class GeoCoordinate:
    """A latitude/longitude pair in decimal degrees.

    Latitude is validated to [-90, +90]; an out-of-range latitude is an
    upstream bug and construction fails. Longitude is wrapped modulo 360
    into (-180, +180] so all downstream math sees one canonical form.
    """

    lat: float
    lon: float

    def __post_init__(self):
        lat = float(self.lat)
        lon = float(self.lon)
        if not (math.isfinite(lat) and math.isfinite(lon)):
            raise GeodesyError(f"coordinate must be finite, got ({self.lat}, {self.lon})")
        if lat < -90.0 or lat > 90.0:
            raise GeodesyError(f"latitude {lat} outside [-90, +90]")
        object.__setattr__(self, "lat", lat)
        object.__setattr__(self, "lon", wrap_longitude(lon))

    def as_tuple(self) -> tuple[float, float]:
        return (self.lat, self.lon)


@dataclass(frozen=True)
class RadiusThresholds:
    """Ordered list of accuracy radii in km; strictly increasing, all positive."""

    radii_km: tuple[float, ...] = DEFAULT_RADII_KM

    def __post_init__(self):
        radii = tuple(float(r) for r in self.radii_km)
        if not radii:
            raise GeodesyError("at least one radius required")
        if any(r <= 0 or not math.isfinite(r) for r in radii):
            raise GeodesyError(f"radii must be positive and finite: {radii}")
        if any(b <= a for a, b in zip(radii, radii[1:])):
            raise GeodesyError(f"radii must be strictly increasing: {radii}")
        object.__setattr__(self, "radii_km", radii)

    def __iter__(self):
        return iter(self.radii_km)

    def __len__(self):
        return len(self.radii_km)


@dataclass(frozen=True)
class AccuracyTable:
    """Fraction of queries within each radius, plus the query count.

    fractions[i] is |{queries with distance <= radii_km[i]}| / count, so the
    sequence is non-decreasing by construction.
    """

    radii_km: tuple[float, ...]
    fractions: tuple[float, ...]
    count: int

    def __post_init__(self):
        if len(self.radii_km) != len(self.fractions):
            raise GeodesyError("radii and fractions length mismatch")
        if self.count < 0:
            raise GeodesyError("query count must be non-negative")
        for f in self.fractions:
            if not 0.0 <= f <= 1.0:
                raise GeodesyError(f"fraction {f} outside [0, 1]")
        for a, b in zip(self.fractions, self.fractions[1:]):
            if b < a:
                raise GeodesyError(f"fractions must be non-decreasing: {self.fractions}")

    def percentages(self) -> tuple[float, ...]:
        return tuple(100.0 * f for f in self.fractions)


def distance_km(a: GeoCoordinate, b: GeoCoordinate) -> float:
    """Haversine great-circle distance in km between two coordinates.

    Symmetric and exactly zero for identical (normalized) points. The
    arithmetic is arranged so swapping the arguments performs the same
    float operations, making symmetry exact rather than approximate.
    """
    lat1 = math.radians(a.lat)
    lat2 = math.radians(b.lat)
    dlat = math.radians(b.lat - a.lat)
    dlon = math.radians(b.lon - a.lon)
    sin_dlat = math.sin(dlat * 0.5)
    sin_dlon = math.sin(dlon * 0.5)
    h = sin_dlat * sin_dlat + math.cos(lat1) * math.cos(lat2) * sin_dlon * sin_dlon
    if h > 1.0:  # rounding can push slightly past 1 for near-antipodal pairs
        h = 1.0
    return 2.0 * EARTH_RADIUS_KM * math.asin(math.sqrt(h))


def geographic_midpoint(coords: Sequence[GeoCoordinate]) -> GeoCoordinate:
    """Dateline- and pole-safe centroid of a non-empty list of coordinates.

    Each coordinate becomes a 3D unit vector; the mean vector is
    renormalized and converted back. Perfectly antipodal configurations
    leave a near-zero mean vector and are rejected as degenerate.
    """
    if not coords:
        raise GeodesyError("midpoint of an empty coordinate list is undefined")
    xs, ys, zs = [], [], []
    for c in coords:
        lat = math.radians(c.lat)
        lon = math.radians(c.lon)
        xs.append(math.cos(lat) * math.cos(lon))
        ys.append(math.cos(lat) * math.sin(lon))
        zs.append(math.sin(lat))
    # fsum is exactly rounded, so the mean is independent of list order
    n = len(coords)
    x = math.fsum(xs) / n
    y = math.fsum(ys) / n
    z = math.fsum(zs) / n
    norm = math.sqrt(x * x + y * y + z * z)
    if norm < 1e-9:
        raise GeodesyError("degenerate configuration: mean vector is (nearly) zero")
    lat = math.degrees(math.atan2(z, math.hypot(x, y)))
    lon = math.degrees(math.atan2(y, x))
    return GeoCoordinate(lat, lon)


def accuracy_at(
    thresholds: RadiusThresholds,
    pairs: Iterable[tuple[GeoCoordinate, GeoCoordinate]],
) -> AccuracyTable:
    """Accuracy-at-radius over (predicted, truth) pairs.

    A query is a hit at radius r when its geodesic error is <= r
    (inclusive, so boundary queries count). Raises on an empty pair list:
    a ratio over zero queries is undefined.
    """
    distances = [distance_km(pred, truth) for pred, truth in pairs]
    return accuracy_from_distances(thresholds, distances)


def accuracy_from_distances(
    thresholds: RadiusThresholds, distances_km: Sequence[float]
) -> AccuracyTable:
    """accuracy_at when the per-query distances are already known.

    Failed queries may be represented as math.inf: they miss every radius
    but still count in the denominator.
    """
    n = len(distances_km)
    if n == 0:
        raise GeodesyError("accuracy over zero queries is undefined")
    fractions = tuple(
        sum(1 for d in distances_km if d <= r) / n for r in thresholds
    )
    return AccuracyTable(radii_km=tuple(thresholds), fractions=fractions, count=n)
