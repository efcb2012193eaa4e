"""Tour of the geographic primitives: distances, midpoints, accuracy tables."""

from georag import (
    GeoCoordinate,
    RadiusThresholds,
    accuracy_at,
    distance_km,
    geographic_midpoint,
)

# Coordinates validate latitude and wrap longitude into (-180, 180]
paris = GeoCoordinate(48.8566, 2.3522)
sydney = GeoCoordinate(-33.865143, 151.209900)
wrapped = GeoCoordinate(0, 300.0)  # lon 300 wraps to -60
print(f"lon 300 wraps to {wrapped.lon}")

# Great-circle distance (haversine, IUGG mean radius)
print(f"Paris -> Sydney: {distance_km(paris, sydney):,.1f} km")
print(f"antipodal limit: {distance_km(GeoCoordinate(0, 0), GeoCoordinate(0, 180)):,.1f} km")

# The midpoint is a renormalized 3-D vector mean, so the dateline is safe
fiji_side = GeoCoordinate(0, 179.5)
samoa_side = GeoCoordinate(0, -179.5)
print(f"dateline midpoint: {geographic_midpoint([fiji_side, samoa_side])}")

# Accuracy at radius: the share of predictions within r km of the truth,
# reported at street/city/region/country/continent scales
truth = GeoCoordinate(48.8566, 2.3522)
predictions = [
    GeoCoordinate(48.8570, 2.3530),   # ~50 m off
    GeoCoordinate(48.95, 2.45),       # ~13 km off
    GeoCoordinate(50.0, 3.0),         # ~135 km off
    GeoCoordinate(41.9, 12.5),        # Rome, ~1100 km off
]
table = accuracy_at(RadiusThresholds(), [(p, truth) for p in predictions])
for radius, pct in zip(table.radii_km, table.percentages()):
    print(f"  within {radius:>6.0f} km: {pct:6.2f}%")
