/** Leaflet adapter: the only module that touches the map library. */

import L from "leaflet";

import { LatLon } from "./geo";
import { Marker, MarkerKind } from "./session";

const STYLES: Record<MarkerKind, L.CircleMarkerOptions> = {
  prediction: { radius: 10, color: "#c0392b", fillColor: "#e74c3c", fillOpacity: 0.9, weight: 2 },
  positive: { radius: 7, color: "#1e8449", fillColor: "#2ecc71", fillOpacity: 0.8, weight: 1 },
  negative: { radius: 6, color: "#6c3483", fillColor: "#9b59b6", fillOpacity: 0.6, weight: 1 },
};

export class MapPanel {
  private map: L.Map;
  private layer: L.LayerGroup;

  constructor(element: HTMLElement) {
    this.map = L.map(element).setView([20, 0], 2);
    L.tileLayer("https://tile.openstreetmap.org/{z}/{x}/{y}.png", {
      maxZoom: 19,
      attribution: "&copy; OpenStreetMap contributors",
    }).addTo(this.map);
    this.layer = L.layerGroup().addTo(this.map);
  }

  render(markers: Marker[], fitPoints: LatLon[]): void {
    this.layer.clearLayers();
    for (const m of markers) {
      L.circleMarker([m.lat, m.lon], STYLES[m.kind]).bindTooltip(m.label).addTo(this.layer);
    }
    if (fitPoints.length > 0) {
      const bounds = L.latLngBounds(fitPoints.map((p) => [p.lat, p.lon] as [number, number]));
      this.map.fitBounds(bounds.pad(0.25), { maxZoom: 13 });
    }
  }
}
