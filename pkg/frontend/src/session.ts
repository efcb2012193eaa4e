/** The console's view-model: everything the UI renders is derived here,
 * with no DOM or map library involved, so behavior is testable headless.
 *
 * One query is in flight at a time; every completed query appends to the
 * session history, and any two history entries can be compared.
 */

import { ApiClient, ApiError, GeolocateResponse } from "./api";
import { distanceKm, formatDistanceKm, LatLon } from "./geo";

export interface QueryParams {
  kPos: number;
  kNeg: number;
  provider: string;
}

export interface QueryInput {
  imageB64?: string;
  imageName?: string;
  embedding?: number[];
}

export interface RunRecord {
  index: number;
  params: QueryParams;
  input: QueryInput;
  response: GeolocateResponse;
}

export type MarkerKind = "prediction" | "positive" | "negative";

export interface Marker {
  kind: MarkerKind;
  lat: number;
  lon: number;
  label: string;
}

export interface Banner {
  code: string;
  message: string;
}

export interface CompareView {
  a: RunRecord;
  b: RunRecord;
  distanceBetweenPredictions: string;
}

export class ConsoleSession {
  readonly history: RunRecord[] = [];
  pending = false;
  banner: Banner | null = null;
  negativesVisible = true;
  current: RunRecord | null = null;
  compareSelection: number[] = [];

  constructor(private readonly api: ApiClient) {}

  /** Submit one query; resolves to the appended history entry. */
  async submit(params: QueryParams, input: QueryInput): Promise<RunRecord | null> {
    if (this.pending) return null; // controls are disabled while in flight
    if (!input.imageB64 && !input.embedding) {
      this.banner = { code: "no_input", message: "choose an image (or a fixture embedding) first" };
      return null;
    }
    this.pending = true;
    this.banner = null;
    try {
      const response = await this.api.geolocate({
        image_b64: input.imageB64,
        embedding: input.embedding,
        k_pos: params.kPos,
        k_neg: params.kNeg,
        provider: params.provider,
      });
      const record: RunRecord = {
        index: this.history.length,
        params: { ...params },
        input,
        response,
      };
      this.history.push(record); // append-only
      this.current = record;
      return record;
    } catch (err) {
      if (err instanceof ApiError) {
        this.banner = { code: err.code, message: err.message };
        return null;
      }
      throw err;
    } finally {
      this.pending = false;
    }
  }

  dismissBanner(): void {
    this.banner = null;
  }

  toggleNegatives(): void {
    this.negativesVisible = !this.negativesVisible;
  }

  /** Markers for the map: the prediction, every positive anchor, and the
   * negative anchors when their layer is on. */
  markers(): Marker[] {
    if (!this.current) return [];
    const r = this.current.response;
    const out: Marker[] = [
      {
        kind: "prediction",
        lat: r.prediction.lat,
        lon: r.prediction.lon,
        label: `prediction (${r.provider}${r.fallback_used ? ", fallback" : ""})`,
      },
    ];
    r.positives.forEach((h, i) =>
      out.push({ kind: "positive", lat: h.lat, lon: h.lon, label: `#${i + 1} similar, id ${h.id}, score ${h.score.toFixed(4)}` }),
    );
    if (this.negativesVisible) {
      r.negatives.forEach((h, i) =>
        out.push({ kind: "negative", lat: h.lat, lon: h.lon, label: `#${i + 1} dissimilar, id ${h.id}, score ${h.score.toFixed(4)}` }),
      );
    }
    return out;
  }

  /** Fit the prediction plus the positive anchors (negatives can be far
   * off on purpose and would zoom the map out to the whole world). */
  fitPoints(): LatLon[] {
    if (!this.current) return [];
    const r = this.current.response;
    return [r.prediction, ...r.positives.map((h) => ({ lat: h.lat, lon: h.lon }))];
  }

  get promptText(): string {
    return this.current?.response.prompt_text ?? "";
  }

  get rawResponse(): string {
    return this.current?.response.raw_response ?? "";
  }

  /** Toggle a history entry in the compare selection (two at most; the
   * oldest pick drops out). */
  selectForCompare(index: number): void {
    if (index < 0 || index >= this.history.length) return;
    const at = this.compareSelection.indexOf(index);
    if (at >= 0) {
      this.compareSelection.splice(at, 1);
      return;
    }
    this.compareSelection.push(index);
    if (this.compareSelection.length > 2) this.compareSelection.shift();
  }

  get canCompare(): boolean {
    return this.compareSelection.length === 2;
  }

  compare(): CompareView | null {
    if (!this.canCompare) return null;
    const [i, j] = this.compareSelection;
    const a = this.history[i];
    const b = this.history[j];
    const d = distanceKm(a.response.prediction, b.response.prediction);
    return { a, b, distanceBetweenPredictions: formatDistanceKm(d) };
  }
}
