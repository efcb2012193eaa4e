/** Typed client for the geolocalization service HTTP API. */

export interface Hit {
  id: number;
  lat: number;
  lon: number;
  score: number;
}

export interface GeolocateResponse {
  prediction: { lat: number; lon: number };
  fallback_used: boolean;
  provider: string;
  positives: Hit[];
  negatives: Hit[];
  prompt_text: string;
  raw_response: string;
  latency_ms: number;
}

export interface IndexStats {
  count: number;
  dim: number;
  checksum: string;
  gallery_path: string;
}

export interface GeolocateRequest {
  embedding?: number[];
  image_b64?: string;
  k_pos?: number;
  k_neg?: number;
  provider?: string;
}

/** Error body the service guarantees: machine-readable code + message. */
export class ApiError extends Error {
  constructor(
    public readonly code: string,
    message: string,
    public readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let resp: Response;
    try {
      resp = await this.fetchFn(`${this.baseUrl}${path}`, init);
    } catch (err) {
      throw new ApiError("network", `service unreachable: ${String(err)}`, 0);
    }
    if (!resp.ok) {
      let code = `http_${resp.status}`;
      let message = resp.statusText;
      try {
        const body = (await resp.json()) as { code?: string; message?: string };
        if (body.code) code = body.code;
        if (body.message) message = body.message;
      } catch {
        // non-JSON error body; keep the status fallback
      }
      throw new ApiError(code, message, resp.status);
    }
    return (await resp.json()) as T;
  }

  geolocate(req: GeolocateRequest): Promise<GeolocateResponse> {
    return this.request<GeolocateResponse>("/v1/geolocate", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(req),
    });
  }

  indexStats(): Promise<IndexStats> {
    return this.request<IndexStats>("/v1/index/stats");
  }
}
