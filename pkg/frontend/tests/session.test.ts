import { describe, expect, it } from "vitest";

import { ApiClient, GeolocateResponse } from "../src/api";
import { ConsoleSession } from "../src/session";

function fakeResponse(overrides: Partial<GeolocateResponse> = {}): GeolocateResponse {
  return {
    prediction: { lat: 0, lon: 15 },
    fallback_used: false,
    provider: "mock-midpoint",
    positives: [
      { id: 0, lat: 0, lon: 10, score: 0.9 },
      { id: 1, lat: 0, lon: 20, score: 0.8 },
    ],
    negatives: [
      { id: 7, lat: -60, lon: -120, score: -0.7 },
      { id: 8, lat: 70, lon: 60, score: -0.6 },
      { id: 9, lat: 10, lon: 170, score: -0.5 },
    ],
    prompt_text: "PROMPT",
    raw_response: "midpoint of 2 positive anchors",
    latency_ms: 1.25,
    ...overrides,
  };
}

function clientReturning(
  handler: (body: Record<string, unknown>) => { status: number; body: unknown },
): ApiClient {
  const fetchFn = (async (_url: RequestInfo | URL, init?: RequestInit) => {
    const parsed = JSON.parse((init?.body as string) ?? "{}") as Record<string, unknown>;
    const { status, body } = handler(parsed);
    return new Response(JSON.stringify(body), {
      status,
      headers: { "Content-Type": "application/json" },
    });
  }) as typeof fetch;
  return new ApiClient("http://service.test", fetchFn);
}

const okClient = (response = fakeResponse()) => clientReturning(() => ({ status: 200, body: response }));

describe("ConsoleSession.submit", () => {
  it("appends to history and exposes markers for every anchor", async () => {
    const session = new ConsoleSession(okClient());
    const run = await session.submit(
      { kPos: 2, kNeg: 3, provider: "mock-midpoint" },
      { embedding: [1, 0, 0] },
    );
    expect(run).not.toBeNull();
    expect(session.history).toHaveLength(1);

    const markers = session.markers();
    expect(markers.filter((m) => m.kind === "prediction")).toHaveLength(1);
    expect(markers.filter((m) => m.kind === "positive")).toHaveLength(2);
    expect(markers.filter((m) => m.kind === "negative")).toHaveLength(3);
    const prediction = markers.find((m) => m.kind === "prediction")!;
    expect(prediction.lat).toBe(0);
    expect(prediction.lon).toBe(15);
  });

  it("exposes the exact prompt text and raw response", async () => {
    const session = new ConsoleSession(okClient());
    await session.submit({ kPos: 2, kNeg: 3, provider: "mock-midpoint" }, { embedding: [1] });
    expect(session.promptText).toBe("PROMPT");
    expect(session.rawResponse).toBe("midpoint of 2 positive anchors");
  });

  it("sends the chosen parameters in the request", async () => {
    let seen: Record<string, unknown> = {};
    const session = new ConsoleSession(
      clientReturning((body) => {
        seen = body;
        return { status: 200, body: fakeResponse() };
      }),
    );
    await session.submit({ kPos: 5, kNeg: 7, provider: "nearest-neighbor" }, { embedding: [1, 2] });
    expect(seen.k_pos).toBe(5);
    expect(seen.k_neg).toBe(7);
    expect(seen.provider).toBe("nearest-neighbor");
    expect(seen.embedding).toEqual([1, 2]);
  });

  it("resubmitting appends, never rewrites", async () => {
    const session = new ConsoleSession(okClient());
    await session.submit({ kPos: 2, kNeg: 3, provider: "mock-midpoint" }, { embedding: [1] });
    await session.submit({ kPos: 4, kNeg: 3, provider: "mock-midpoint" }, { embedding: [1] });
    expect(session.history).toHaveLength(2);
    expect(session.history[0].params.kPos).toBe(2);
    expect(session.history[1].params.kPos).toBe(4);
    expect(session.current).toBe(session.history[1]);
  });

  it("refuses to submit while a query is pending", async () => {
    let release: () => void = () => {};
    const gate = new Promise<void>((resolve) => (release = resolve));
    const fetchFn = (async () => {
      await gate;
      return new Response(JSON.stringify(fakeResponse()), { status: 200 });
    }) as typeof fetch;
    const session = new ConsoleSession(new ApiClient("http://t", fetchFn));

    const first = session.submit({ kPos: 1, kNeg: 1, provider: "p" }, { embedding: [1] });
    expect(session.pending).toBe(true);
    const second = await session.submit({ kPos: 1, kNeg: 1, provider: "p" }, { embedding: [1] });
    expect(second).toBeNull();
    release();
    await first;
    expect(session.pending).toBe(false);
    expect(session.history).toHaveLength(1);
  });

  it("requires some input", async () => {
    const session = new ConsoleSession(okClient());
    const run = await session.submit({ kPos: 1, kNeg: 1, provider: "p" }, {});
    expect(run).toBeNull();
    expect(session.banner?.code).toBe("no_input");
  });

  it("surfaces service errors as dismissible banners with the code", async () => {
    const session = new ConsoleSession(
      clientReturning(() => ({
        status: 422,
        body: { code: "payload_choice", message: "provide exactly one of ..." },
      })),
    );
    const run = await session.submit({ kPos: 1, kNeg: 1, provider: "p" }, { embedding: [1] });
    expect(run).toBeNull();
    expect(session.history).toHaveLength(0);
    expect(session.banner?.code).toBe("payload_choice");
    session.dismissBanner();
    expect(session.banner).toBeNull();
  });
});

describe("negatives layer", () => {
  it("toggling hides exactly the negative markers", async () => {
    const session = new ConsoleSession(okClient());
    await session.submit({ kPos: 2, kNeg: 3, provider: "mock-midpoint" }, { embedding: [1] });
    const before = session.markers();
    session.toggleNegatives();
    const after = session.markers();
    expect(before.length - after.length).toBe(3);
    expect(after.some((m) => m.kind === "negative")).toBe(false);
    session.toggleNegatives();
    expect(session.markers()).toHaveLength(before.length);
  });
});

describe("map fitting", () => {
  it("fits prediction plus positives only", async () => {
    const session = new ConsoleSession(okClient());
    await session.submit({ kPos: 2, kNeg: 3, provider: "mock-midpoint" }, { embedding: [1] });
    const pts = session.fitPoints();
    expect(pts).toHaveLength(3); // 1 prediction + 2 positives
    expect(pts[0]).toEqual({ lat: 0, lon: 15 });
  });
});

describe("compare_runs", () => {
  async function twoRuns(secondPrediction: { lat: number; lon: number }) {
    let call = 0;
    const session = new ConsoleSession(
      clientReturning(() => ({
        status: 200,
        body: fakeResponse(call++ === 0 ? {} : { prediction: secondPrediction }),
      })),
    );
    await session.submit({ kPos: 2, kNeg: 3, provider: "p" }, { embedding: [1] });
    await session.submit({ kPos: 4, kNeg: 3, provider: "p" }, { embedding: [1] });
    return session;
  }

  it("is disabled until two runs are selected", async () => {
    const session = await twoRuns({ lat: 0, lon: 15 });
    expect(session.canCompare).toBe(false);
    session.selectForCompare(0);
    expect(session.canCompare).toBe(false);
    expect(session.compare()).toBeNull();
    session.selectForCompare(1);
    expect(session.canCompare).toBe(true);
  });

  it("identical predictions compare at 0.00 km", async () => {
    const session = await twoRuns({ lat: 0, lon: 15 });
    session.selectForCompare(0);
    session.selectForCompare(1);
    expect(session.compare()!.distanceBetweenPredictions).toBe("0.00 km");
  });

  it("antipodal predictions compare at 20015.11 km", async () => {
    const session = await twoRuns({ lat: 0, lon: -165 });
    session.selectForCompare(0);
    session.selectForCompare(1);
    expect(session.compare()!.distanceBetweenPredictions).toBe("20015.11 km");
  });

  it("keeps at most two selections and supports deselect", async () => {
    const session = await twoRuns({ lat: 1, lon: 1 });
    await session.submit({ kPos: 5, kNeg: 3, provider: "p" }, { embedding: [1] });
    session.selectForCompare(0);
    session.selectForCompare(1);
    session.selectForCompare(2); // oldest (0) drops out
    expect(session.compareSelection).toEqual([1, 2]);
    session.selectForCompare(1); // deselect
    expect(session.compareSelection).toEqual([2]);
    expect(session.canCompare).toBe(false);
  });

  it("compare view carries both parameter sets", async () => {
    const session = await twoRuns({ lat: 5, lon: 5 });
    session.selectForCompare(0);
    session.selectForCompare(1);
    const cmp = session.compare()!;
    expect(cmp.a.params.kPos).toBe(2);
    expect(cmp.b.params.kPos).toBe(4);
  });
});
