/** Wires the DOM controls to the session view-model and the map. */

import "leaflet/dist/leaflet.css";
import "./style.css";

import { ApiClient } from "./api";
import { formatLatLon } from "./geo";
import { MapPanel } from "./map";
import { ConsoleSession, QueryInput } from "./session";

const SERVICE_URL = import.meta.env.VITE_SERVICE_URL ?? "http://127.0.0.1:8008";

const api = new ApiClient(SERVICE_URL);
const session = new ConsoleSession(api);
const map = new MapPanel(document.getElementById("map")!);

const el = <T extends HTMLElement>(id: string) => document.getElementById(id) as T;
const fileInput = el<HTMLInputElement>("image-input");
const providerInput = el<HTMLInputElement>("provider");
const kPosInput = el<HTMLInputElement>("k-pos");
const kNegInput = el<HTMLInputElement>("k-neg");
const submitButton = el<HTMLButtonElement>("submit");
const negativesToggle = el<HTMLInputElement>("show-negatives");
const bannerBox = el<HTMLDivElement>("banner");
const promptBox = el<HTMLPreElement>("prompt-text");
const rawBox = el<HTMLPreElement>("raw-response");
const resultBox = el<HTMLDivElement>("result-summary");
const historyList = el<HTMLUListElement>("history");
const compareBox = el<HTMLDivElement>("compare");
const statsBox = el<HTMLSpanElement>("stats");

let currentInput: QueryInput = {};

fileInput.addEventListener("change", () => {
  const file = fileInput.files?.[0];
  if (!file) return;
  const reader = new FileReader();
  reader.onload = () => {
    const dataUrl = reader.result as string;
    currentInput = { imageB64: dataUrl.split(",", 2)[1], imageName: file.name };
  };
  reader.readAsDataURL(file);
});

function renderBanner() {
  if (session.banner) {
    bannerBox.hidden = false;
    bannerBox.textContent = `${session.banner.code}: ${session.banner.message}`;
  } else {
    bannerBox.hidden = true;
  }
}

bannerBox.addEventListener("click", () => {
  session.dismissBanner();
  renderBanner();
});

function renderAll() {
  renderBanner();
  submitButton.disabled = session.pending;
  map.render(session.markers(), session.fitPoints());
  promptBox.textContent = session.promptText;
  rawBox.textContent = session.rawResponse;

  const r = session.current?.response;
  resultBox.textContent = r
    ? `prediction ${formatLatLon(r.prediction)} via ${r.provider}` +
      `${r.fallback_used ? " (fallback)" : ""} in ${r.latency_ms.toFixed(0)} ms`
    : "no query yet";

  historyList.replaceChildren(
    ...session.history.map((run) => {
      const item = document.createElement("li");
      const checkbox = document.createElement("input");
      checkbox.type = "checkbox";
      checkbox.checked = session.compareSelection.includes(run.index);
      checkbox.addEventListener("change", () => {
        session.selectForCompare(run.index);
        renderAll();
      });
      item.append(
        checkbox,
        ` run ${run.index + 1}: ${run.input.imageName ?? "embedding"} ` +
          `k+${run.params.kPos}/k-${run.params.kNeg} ${run.params.provider} -> ` +
          formatLatLon(run.response.prediction),
      );
      return item;
    }),
  );

  const cmp = session.compare();
  compareBox.textContent = cmp
    ? `run ${cmp.a.index + 1} (${formatLatLon(cmp.a.response.prediction)}) vs ` +
      `run ${cmp.b.index + 1} (${formatLatLon(cmp.b.response.prediction)}): ` +
      `${cmp.distanceBetweenPredictions} apart`
    : "select two runs to compare";
}

submitButton.addEventListener("click", async () => {
  const params = {
    kPos: Number(kPosInput.value),
    kNeg: Number(kNegInput.value),
    provider: providerInput.value.trim() || "mock-midpoint",
  };
  const submitted = session.submit(params, currentInput);
  renderAll(); // disable controls while pending
  await submitted;
  renderAll();
});

negativesToggle.addEventListener("change", () => {
  session.toggleNegatives();
  renderAll();
});

api
  .indexStats()
  .then((s) => {
    statsBox.textContent = `gallery: ${s.count.toLocaleString()} embeddings, dim ${s.dim}`;
  })
  .catch(() => {
    statsBox.textContent = "service unreachable";
  });

renderAll();
