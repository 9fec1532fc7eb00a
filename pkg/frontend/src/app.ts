// DOM wiring for the console: ask panel, schema browser, eval dashboard.

import { ApiClient, ApiError } from "./api.js";
import {
  ablationViewModel,
  renderAblationTable,
  renderAskResult,
  renderEvalDrilldown,
  renderSchema,
} from "./render.js";
import {
  buildAskRequest,
  loadSession,
  makeEntry,
  saveSession,
  starExport,
  type ControlState,
} from "./session.js";
import type { SessionEntry } from "./types.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const apiBaseInput = el<HTMLInputElement>("api-base");
const askForm = el<HTMLFormElement>("ask-form");
const questionInput = el<HTMLTextAreaElement>("question");
const backendSelect = el<HTMLSelectElement>("backend");
const nerSelect = el<HTMLSelectElement>("ner-mode");
const scCheckbox = el<HTMLInputElement>("self-correction");
const retriesInput = el<HTMLInputElement>("max-retries");
const demosInput = el<HTMLInputElement>("demo-dataset");
const kDemosInput = el<HTMLInputElement>("k-demos");
const askButton = el<HTMLButtonElement>("ask-button");
const banner = el<HTMLDivElement>("banner");
const historyRoot = el<HTMLDivElement>("history");
const schemaRoot = el<HTMLDivElement>("schema-root");
const dsSingle = el<HTMLInputElement>("ds-single");
const dsTwo = el<HTMLInputElement>("ds-two");
const dsSeed = el<HTMLInputElement>("ds-seed");
const dsCreate = el<HTMLButtonElement>("ds-create");
const dsStatus = el<HTMLSpanElement>("ds-status");
const evalDataset = el<HTMLInputElement>("eval-dataset");
const evalBackend = el<HTMLSelectElement>("eval-backend");
const evalRun = el<HTMLButtonElement>("eval-run");
const evalRoot = el<HTMLDivElement>("eval-root");

apiBaseInput.value = localStorage.getItem("kgnlq.apiBase") ?? "";
apiBaseInput.addEventListener("change", () => {
  localStorage.setItem("kgnlq.apiBase", apiBaseInput.value.trim());
  void refreshSchema();
});

function api(): ApiClient {
  return new ApiClient(apiBaseInput.value.trim());
}

function showBanner(message: string | null): void {
  banner.textContent = message ?? "";
  banner.style.display = message ? "block" : "none";
}

let session: SessionEntry[] = loadSession(localStorage);
let inFlight = false;

function controlState(): ControlState {
  return {
    question: questionInput.value.trim(),
    backend: backendSelect.value,
    nerMode: nerSelect.value,
    selfCorrection: scCheckbox.checked,
    maxRetries: Number(retriesInput.value),
    kDemos: Number(kDemosInput.value),
    demoDatasetId: demosInput.value.trim(),
  };
}

function renderHistory(): void {
  historyRoot.innerHTML = session
    .map((entry, i) => {
      const star = entry.starred ? "★" : "☆";
      const body = entry.response
        ? renderAskResult(entry.response)
        : `<p class="answers-none">request failed: ${entry.error ?? "service unreachable"}</p>`;
      const echo = `${entry.request.options.backend} · ner=${entry.request.options.ner_mode}` +
        ` · sc=${entry.request.options.self_correction ? "on" : "off"}`;
      return `<article class="entry card" data-index="${i}">
  <header>
    <button class="star" data-index="${i}" title="star and export">${star}</button>
    <time>${entry.timestamp}</time> <small>${echo}</small>
  </header>
  ${body}
</article>`;
    })
    .reverse()
    .join("\n");

  for (const button of historyRoot.querySelectorAll<HTMLButtonElement>("button.star")) {
    button.addEventListener("click", () => {
      const index = Number(button.dataset.index);
      session[index].starred = !session[index].starred;
      saveSession(localStorage, session);
      if (session[index].starred) {
        const blob = new Blob([JSON.stringify(starExport(session[index]), null, 2)], {
          type: "application/json",
        });
        const a = document.createElement("a");
        a.href = URL.createObjectURL(blob);
        a.download = `starred-${index}.json`;
        a.click();
        URL.revokeObjectURL(a.href);
      }
      renderHistory();
    });
  }
}

askForm.addEventListener("submit", (event) => {
  event.preventDefault();
  if (inFlight) return;
  const state = controlState();
  if (!state.question) {
    showBanner("Enter a question first.");
    return;
  }
  const request = buildAskRequest(state);
  inFlight = true;
  askButton.disabled = true;
  showBanner(null);
  api()
    .ask(request)
    .then((response) => {
      session.push(makeEntry(request, response));
    })
    .catch((error: unknown) => {
      const message = error instanceof ApiError ? error.message : "service unreachable";
      showBanner(`Ask failed: ${message}. The entry is kept below for retry.`);
      session.push(makeEntry(request, null, message));
    })
    .finally(() => {
      inFlight = false;
      askButton.disabled = false;
      saveSession(localStorage, session);
      renderHistory();
    });
});

async function refreshSchema(): Promise<void> {
  try {
    const schema = await api().schema();
    schemaRoot.innerHTML = renderSchema(schema);
    for (const link of schemaRoot.querySelectorAll<HTMLAnchorElement>("a.relation-link")) {
      link.addEventListener("click", (event) => {
        event.preventDefault();
        questionInput.value = link.dataset.prefill ?? "";
        questionInput.focus();
      });
    }
  } catch {
    schemaRoot.innerHTML = `<p class="answers-none">schema unavailable: service unreachable</p>`;
  }
}

dsCreate.addEventListener("click", () => {
  dsStatus.textContent = "generating…";
  api()
    .createDataset(Number(dsSingle.value), Number(dsTwo.value), Number(dsSeed.value))
    .then((created) => {
      evalDataset.value = created.dataset_id;
      dsStatus.textContent = created.warning
        ? `created ${created.dataset_id} (partial: ${created.warning})`
        : `created ${created.dataset_id}`;
    })
    .catch((error: unknown) => {
      dsStatus.textContent =
        error instanceof ApiError ? `failed: ${error.message}` : "failed: service unreachable";
    });
});

evalRun.addEventListener("click", () => {
  const datasetId = evalDataset.value.trim();
  if (!datasetId) {
    evalRoot.innerHTML = `<p class="answers-none">enter or generate a dataset id first</p>`;
    return;
  }
  const settings = Array.from(
    document.querySelectorAll<HTMLInputElement>("input.setting:checked"),
  ).map((box) => box.value);
  evalRoot.innerHTML = `<p class="muted">running…</p>`;
  api()
    .evaluate(datasetId, settings, evalBackend.value)
    .then((payload) => {
      evalRoot.innerHTML =
        renderAblationTable(ablationViewModel(payload)) + renderEvalDrilldown(payload);
    })
    .catch((error: unknown) => {
      evalRoot.innerHTML = `<p class="answers-none">${
        error instanceof ApiError ? error.message : "service unreachable"
      }</p>`;
    });
});

renderHistory();
void refreshSchema();
