// Client-local session history: append-only within a session, starred
// entries export as dataset-example skeletons for curating question sets.

import type { AskRequestBody, AskResponse, SessionEntry } from "./types.js";

const STORAGE_KEY = "kgnlq.session";

export interface ControlState {
  question: string;
  backend: string;
  nerMode: string;
  selfCorrection: boolean;
  maxRetries: number;
  kDemos: number;
  demoDatasetId: string;
}

export function buildAskRequest(state: ControlState): AskRequestBody {
  const options: AskRequestBody["options"] = {
    backend: state.backend,
    ner_mode: state.nerMode,
    self_correction: state.selfCorrection,
    max_retries: state.maxRetries,
    k_demos: state.kDemos,
  };
  if (state.demoDatasetId) {
    options.demo_dataset_id = state.demoDatasetId;
  }
  return { question: state.question, options };
}

export function makeEntry(
  request: AskRequestBody,
  response: AskResponse | null,
  error: string | null = null,
): SessionEntry {
  return {
    request,
    response,
    error,
    timestamp: new Date().toISOString(),
    starred: false,
  };
}

export function starExport(entry: SessionEntry): Record<string, unknown> {
  const resp = entry.response;
  const lastOk = resp?.attempts.filter((a) => a.outcome === "ok").at(-1) ?? null;
  return {
    question: entry.request.question,
    templated_question: resp?.templated_question ?? null,
    entities: resp
      ? Object.values(resp.bindings).map((b) => ({
          surface: b.surface,
          node_index: b.node_index,
          node_type: b.node_type,
        }))
      : [],
    gold_sql: lastOk?.sql ?? null,
    gold_answers: resp?.answers ?? [],
    source: "console-star",
  };
}

export function loadSession(storage: Pick<Storage, "getItem">): SessionEntry[] {
  try {
    const raw = storage.getItem(STORAGE_KEY);
    return raw ? (JSON.parse(raw) as SessionEntry[]) : [];
  } catch {
    return [];
  }
}

export function saveSession(
  storage: Pick<Storage, "setItem">,
  entries: SessionEntry[],
): void {
  storage.setItem(STORAGE_KEY, JSON.stringify(entries));
}
