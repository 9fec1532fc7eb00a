// Mirrors of the service API payloads. The console renders these verbatim;
// it never derives scores or rewrites SQL client-side.

export interface MentionPayload {
  start: number;
  end: number;
  surface: string;
  node_index: number | null;
  node_type: string | null;
  canonical_name: string | null;
  score: number | null;
}

export interface BindingPayload {
  canonical_name: string;
  node_type: string;
  node_index: number;
  score: number;
  surface: string;
}

export interface AttemptPayload {
  sql: string;
  outcome: string;
  row_count: number | null;
  error: string | null;
}

export interface AskResponse {
  question: string;
  mentions: MentionPayload[];
  templated_question: string;
  bindings: Record<string, BindingPayload>;
  attempts: AttemptPayload[];
  stopped_because: string;
  answers: string[] | null;
  warnings: string[];
  timings_ms: Record<string, number>;
}

export interface AskOptionsState {
  ner_mode?: string;
  self_correction?: boolean;
  backend?: string;
  max_retries?: number;
  demo_dataset_id?: string;
  k_demos?: number;
}

export interface AskRequestBody {
  question: string;
  options: AskOptionsState;
}

export interface SessionEntry {
  request: AskRequestBody;
  response: AskResponse | null;
  error: string | null;
  timestamp: string;
  starred: boolean;
}

export interface AblationRow {
  label: string;
  cells: string[];
}

export interface AblationTable {
  columns: string[];
  rows: AblationRow[];
}

export interface ExampleRowPayload {
  example_id: string;
  hops: number;
  em: number;
  f1: number;
  attempts: number;
  stopped_because: string;
  predicted: string[];
  attempt_records: AttemptPayload[];
}

export interface EvalReportPayload {
  setting: string;
  backend_failures: number;
  aggregates: Record<string, { n: number; em: number; f1: number }>;
  examples: ExampleRowPayload[];
}

export interface EvalResponse {
  table: AblationTable;
  reports: EvalReportPayload[];
  dataset_id?: string;
  backend?: string;
}

export interface SchemaPayload {
  tables: { name: string; columns: { name: string; role: string }[] }[];
  entity_types: { name: string; count: number }[];
  relations: {
    name: string;
    count: number;
    pairs: { source: string; target: string }[];
  }[];
  warnings: string[];
}

export interface DatasetCreated {
  dataset_id: string;
  manifest: Record<string, unknown>;
  warning?: string;
}
