// Pure rendering: payload in, view model / HTML string out. Everything shown
// comes verbatim from the API; SQL strings in particular are never reflowed,
// so the attempt cards stay byte-comparable with the service trace.

import type {
  AblationTable,
  AskResponse,
  AttemptPayload,
  EvalResponse,
  SchemaPayload,
} from "./types.js";

export function escapeHtml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

export interface AttemptView {
  sql: string;
  outcome: string;
  badge: "ok" | "error" | "empty";
  error: string | null;
  rowCount: number | null;
}

export interface MentionSegment {
  text: string;
  highlighted: boolean;
  title: string | null;
}

export interface AskView {
  question: string;
  segments: MentionSegment[];
  templated: string;
  chips: { placeholder: string; name: string; type: string; score: number }[];
  attempts: AttemptView[];
  answers: string[] | null;
  stoppedBecause: string;
  warnings: string[];
  timings: [string, number][];
}

export function attemptView(attempt: AttemptPayload): AttemptView {
  const badge =
    attempt.outcome === "ok" ? "ok" : attempt.outcome === "empty_result" ? "empty" : "error";
  return {
    sql: attempt.sql,
    outcome: attempt.outcome,
    badge,
    error: attempt.error,
    rowCount: attempt.row_count,
  };
}

export function askViewModel(resp: AskResponse): AskView {
  const segments: MentionSegment[] = [];
  let cursor = 0;
  for (const m of resp.mentions) {
    if (m.start > cursor) {
      segments.push({ text: resp.question.slice(cursor, m.start), highlighted: false, title: null });
    }
    const title =
      m.canonical_name === null
        ? null
        : `${m.canonical_name} (${m.node_type ?? "?"}, score ${m.score?.toFixed(2) ?? "?"})`;
    segments.push({ text: resp.question.slice(m.start, m.end), highlighted: true, title });
    cursor = m.end;
  }
  if (cursor < resp.question.length) {
    segments.push({ text: resp.question.slice(cursor), highlighted: false, title: null });
  }
  return {
    question: resp.question,
    segments,
    templated: resp.templated_question,
    chips: Object.entries(resp.bindings).map(([placeholder, b]) => ({
      placeholder,
      name: b.canonical_name,
      type: b.node_type,
      score: b.score,
    })),
    attempts: resp.attempts.map(attemptView),
    answers: resp.answers,
    stoppedBecause: resp.stopped_because,
    warnings: resp.warnings,
    timings: Object.entries(resp.timings_ms),
  };
}

export function renderAttemptCards(attempts: AttemptPayload[]): string {
  if (attempts.length === 0) {
    return `<p class="muted">no attempts recorded</p>`;
  }
  return attempts
    .map((a, i) => {
      const view = attemptView(a);
      const error = view.error ? `<p class="attempt-error">${escapeHtml(view.error)}</p>` : "";
      const rows = view.rowCount !== null ? ` &middot; ${view.rowCount} rows` : "";
      return `<div class="attempt card">
  <div class="attempt-head"><span class="badge badge-${view.badge}">${escapeHtml(
        view.outcome,
      )}</span> attempt ${i + 1}${rows}</div>
  ${error}
  <pre class="sql">${escapeHtml(view.sql)}</pre>
</div>`;
    })
    .join("\n");
}

export function renderAnswers(answers: string[] | null, stoppedBecause: string): string {
  if (answers === null) {
    return `<p class="answers-none">no answer (${escapeHtml(stoppedBecause)})</p>`;
  }
  if (answers.length === 0) {
    return `<p class="answers-empty">empty result: the query ran but matched nothing</p>`;
  }
  const rows = answers.map((a) => `<tr><td>${escapeHtml(a)}</td></tr>`).join("");
  return `<table class="answers"><thead><tr><th>answer (${answers.length})</th></tr></thead><tbody>${rows}</tbody></table>`;
}

export function renderAskResult(resp: AskResponse): string {
  const view = askViewModel(resp);
  const question = view.segments
    .map((s) =>
      s.highlighted
        ? `<mark title="${escapeHtml(s.title ?? "")}">${escapeHtml(s.text)}</mark>`
        : escapeHtml(s.text),
    )
    .join("");
  const chips = view.chips
    .map(
      (c) =>
        `<span class="chip">${escapeHtml(c.placeholder)} &rarr; ${escapeHtml(c.name)}
 <small>${escapeHtml(c.type)} &middot; ${c.score.toFixed(2)}</small></span>`,
    )
    .join(" ");
  const warnings = view.warnings.length
    ? `<ul class="warnings">${view.warnings.map((w) => `<li>${escapeHtml(w)}</li>`).join("")}</ul>`
    : "";
  const timings = view.timings
    .map(([stage, ms]) => `<span class="timing">${escapeHtml(stage)} ${ms.toFixed(1)}ms</span>`)
    .join(" ");
  return `<div class="ask-result">
  <p class="question">${question}</p>
  <p class="templated"><code>${escapeHtml(view.templated)}</code></p>
  <p class="chips">${chips}</p>
  ${renderAttemptCards(resp.attempts)}
  ${renderAnswers(view.answers, view.stoppedBecause)}
  ${warnings}
  <p class="timings">${timings}</p>
</div>`;
}

// The dashboard table is the payload's preformatted table, cell for cell.
export function ablationViewModel(payload: EvalResponse): AblationTable {
  return payload.table;
}

export function renderAblationTable(table: AblationTable): string {
  const head = table.columns.map((c) => `<th>${escapeHtml(c)}</th>`).join("");
  const body = table.rows
    .map(
      (row) =>
        `<tr><td>${escapeHtml(row.label)}</td>${row.cells
          .map((cell) => `<td class="num">${escapeHtml(cell)}</td>`)
          .join("")}</tr>`,
    )
    .join("");
  return `<table class="ablation"><thead><tr>${head}</tr></thead><tbody>${body}</tbody></table>`;
}

export function renderEvalDrilldown(payload: EvalResponse): string {
  return payload.reports
    .map((report) => {
      const rows = report.examples
        .map(
          (ex) => `<details class="example">
  <summary>${escapeHtml(ex.example_id)} (${ex.hops}-hop) EM ${ex.em} F1 ${ex.f1.toFixed(3)}
 &middot; ${ex.attempts} attempt(s) &middot; ${escapeHtml(ex.stopped_because)}</summary>
  ${renderAttemptCards(ex.attempt_records)}
  <p class="predicted">predicted: ${
    ex.predicted.length ? ex.predicted.map(escapeHtml).join(", ") : "&empty;"
  }</p>
</details>`,
        )
        .join("\n");
      return `<section class="report">
  <h3>${escapeHtml(report.setting)}</h3>
  ${rows}
</section>`;
    })
    .join("\n");
}

export function templateQuestionForRelation(
  relation: string,
  pair: { source: string; target: string },
): string {
  return `Which ${pair.target} nodes are linked to the ${pair.source} ... by ${relation}?`;
}

export function renderSchema(schema: SchemaPayload): string {
  if (schema.entity_types.length === 0) {
    return `<p class="empty-state">The database is empty: no entity types or relations to browse.</p>`;
  }
  const types = schema.entity_types
    .map(
      (t) => `<li><code>${escapeHtml(t.name)}</code> <small>${t.count} nodes</small></li>`,
    )
    .join("");
  const relations = schema.relations
    .map((r) => {
      const pair = r.pairs[0] ?? { source: "?", target: "?" };
      const arrows = r.pairs
        .map((p) => `${escapeHtml(p.source)} &rarr; ${escapeHtml(p.target)}`)
        .join(", ");
      const prefill = escapeHtml(templateQuestionForRelation(r.name, pair));
      return `<li><a href="#" class="relation-link" data-prefill="${prefill}">
<code>${escapeHtml(r.name)}</code></a> <small>${arrows} &middot; ${r.count} edges</small></li>`;
    })
    .join("");
  return `<div class="schema">
  <h3>Entity types</h3><ul>${types}</ul>
  <h3>Relations</h3><ul>${relations}</ul>
</div>`;
}
