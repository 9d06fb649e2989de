// Pure HTML renderers: view state in, markup out. The controller owns all
// event wiring, so these stay trivially testable without a DOM.

import type { CheckView, ConflictBundle, EditCommand, ScenarioRow, TraceStep } from "./types.js";

export function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderInbox(rows: ScenarioRow[]): string {
  if (rows.length === 0) {
    return '<p class="empty">No scenarios are waiting for review.</p>';
  }
  const body = rows
    .map(
      (r) => `
    <tr class="inbox-row" data-id="${esc(r.id)}">
      <td><a href="#" class="open-bundle" data-id="${esc(r.id)}">${esc(r.id)}</a></td>
      <td>${esc(r.sample_id)}</td>
      <td>${r.round}</td>
      <td><span class="conflict-kind">${esc(r.conflict_kind ?? "")}</span></td>
    </tr>`,
    )
    .join("");
  return `<table class="inbox"><thead><tr><th>scenario</th><th>sample</th><th>rounds</th><th>conflict</th></tr></thead><tbody>${body}</tbody></table>`;
}

export function renderDocument(text: string): string {
  // headings render as headings; everything else as paragraphs
  const blocks = text.split(/\n{2,}/).map((block) => {
    const m = block.match(/^(#{1,6})\s+(.*)$/m);
    if (m && block.trim().startsWith(m[1])) {
      const level = Math.min(m[1].length + 2, 6);
      const rest = block.replace(/^#{1,6}\s+.*$/m, "").trim();
      return `<h${level}>${esc(m[2])}</h${level}>` + (rest ? `<p>${esc(rest)}</p>` : "");
    }
    return `<p>${esc(block.trim())}</p>`;
  });
  return `<section class="document">${blocks.join("")}</section>`;
}

export function renderChecks(checks: CheckView[]): string {
  const rows = checks
    .map((c) => {
      const badges = [
        c.locked ? '<span class="badge lock">locked</span>' : "",
        c.kept ? '<span class="badge kept">kept</span>' : "",
      ].join("");
      return `<li class="check" data-check-id="${esc(c.id)}"><code>${esc(c.id)}</code>: <code class="check-text">${esc(c.text)}</code>${badges}</li>`;
    })
    .join("");
  return `<ul class="checks">${rows}</ul>`;
}

export function renderTrace(trace: TraceStep[], styles: Record<string, string>): string {
  if (trace.length === 0) return '<p class="empty">empty trace</p>';
  const steps = trace
    .map(([tool, args], i) => {
      const style = styles[tool] ?? "?";
      const argText = Object.entries(args)
        .map(([k, v]) => `${k}=${JSON.stringify(v)}`)
        .join(", ");
      return `<li><span class="step-index">${i}</span> <span class="badge style-${esc(style)}">${esc(style)}</span> <code>${esc(tool)}(${esc(argText)})</code></li>`;
    })
    .join("");
  return `<ol class="trace">${steps}</ol>`;
}

export function describeEdit(cmd: EditCommand): string {
  switch (cmd.kind) {
    case "add_check":
      return `add check: ${cmd.check_text ?? ""}`;
    case "remove_check":
      return `remove check ${cmd.check_id ?? ""}`;
    case "replace_check":
      return `replace ${cmd.check_id ?? ""} with: ${cmd.check_text ?? ""}`;
    case "add_pre_clause":
      return `add precondition on ${cmd.tool ?? ""}: ${cmd.expr ?? ""}`;
    case "add_post_clause":
      return `add postcondition on ${cmd.tool ?? ""}: ${cmd.expr ?? ""}`;
    case "remove_pre_clause":
      return `remove precondition ${cmd.index ?? "?"} of ${cmd.tool ?? ""}`;
    case "remove_post_clause":
      return `remove postcondition ${cmd.index ?? "?"} of ${cmd.tool ?? ""}`;
    case "add_state_var":
      return `add state variable ${cmd.name ?? ""}: ${cmd.var_type ?? ""}`;
    case "set_init_binding":
      return `set initial ${cmd.name ?? ""} = ${JSON.stringify(cmd.value)}`;
    default:
      return cmd.kind;
  }
}

export function renderSuggestions(suggestions: EditCommand[]): string {
  if (suggestions.length === 0) return '<p class="empty">no suggestions from the last round</p>';
  const cards = suggestions
    .map(
      (s, i) => `
    <div class="suggestion-card" data-suggestion="${i}">
      <p class="summary">${esc(describeEdit(s))}</p>
      ${s.rationale ? `<p class="rationale">${esc(s.rationale)}</p>` : ""}
      <button class="accept-suggestion" data-suggestion="${i}">accept</button>
    </div>`,
    )
    .join("");
  return `<div class="suggestions">${cards}</div>`;
}

export function renderBundle(bundle: ConflictBundle): string {
  const witness = bundle.witness
    ? renderTrace(bundle.witness.trace, bundle.tool_styles) +
      `<p class="initial-state">initial state: <code>${esc(JSON.stringify(bundle.witness.initial_state))}</code></p>`
    : '<p class="empty">no conflicting trace recorded</p>';
  return `
  <article class="bundle" data-id="${esc(bundle.id)}" data-checks-version="${bundle.versions.checks}">
    <h2>${esc(bundle.id)} <span class="badge state">${esc(bundle.state)}</span> <span class="round">round ${bundle.round}</span></h2>
    <h3>Scenario</h3><p class="prompt">${esc(bundle.prompt)}</p>
    <h3>Sampled manual text</h3>${renderDocument(bundle.document_text)}
    <h3>Checks</h3>${renderChecks(bundle.checks)}
    <h3>World model</h3><pre class="world-model">${esc(bundle.world_model)}</pre>
    <h3>Conflicting trace</h3>${witness}
    <h3>Suggestions</h3>${renderSuggestions(bundle.suggestions)}
    <h3>Manual edit</h3>
    <div class="editor">
      <textarea class="edit-json" rows="5" placeholder='{"target": "check_set", "kind": "replace_check", "check_id": "...", "check_text": "..."}'></textarea>
      <button class="submit-edit">submit edit</button>
      <button class="revalidate">re-validate</button>
      <button class="discard">discard scenario</button>
      <p class="edit-errors"></p>
    </div>
  </article>`;
}
