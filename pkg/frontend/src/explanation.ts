import type { ExplanationPayload, SummaryPayload } from "./types";

function el(tag: string, className: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function verdictChip(formulaId: string, verdict: boolean | "skipped"): HTMLElement {
  if (verdict === "skipped") {
    const chip = el("span", "chip chip-skipped", `${formulaId}: skipped (hard constraint violated)`);
    return chip;
  }
  const cls = verdict ? "chip chip-satisfied" : "chip chip-violated";
  return el("span", cls, `${formulaId}: ${verdict ? "satisfied" : "violated"}`);
}

function summaryRow(formulaId: string, summary: SummaryPayload): HTMLElement {
  const row = el("div", "summary-row");
  row.setAttribute("data-formula", formulaId);
  const cells: Array<[string, number | null]> = [
    ["applicable", summary.applicable],
    ["violating", summary.violating],
    ["pct", summary.pct],
    ["avg", summary.avg],
    ["min", summary.min],
    ["max", summary.max],
    ["scenarios", summary.scenarios],
  ];
  for (const [name, value] of cells) {
    if (value === null) continue;
    const cell = el("span", `summary-cell summary-${name}`, `${name} ${value}`);
    row.appendChild(cell);
  }
  return row;
}

/**
 * Render one explanation: the narrative text first, then an expandable
 * structured view with one verdict chip per formula, the violation summaries,
 * the score comparison and, for tree-expansion answers, the count of newly
 * analyzed scenarios. Every number shown is copied from the payload.
 */
export function renderExplanation(container: HTMLElement, payload: ExplanationPayload): void {
  const panel = el("section", `explanation-panel explanation-${payload.qtype}`);

  if (payload.error) {
    panel.appendChild(el("div", "error-banner", payload.error));
    container.appendChild(panel);
    return;
  }

  if (payload.raw_text) {
    panel.appendChild(el("p", "query-echo", payload.raw_text));
  }
  const body = el("div", "explanation-text");
  for (const paragraph of payload.text.split("\n\n")) {
    body.appendChild(el("p", "explanation-paragraph", paragraph));
  }
  panel.appendChild(body);

  const details = document.createElement("details");
  details.className = "structured-view";
  const summaryToggle = document.createElement("summary");
  summaryToggle.textContent = "Details";
  details.appendChild(summaryToggle);

  const chips = el("div", "verdict-chips");
  for (const [formulaId, verdict] of Object.entries(payload.verdicts)) {
    chips.appendChild(verdictChip(formulaId, verdict));
  }
  details.appendChild(chips);

  for (const [formulaId, summary] of Object.entries(payload.summaries)) {
    if (summary === null || summary.violating === 0) continue;
    details.appendChild(summaryRow(formulaId, summary));
  }

  if (payload.comparison) {
    const comparison = el("div", "score-comparison");
    comparison.appendChild(
      el("span", "score score-recommended", `recommended ${payload.comparison.recommended_score}`),
    );
    comparison.appendChild(
      el("span", "score score-alternative", `alternative ${payload.comparison.alternative_score}`),
    );
    details.appendChild(comparison);
  }

  if (payload.new_iterations !== undefined) {
    details.appendChild(
      el("div", "new-scenarios", `new scenarios analyzed: ${payload.new_iterations}`),
    );
  }

  panel.appendChild(details);
  container.appendChild(panel);
}
