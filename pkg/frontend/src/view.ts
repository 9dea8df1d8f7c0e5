// Pure DOM rendering. Every function maps API payloads to elements and
// nothing here mutates hunt truth; interactive elements carry data-
// attributes that the app layer dispatches on.

import type {
  EvidenceRef,
  Fact,
  Hypothesis,
  HuntState,
  Predicate,
  Recommendation,
} from "./types";

export function predicateText(p: Predicate): string {
  return `${p.name}(${p.args.join(", ")})`;
}

const LEVEL_GLYPHS: Record<string, string> = {
  low: "○", // white circle
  moderate: "◐", // half circle
  high: "●", // black circle
};

export function levelGlyph(level: string): string {
  return LEVEL_GLYPHS[level] ?? "?";
}

const CRITERIA_ORDER = ["C1", "C2", "C3", "C4", "C5", "C6"];

export function renderCostVector(vector: Record<string, string>): HTMLElement {
  const row = el("span", "cost-vector");
  row.title = "○=low ◐=moderate ●=high";
  for (const criterion of CRITERIA_ORDER) {
    const level = vector[criterion];
    if (level === undefined) continue;
    const cell = el("span", "cost-cell");
    cell.dataset.criterion = criterion;
    cell.dataset.level = level;
    cell.textContent = `${criterion} ${levelGlyph(level)}`;
    row.appendChild(cell);
  }
  return row;
}

function el(tag: string, className?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function button(label: string, dataset: Record<string, string>): HTMLButtonElement {
  const b = document.createElement("button");
  b.textContent = label;
  for (const [k, v] of Object.entries(dataset)) b.dataset[k] = v;
  return b;
}

function evidenceText(ref: EvidenceRef): string {
  return ref.offset !== undefined
    ? `${ref.kind} ${ref.source} #${ref.offset}`
    : `${ref.kind} ${ref.source}`;
}

function evidenceList(refs: EvidenceRef[], className: string): HTMLElement {
  const list = el("ul", className);
  for (const ref of refs) {
    list.appendChild(el("li", "evidence-ref", evidenceText(ref)));
  }
  return list;
}

export function renderSummary(state: HuntState): HTMLElement {
  const box = el("header", "summary");
  box.appendChild(el("span", "hunt-name", state.name));
  const status = el("span", `status status-${state.status}`, state.status);
  box.appendChild(status);
  box.appendChild(el("span", "seq", `seq ${state.seq}`));
  box.appendChild(el("span", "gate", `gate: ${state.gate}`));
  const counts = state.telemetry_counts;
  box.appendChild(
    el(
      "span",
      "telemetry-counts",
      `telemetry: ${counts.http} http, ${counts.syslog} syslog, ${counts.forensics} forensics`,
    ),
  );
  box.appendChild(button("Step", { advance: "step" }));
  box.appendChild(button("Run", { advance: "run" }));
  return box;
}

function idNumber(id: string): number {
  const n = Number.parseInt(id.replace(/^\D+/, ""), 10);
  return Number.isNaN(n) ? 0 : n;
}

export function queueOrder(hypotheses: Hypothesis[]): Hypothesis[] {
  return [...hypotheses].sort(
    (a, b) => b.confidence - a.confidence || idNumber(a.id) - idNumber(b.id),
  );
}

function verifierBadge(hyp: Hypothesis): HTMLElement {
  const last = hyp.verdicts[hyp.verdicts.length - 1];
  if (!last) {
    return el("span", "badge badge-none", "no verdict");
  }
  const badge = el("span", `badge badge-${last.decision}`, `${last.verifier}: ${last.decision}`);
  badge.dataset.verifier = last.verifier;
  badge.dataset.decision = last.decision;
  return badge;
}

export function renderQueue(pending: Hypothesis[]): HTMLElement {
  const section = el("section", "queue");
  section.appendChild(el("h2", undefined, "Hypothesis queue"));
  if (pending.length === 0) {
    section.appendChild(el("p", "empty", "No pending hypotheses."));
    return section;
  }
  const list = el("ul", "queue-list");
  for (const hyp of queueOrder(pending)) {
    const row = el("li", "queue-row");
    row.dataset.hypothesis = hyp.id;
    row.appendChild(el("span", "hyp-id", hyp.id));
    row.appendChild(el("span", "hyp-predicate", predicateText(hyp.predicate)));
    row.appendChild(el("span", "hyp-confidence", hyp.confidence.toFixed(3)));
    row.appendChild(el("span", "hyp-origin", hyp.origin));
    row.appendChild(verifierBadge(hyp));
    row.appendChild(button("Accept", { decide: hyp.id, verdict: "accepted" }));
    row.appendChild(button("Reject", { decide: hyp.id, verdict: "rejected" }));
    row.appendChild(button("Evidence", { toggleEvidence: hyp.id }));
    const drill = evidenceList(hyp.evidence, "evidence hidden");
    drill.dataset.evidenceFor = hyp.id;
    row.appendChild(drill);
    list.appendChild(row);
  }
  section.appendChild(list);
  return section;
}

export function renderTimeline(facts: Fact[], rejected: Hypothesis[]): HTMLElement {
  const section = el("section", "timeline");
  section.appendChild(el("h2", undefined, "Knowledge timeline"));
  if (facts.length === 0) {
    section.appendChild(el("p", "empty", "No established facts yet."));
  } else {
    const list = el("ol", "fact-list");
    for (const fact of facts) {
      const row = el("li", "fact-row");
      row.appendChild(el("span", "fact-predicate", predicateText(fact.predicate)));
      row.appendChild(
        el("span", "fact-prov-count", `${fact.provenance.length} evidence link(s)`),
      );
      row.appendChild(evidenceList(fact.provenance, "provenance"));
      list.appendChild(row);
    }
    section.appendChild(list);
  }
  const archive = el("div", "archive");
  archive.appendChild(el("h3", undefined, "Rejected"));
  if (rejected.length === 0) {
    archive.appendChild(el("p", "empty", "Nothing rejected."));
  } else {
    const list = el("ul", "archive-list");
    for (const hyp of rejected) {
      list.appendChild(
        el("li", "archive-row", `${hyp.id} ${predicateText(hyp.predicate)}`),
      );
    }
    archive.appendChild(list);
  }
  section.appendChild(archive);
  return section;
}

export function renderRecommendations(recs: Recommendation[]): HTMLElement {
  const section = el("section", "recommendations");
  section.appendChild(el("h2", undefined, "Recommended actions"));
  if (recs.length === 0) {
    section.appendChild(el("p", "empty", "No recommendations."));
    return section;
  }
  const grid = el("div", "rec-grid");
  for (const rec of recs) {
    const card = el("article", "rec-card");
    card.dataset.recommendation = rec.id;
    card.appendChild(el("h3", "rec-action", `${rec.id} ${rec.action}`));
    card.appendChild(el("p", "rec-targets", rec.targets.join(", ")));
    card.appendChild(el("p", "rec-rule", `rule: ${rec.rule}`));
    card.appendChild(el("p", "rec-fact", `because: ${predicateText(rec.fact)}`));
    card.appendChild(renderCostVector(rec.cost_vector));
    if (rec.status === "recommended") {
      card.appendChild(button("Approve", { dispose: rec.id, status: "approved" }));
      card.appendChild(button("Decline", { dispose: rec.id, status: "declined" }));
    } else {
      card.appendChild(
        el("p", `rec-status rec-${rec.status}`, `${rec.status} by ${rec.disposed_by ?? "?"}`),
      );
    }
    grid.appendChild(card);
  }
  section.appendChild(grid);
  return section;
}

// Approving SHARE hands the analyst the bundle as a JSON download.
export function bundlePayload(
  rec: Recommendation,
  state: HuntState,
): { filename: string; json: string } {
  return {
    filename: `${state.name}-bundle-${rec.id}.json`,
    json: JSON.stringify(
      {
        hunt: state.name,
        recommendation: rec.id,
        facts: rec.targets,
      },
      null,
      2,
    ),
  };
}

export function triggerDownload(doc: Document, filename: string, json: string): void {
  const anchor = doc.createElement("a");
  anchor.href = "data:application/json;charset=utf-8," + encodeURIComponent(json);
  anchor.download = filename;
  anchor.dataset.bundleDownload = filename;
  doc.body.appendChild(anchor);
  try {
    anchor.click();
  } finally {
    anchor.remove();
  }
}
