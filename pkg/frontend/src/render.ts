// HTML builders for the session view. All pure string functions so the
// ordering contract is trivially testable: lists are emitted in exactly
// the order the server sent them, never sorted or filtered here.

import type { EvidenceState, PosteriorPayload, RankedRow, Rankings } from "./types.js";

export type { RankedRow } from "./types.js";

/** The slice of view state the renderer needs (structural, test-friendly). */
export interface ViewStateLike {
  evidence: Record<string, EvidenceState>;
  rankings: Rankings | null;
  posteriors: PosteriorPayload | null;
  seed: number | null;
  toast: string | null;
  prefillMessage: string | null;
  prefillValue?: string;
}

export function escapeHtml(raw: string): string {
  return raw
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

const pct = (x: number) => `${(Math.max(0, Math.min(1, x)) * 100).toFixed(2)}%`;

/** One chip per evidence entry: confirmed renders red, dismissed green. */
export function evidenceChips(evidence: Record<string, EvidenceState>): string {
  const chips = Object.entries(evidence).map(([failureId, evidenceState]) => {
    const cls = evidenceState === "occurred" ? "chip confirmed" : "chip dismissed";
    const id = escapeHtml(failureId);
    return (
      `<span class="${cls}" data-failure="${id}">${id}` +
      `<button class="retract" data-action="retract" data-failure="${id}" ` +
      `title="retract">&times;</button></span>`
    );
  });
  return `<div class="chips">${chips.join("")}</div>`;
}

/**
 * Ranked list with a posterior bar and a standard-error whisker
 * spanning [p - stderr, p + stderr], clamped to [0, 1].
 */
export function rankedList(rows: RankedRow[], kind: "causes" | "effects"): string {
  const items = rows.map((row) => {
    const id = escapeHtml(row.failure_id);
    const lo = Math.max(0, row.posterior - row.stderr);
    const hi = Math.min(1, row.posterior + row.stderr);
    return (
      `<li data-failure="${id}">` +
      `<span class="rank-label">${id}</span>` +
      `<span class="rank-value">${row.posterior.toFixed(4)} &plusmn; ${row.stderr.toFixed(4)}</span>` +
      `<span class="track">` +
      `<span class="bar" style="width:${pct(row.posterior)}"></span>` +
      `<span class="whisker" style="left:${pct(lo)};width:${pct(hi - lo)}"></span>` +
      `</span>` +
      `<button data-action="confirm" data-failure="${id}">&#10003;</button>` +
      `<button data-action="dismiss" data-failure="${id}">&#10007;</button>` +
      `</li>`
    );
  });
  return `<ol class="ranking ${kind}">${items.join("")}</ol>`;
}

/** Cell-ID entry; submit stays disabled while the input is empty. */
export function prefillForm(value: string, message: string | null): string {
  const disabled = value.trim() === "" ? " disabled" : "";
  const note = message === null ? "" : `<p class="prefill-note">${escapeHtml(message)}</p>`;
  return (
    `<form class="prefill" data-role="prefill">` +
    `<input name="cell" placeholder="work cell id" value="${escapeHtml(value)}">` +
    `<button type="submit"${disabled}>prefill</button>` +
    `</form>${note}`
  );
}

export function toast(message: string | null): string {
  if (message === null) return "";
  return (
    `<div class="toast" role="alert">${escapeHtml(message)}` +
    `<button data-action="dismiss-toast">dismiss</button></div>`
  );
}

/** The whole session panel; graph SVG is passed in pre-rendered. */
export function sessionView(state: ViewStateLike, graphSvg: string): string {
  const causes = state.rankings
    ? rankedList(state.rankings.causes, "causes")
    : `<p class="hint">confirm a failure to rank causes</p>`;
  const effects = state.rankings
    ? rankedList(state.rankings.effects, "effects")
    : "";
  const mass = state.posteriors
    ? `<p class="meta">seed ${state.seed ?? "?"} &middot; ` +
      `effective sample mass ${state.posteriors.effective_sample_mass.toFixed(0)}</p>`
    : "";
  return (
    toast(state.toast) +
    `<section class="evidence"><h2>Evidence</h2>${evidenceChips(state.evidence)}` +
    prefillForm(state.prefillValue ?? "", state.prefillMessage) +
    `</section>` +
    `<section class="causes"><h2>Likely causes</h2>${causes}</section>` +
    `<section class="effects"><h2>Expected effects</h2>${effects}</section>` +
    `<section class="graph"><h2>Network</h2>${graphSvg}${mass}</section>`
  );
}
