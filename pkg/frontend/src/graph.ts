// SVG network view. Layout is deterministic and dependency-free:
// process steps become columns left to right (ordered by first
// appearance in the document), nodes stack inside their column. Fill
// intensity tracks the posterior; evidence nodes get a colored outline.

import { escapeHtml } from "./render.js";
import type { EvidenceState, NetworkDocument, PosteriorPayload } from "./types.js";

export const NODE_W = 132;
export const NODE_H = 34;
const COL_GAP = 72;
const ROW_GAP = 18;
const MARGIN = 16;

export interface PlacedNode {
  id: string;
  name: string;
  step: string;
  x: number; // top-left corner
  y: number;
}

export interface PlacedEdge {
  cause: string;
  effect: string;
  x1: number;
  y1: number;
  x2: number;
  y2: number;
}

export interface Layout {
  nodes: PlacedNode[];
  edges: PlacedEdge[];
  steps: string[]; // column order
  width: number;
  height: number;
}

export function layoutByStep(doc: NetworkDocument): Layout {
  const steps: string[] = [];
  for (const node of doc.nodes) {
    if (!steps.includes(node.process_step)) steps.push(node.process_step);
  }
  const rowOf = new Map<string, number>();
  const placed = new Map<string, PlacedNode>();
  const nodes = doc.nodes.map((node) => {
    const col = steps.indexOf(node.process_step);
    const row = rowOf.get(node.process_step) ?? 0;
    rowOf.set(node.process_step, row + 1);
    const out: PlacedNode = {
      id: node.id,
      name: node.name,
      step: node.process_step,
      x: MARGIN + col * (NODE_W + COL_GAP),
      y: MARGIN + row * (NODE_H + ROW_GAP),
    };
    placed.set(node.id, out);
    return out;
  });
  const edges = doc.edges.flatMap((edge) => {
    const a = placed.get(edge.cause);
    const b = placed.get(edge.effect);
    if (!a || !b) return [];
    return [{
      cause: edge.cause,
      effect: edge.effect,
      x1: a.x + NODE_W,
      y1: a.y + NODE_H / 2,
      x2: b.x,
      y2: b.y + NODE_H / 2,
    }];
  });
  const width = MARGIN * 2 + steps.length * NODE_W + (steps.length - 1) * COL_GAP;
  const height = MARGIN * 2 +
    Math.max(0, ...[...rowOf.values()].map((n) => n * (NODE_H + ROW_GAP) - ROW_GAP));
  return { nodes, edges, steps, width, height };
}

/**
 * Render the laid-out network. Hovering a node shows name, process step
 * and posterior with its sampling error; clicking is wired up by the
 * data-action buttons revealed per node.
 */
export function graphSvg(
  doc: NetworkDocument,
  posteriors: PosteriorPayload | null,
  evidence: Record<string, EvidenceState>,
): string {
  const layout = layoutByStep(doc);
  const headers = layout.steps.map((step, col) => {
    const x = MARGIN + col * (NODE_W + COL_GAP) + NODE_W / 2;
    return `<text class="step-label" x="${x}" y="${MARGIN - 4}" text-anchor="middle">${escapeHtml(step)}</text>`;
  });
  const edges = layout.edges.map((edge) =>
    `<line class="edge" x1="${edge.x1}" y1="${edge.y1}" x2="${edge.x2}" y2="${edge.y2}" marker-end="url(#arr)"/>`,
  );
  const nodes = layout.nodes.map((node) => {
    const p = posteriors?.posteriors[node.id];
    const se = posteriors?.stderr[node.id];
    const state = evidence[node.id];
    const outline = state === "occurred" ? "confirmed" : state === "absent" ? "dismissed" : "";
    const fill = p === undefined ? 0 : Math.max(0.06, Math.min(1, p));
    const tip =
      `${node.name} [${node.step}] ` +
      (p === undefined ? "no posterior yet" : `${p.toFixed(4)} ± ${(se ?? 0).toFixed(4)}`);
    const id = escapeHtml(node.id);
    return (
      `<g class="${["node", outline].filter(Boolean).join(" ")}" data-failure="${id}">` +
      `<title>${escapeHtml(tip)}</title>` +
      `<rect x="${node.x}" y="${node.y}" width="${NODE_W}" height="${NODE_H}" rx="6" fill-opacity="${fill.toFixed(3)}"/>` +
      `<text x="${node.x + NODE_W / 2}" y="${node.y + NODE_H / 2 + 4}" text-anchor="middle">${id}</text>` +
      `<g class="controls">` +
      `<text class="ctl" data-action="confirm" data-failure="${id}" x="${node.x + NODE_W - 34}" y="${node.y + NODE_H - 6}">&#10003;</text>` +
      `<text class="ctl" data-action="dismiss" data-failure="${id}" x="${node.x + NODE_W - 16}" y="${node.y + NODE_H - 6}">&#10007;</text>` +
      `</g></g>`
    );
  });
  return (
    `<svg class="net" viewBox="0 0 ${layout.width + 8} ${layout.height + 8}" ` +
    `width="${layout.width}" role="img">` +
    `<defs><marker id="arr" markerWidth="8" markerHeight="8" refX="7" refY="3" orient="auto">` +
    `<path d="M0,0 L7,3 L0,6 z"/></marker></defs>` +
    headers.join("") + edges.join("") + nodes.join("") +
    `</svg>`
  );
}
