// Test doubles: a request-recording fetch stub and a tiny in-memory
// stand-in for the diagnosis service, deterministic per evidence set so
// retract-restores-state can be asserted without a real server.

import type { EvidenceState, PosteriorPayload, Rankings } from "../src/types.js";

export interface RecordedRequest {
  method: string;
  url: string;
  body: unknown;
  headers: Record<string, string>;
}

export function jsonResponse(payload: unknown, status = 200): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { "content-type": "application/json" },
  });
}

/** fetch stub that replays a predetermined list of responses in order. */
export function scriptedFetch(responses: Response[]): {
  fetchFn: typeof fetch;
  requests: RecordedRequest[];
} {
  const requests: RecordedRequest[] = [];
  const fetchFn = (async (input: RequestInfo | URL, init?: RequestInit) => {
    requests.push({
      method: init?.method ?? "GET",
      url: String(input),
      body: typeof init?.body === "string" ? JSON.parse(init.body) : null,
      headers: (init?.headers as Record<string, string>) ?? {},
    });
    const next = responses.shift();
    if (!next) throw new Error("scriptedFetch ran out of responses");
    return next;
  }) as typeof fetch;
  return { fetchFn, requests };
}

function posteriorFor(evidence: Record<string, EvidenceState>): PosteriorPayload {
  // Any deterministic function of the evidence will do for tests.
  const keys = Object.keys(evidence).sort();
  const salt = keys.map((k) => `${k}=${evidence[k]}`).join(",");
  let h = 7;
  for (const ch of salt) h = (h * 31 + ch.charCodeAt(0)) % 997;
  const posteriors: Record<string, number> = {};
  const stderr: Record<string, number> = {};
  for (const id of ["A", "B", "C", "D"]) {
    h = (h * 31 + id.charCodeAt(0)) % 997;
    posteriors[id] = evidence[id] === "occurred" ? 1 : evidence[id] === "absent" ? 0 : h / 1000;
    stderr[id] = evidence[id] ? 0 : 0.01;
  }
  return {
    posteriors,
    stderr,
    n_samples: 1000,
    seed: 42,
    effective_sample_mass: 900,
    leak_posteriors: {},
  };
}

/**
 * In-memory fake of the session endpoints the view layer talks to.
 * State transitions mirror the real service: evidence map mutates on
 * POST /evidence, rankings 409 until something is confirmed.
 */
export function fakeService(): { fetchFn: typeof fetch; requests: RecordedRequest[] } {
  const evidence: Record<string, EvidenceState> = {};
  const requests: RecordedRequest[] = [];

  const rankings = (): Rankings | null => {
    const confirmed = Object.keys(evidence).filter((k) => evidence[k] === "occurred");
    if (confirmed.length === 0) return null;
    const payload = posteriorFor(evidence);
    const open = Object.keys(payload.posteriors)
      .filter((id) => !(id in evidence))
      .map((id) => ({
        failure_id: id,
        posterior: payload.posteriors[id]!,
        stderr: payload.stderr[id]!,
      }));
    open.sort((a, b) => b.posterior - a.posterior || (a.failure_id < b.failure_id ? -1 : 1));
    return { causes: open, effects: [...open].reverse(), evidence: { ...evidence }, seed: 42 };
  };

  const fetchFn = (async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = new URL(String(input));
    const method = init?.method ?? "GET";
    const body = typeof init?.body === "string" ? JSON.parse(init.body) : null;
    requests.push({
      method,
      url: url.pathname,
      body,
      headers: (init?.headers as Record<string, string>) ?? {},
    });

    if (method === "GET" && url.pathname === "/networks/net-1") {
      return jsonResponse({
        network_id: "net-1",
        status: "compiled",
        compiled: true,
        document: {
          nodes: [
            { id: "A", name: "A", process_step: "s1", occurrence_class: 5 },
            { id: "B", name: "B", process_step: "s1", occurrence_class: 5 },
            { id: "C", name: "C", process_step: "s2", occurrence_class: 6 },
            { id: "D", name: "D", process_step: "s3", occurrence_class: 7 },
          ],
          edges: [
            { cause: "A", effect: "C", trigger_probability: 0.5 },
            { cause: "B", effect: "C", trigger_probability: 0.5 },
            { cause: "C", effect: "D", trigger_probability: 0.9 },
          ],
        },
      });
    }
    if (method === "POST" && url.pathname === "/sessions") {
      return jsonResponse({
        session_id: "ses-1", network_id: "net-1", seed: 42, evidence: {}, history: [],
      }, 201);
    }
    if (method === "GET" && url.pathname === "/sessions/ses-1") {
      return jsonResponse({
        session_id: "ses-1", network_id: "net-1", seed: 42,
        evidence: { ...evidence }, history: [],
      });
    }
    if (method === "POST" && url.pathname === "/sessions/ses-1/evidence") {
      const { failure_id: fid, action } = body as { failure_id: string; action: string };
      if (!["A", "B", "C", "D"].includes(fid)) {
        return jsonResponse({ detail: `unknown failure '${fid}'` }, 404);
      }
      if (action === "confirm") evidence[fid] = "occurred";
      else if (action === "dismiss") evidence[fid] = "absent";
      else if (action === "retract") {
        if (!(fid in evidence)) return jsonResponse({ detail: "not in evidence" }, 400);
        delete evidence[fid];
      } else return jsonResponse({ detail: `bad action ${action}` }, 400);
      return jsonResponse(posteriorFor(evidence));
    }
    if (method === "GET" && url.pathname === "/sessions/ses-1/posteriors") {
      return jsonResponse(posteriorFor(evidence));
    }
    if (method === "GET" && url.pathname === "/sessions/ses-1/rankings") {
      const payload = rankings();
      if (!payload) return jsonResponse({ detail: "no confirmed failure in evidence" }, 409);
      return jsonResponse(payload);
    }
    if (method === "POST" && url.pathname === "/sessions/ses-1/prefill") {
      const { cell_id: cell } = body as { cell_id: string };
      if (cell !== "CELL-7") return jsonResponse({ detail: `unknown cell '${cell}'` }, 404);
      evidence["A"] = "occurred";
      evidence["B"] = "absent";
      return jsonResponse(posteriorFor(evidence));
    }
    return jsonResponse({ detail: `unhandled ${method} ${url.pathname}` }, 500);
  }) as typeof fetch;

  return { fetchFn, requests };
}
