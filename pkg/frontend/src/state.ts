// Session view state and the actions that mutate it. Every field below
// is a verbatim copy of a server response; the client never infers
// probabilities or reorders lists. Each user action issues exactly one
// evidence call (plus read-only refreshes), and on failure the previous
// state is kept untouched with a toast set.

import { ApiClient, ApiError } from "./api.js";
import type {
  EvidenceAction,
  EvidenceState,
  NetworkDocument,
  PosteriorPayload,
  Rankings,
} from "./types.js";

export interface ViewState {
  networkId: string | null;
  sessionId: string | null;
  document: NetworkDocument | null;
  evidence: Record<string, EvidenceState>;
  posteriors: PosteriorPayload | null;
  rankings: Rankings | null; // null until something is confirmed
  seed: number | null;
  toast: string | null; // transient error banner, "retry" wording
  prefillMessage: string | null; // inline message under the cell input
}

export function initialState(): ViewState {
  return {
    networkId: null,
    sessionId: null,
    document: null,
    evidence: {},
    posteriors: null,
    rankings: null,
    seed: null,
    toast: null,
    prefillMessage: null,
  };
}

function describe(error: unknown): string {
  if (error instanceof ApiError) return String(error.message);
  return error instanceof Error ? error.message : String(error);
}

/** Pull evidence chips and rankings back from the server after a change. */
async function refresh(state: ViewState, client: ApiClient): Promise<ViewState> {
  const sessionId = state.sessionId!;
  const session = await client.session(sessionId);
  let rankings: Rankings | null = null;
  try {
    rankings = await client.rankings(sessionId);
  } catch (error) {
    // 409 until at least one failure is confirmed; anything else is real
    if (!(error instanceof ApiError) || error.status !== 409) throw error;
  }
  return {
    ...state,
    evidence: session.evidence,
    seed: session.seed,
    rankings,
    toast: null,
    prefillMessage: null,
  };
}

export async function openSession(
  state: ViewState,
  client: ApiClient,
  networkId: string,
): Promise<ViewState> {
  try {
    const detail = await client.network(networkId);
    const session = await client.openSession(networkId);
    const posteriors = await client.posteriors(session.session_id);
    return {
      ...initialState(),
      networkId,
      sessionId: session.session_id,
      document: detail.document,
      evidence: session.evidence,
      seed: session.seed,
      posteriors,
    };
  } catch (error) {
    return { ...state, toast: `${describe(error)} (retry)` };
  }
}

/**
 * confirm / dismiss / retract one failure. Exactly one evidence POST;
 * the posterior payload it returns is adopted as-is.
 */
export async function act(
  state: ViewState,
  client: ApiClient,
  failureId: string,
  action: EvidenceAction,
): Promise<ViewState> {
  if (!state.sessionId) return { ...state, toast: "no open session (retry)" };
  try {
    const posteriors = await client.applyEvidence(state.sessionId, failureId, action);
    const refreshed = await refresh(state, client);
    return { ...refreshed, posteriors };
  } catch (error) {
    return { ...state, toast: `${describe(error)} (retry)` };
  }
}

/** Apply work-cell evidence from the server-side CSV lookup. */
export async function prefill(
  state: ViewState,
  client: ApiClient,
  cellId: string,
): Promise<ViewState> {
  if (!state.sessionId) return { ...state, toast: "no open session (retry)" };
  try {
    const posteriors = await client.prefill(state.sessionId, cellId);
    const refreshed = await refresh(state, client);
    return { ...refreshed, posteriors };
  } catch (error) {
    if (error instanceof ApiError && error.status === 404) {
      return { ...state, prefillMessage: `cell ${cellId} not found` };
    }
    return { ...state, toast: `${describe(error)} (retry)` };
  }
}

export async function reroll(state: ViewState, client: ApiClient): Promise<ViewState> {
  if (!state.sessionId) return { ...state, toast: "no open session (retry)" };
  try {
    const posteriors = await client.reroll(state.sessionId);
    const refreshed = await refresh(state, client);
    return { ...refreshed, posteriors };
  } catch (error) {
    return { ...state, toast: `${describe(error)} (retry)` };
  }
}
