export { ApiClient, ApiError, type ApiConfig } from "./api.js";
export * from "./types.js";
export { initialState, openSession, act, prefill, reroll, type ViewState } from "./state.js";
export { evidenceChips, rankedList, prefillForm, toast, sessionView, escapeHtml } from "./render.js";
export { layoutByStep, graphSvg, NODE_W, NODE_H } from "./graph.js";
