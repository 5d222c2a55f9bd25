// Browser wiring: reads service location from the query string or
// localStorage, boots a session, and delegates clicks to the state
// actions. Everything it paints comes straight from server responses;
// the modules it calls are the ones covered by the test suite.

import { ApiClient, ApiError } from "./api.js";
import { graphSvg } from "./graph.js";
import { sessionView } from "./render.js";
import * as actions from "./state.js";
import type { ViewState } from "./state.js";
import type { EvidenceAction, JobStatus } from "./types.js";

interface BootConfig {
  baseUrl: string;
  token?: string;
}

function bootConfig(): BootConfig {
  const params = new URLSearchParams(window.location.search);
  const baseUrl =
    params.get("api") ?? localStorage.getItem("rca.baseUrl") ?? window.location.origin;
  const token = params.get("token") ?? localStorage.getItem("rca.token") ?? undefined;
  localStorage.setItem("rca.baseUrl", baseUrl);
  if (token) localStorage.setItem("rca.token", token);
  return { baseUrl, token };
}

let state: ViewState = actions.initialState();
let prefillValue = "";
let client: ApiClient;
let root: HTMLElement;

function paint(): void {
  const graph = state.document ? graphSvg(state.document, state.posteriors, state.evidence) : "";
  root.innerHTML = sessionView({ ...state, prefillValue }, graph);
  const input = root.querySelector<HTMLInputElement>(".prefill input");
  input?.addEventListener("input", () => {
    prefillValue = input.value;
    const submit = root.querySelector<HTMLButtonElement>(".prefill button");
    if (submit) submit.disabled = prefillValue.trim() === "";
  });
  root.querySelector<HTMLFormElement>("form[data-role=prefill]")?.addEventListener(
    "submit",
    (event) => {
      event.preventDefault();
      void actions.prefill(state, client, prefillValue.trim()).then((next) => {
        state = next;
        prefillValue = "";
        paint();
      });
    },
  );
}

function onClick(event: Event): void {
  const target = (event.target as HTMLElement).closest<HTMLElement>("[data-action]");
  if (!target) return;
  const action = target.dataset.action;
  if (action === "dismiss-toast") {
    state = { ...state, toast: null };
    paint();
    return;
  }
  const failureId = target.dataset.failure;
  if (!failureId || !action) return;
  void actions.act(state, client, failureId, action as EvidenceAction).then((next) => {
    state = next;
    paint();
  });
}

async function pickNetwork(client: ApiClient): Promise<string> {
  for (;;) {
    const networkId = window.prompt("network id to diagnose:");
    if (!networkId) continue;
    try {
      const detail = await client.network(networkId.trim());
      if (!detail.compiled) {
        window.alert(`network ${networkId} is not compiled yet`);
        continue;
      }
      return detail.network_id;
    } catch (error) {
      window.alert(error instanceof ApiError ? error.message : String(error));
    }
  }
}

export async function boot(): Promise<void> {
  const config = bootConfig();
  client = new ApiClient(config);
  root = document.getElementById("app") ?? document.body;
  root.addEventListener("click", onClick);
  const networkId = await pickNetwork(client);
  state = await actions.openSession(state, client, networkId);
  paint();
}

/** Fire-and-poll helper for the repair job panel (console usage too). */
export async function runRepair(networkId: string): Promise<JobStatus> {
  const started = await client.startRecommendation(networkId);
  return client.pollJob(started.job_id);
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  void boot();
}
