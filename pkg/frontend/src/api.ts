// Thin typed client over the documented HTTP endpoints. The console never
// derives hunt truth from anything except these responses.

import type {
  AdvanceResult,
  DecisionResult,
  DispositionResult,
  Hypothesis,
  HuntRow,
  HuntState,
  HypothesisStatus,
  Recommendation,
} from "./types";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

function detailText(body: unknown): string {
  if (body && typeof body === "object" && "detail" in body) {
    const detail = (body as { detail: unknown }).detail;
    return typeof detail === "string" ? detail : JSON.stringify(detail);
  }
  return JSON.stringify(body);
}

export class HuntApi {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: typeof fetch = globalThis.fetch.bind(globalThis),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const resp = await this.fetchImpl(this.baseUrl + path, init);
    const payload: unknown = await resp.json().catch(() => ({}));
    if (!resp.ok) {
      throw new ApiError(resp.status, detailText(payload));
    }
    return payload as T;
  }

  listHunts(): Promise<HuntRow[]> {
    return this.request("GET", "/hunts");
  }

  state(huntId: string): Promise<HuntState> {
    return this.request("GET", `/hunts/${huntId}/state`);
  }

  hypotheses(huntId: string, status?: HypothesisStatus): Promise<Hypothesis[]> {
    const query = status ? `?status=${status}` : "";
    return this.request("GET", `/hunts/${huntId}/hypotheses${query}`);
  }

  advance(huntId: string, mode: "step" | "run"): Promise<AdvanceResult> {
    return this.request("POST", `/hunts/${huntId}/advance`, { mode });
  }

  decide(
    huntId: string,
    hypothesisId: string,
    verdict: "accepted" | "rejected",
    analyst: string,
  ): Promise<DecisionResult> {
    return this.request("POST", `/hunts/${huntId}/hypotheses/${hypothesisId}/decision`, {
      verdict,
      analyst,
    });
  }

  recommendations(huntId: string): Promise<Recommendation[]> {
    return this.request("GET", `/hunts/${huntId}/recommendations`);
  }

  dispose(
    huntId: string,
    recId: string,
    status: "approved" | "declined",
    analyst: string,
  ): Promise<DispositionResult> {
    return this.request("POST", `/hunts/${huntId}/recommendations/${recId}/disposition`, {
      status,
      analyst,
    });
  }
}
