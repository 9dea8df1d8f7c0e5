// Console controller: polls the service, renders the view model, and turns
// clicks into the documented mutations. All state shown derives from the
// last API responses; errors surface in an inline banner without blocking.

import { ApiError, HuntApi } from "./api";
import type { HuntState } from "./types";
import {
  bundlePayload,
  renderQueue,
  renderRecommendations,
  renderSummary,
  renderTimeline,
  triggerDownload,
} from "./view";

export interface ConsoleOptions {
  baseUrl?: string;
  analyst?: string;
  pollMs?: number;
  fetchImpl?: typeof fetch;
}

export class ConsoleApp {
  readonly api: HuntApi;
  readonly analyst: string;
  huntId: string | null = null;
  state: HuntState | null = null;

  private readonly root: HTMLElement;
  private readonly pollMs: number;
  private pollTimer: ReturnType<typeof setInterval> | null = null;
  private readonly inflight = new Set<string>();
  private ops: Promise<unknown> = Promise.resolve();
  private errorText: string | null = null;
  private readonly openEvidence = new Set<string>();

  constructor(root: HTMLElement, options: ConsoleOptions = {}) {
    this.root = root;
    this.analyst = options.analyst ?? "console";
    this.pollMs = options.pollMs ?? 2000;
    this.api = new HuntApi(options.baseUrl ?? "", options.fetchImpl);
    this.root.addEventListener("click", (event) => this.onClick(event));
  }

  async init(): Promise<void> {
    const hunts = await this.api.listHunts();
    const first = hunts[0];
    if (first) {
      this.huntId = first.id;
      await this.refresh();
    } else {
      this.render();
    }
  }

  async selectHunt(huntId: string): Promise<void> {
    this.huntId = huntId;
    this.openEvidence.clear();
    await this.refresh();
  }

  async refresh(): Promise<void> {
    if (!this.huntId) return;
    this.state = await this.api.state(this.huntId);
    this.render();
  }

  async advance(mode: "step" | "run"): Promise<void> {
    if (!this.huntId) return;
    await this.guarded(`advance:${mode}`, async () => {
      await this.api.advance(this.huntId!, mode);
      await this.refresh();
    });
  }

  async decide(hypothesisId: string, verdict: "accepted" | "rejected"): Promise<void> {
    if (!this.huntId) return;
    await this.guarded(`decide:${hypothesisId}`, async () => {
      await this.api.decide(this.huntId!, hypothesisId, verdict, this.analyst);
      // let the machine absorb the new knowledge before re-rendering
      await this.api.advance(this.huntId!, "run");
      await this.refresh();
    });
  }

  async dispose(recId: string, status: "approved" | "declined"): Promise<void> {
    if (!this.huntId) return;
    await this.guarded(`dispose:${recId}`, async () => {
      const rec = this.state?.recommendations.find((r) => r.id === recId);
      await this.api.dispose(this.huntId!, recId, status, this.analyst);
      if (rec && rec.action === "SHARE" && status === "approved" && this.state) {
        const bundle = bundlePayload(rec, this.state);
        triggerDownload(document, bundle.filename, bundle.json);
      }
      await this.refresh();
    });
  }

  startPolling(): void {
    if (this.pollTimer !== null) return;
    this.pollTimer = setInterval(() => {
      this.ops = this.ops.then(() => this.refresh()).catch((err) => this.fail(err));
    }, this.pollMs);
  }

  stopPolling(): void {
    if (this.pollTimer !== null) {
      clearInterval(this.pollTimer);
      this.pollTimer = null;
    }
  }

  /** Resolves once every operation queued so far has settled. */
  flush(): Promise<unknown> {
    return this.ops;
  }

  // a second click on the same control while its request is in flight
  // is a no-op; conflicts mean someone else decided first, so re-read
  private async guarded(key: string, op: () => Promise<void>): Promise<void> {
    if (this.inflight.has(key)) return;
    this.inflight.add(key);
    try {
      await op();
      this.errorText = null;
      this.render();
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.errorText = `superseded: ${err.message}`;
        await this.refresh().catch(() => undefined);
        this.render();
      } else {
        this.fail(err);
      }
    } finally {
      this.inflight.delete(key);
    }
  }

  private fail(err: unknown): void {
    this.errorText = err instanceof Error ? err.message : String(err);
    this.render();
  }

  private onClick(event: Event): void {
    const target = (event.target as HTMLElement).closest?.("button");
    if (!(target instanceof HTMLButtonElement)) return;
    const d = target.dataset;
    let op: Promise<void> | null = null;
    if (d.advance === "step" || d.advance === "run") {
      op = this.advance(d.advance);
    } else if (d.decide && (d.verdict === "accepted" || d.verdict === "rejected")) {
      op = this.decide(d.decide, d.verdict);
    } else if (d.dispose && (d.status === "approved" || d.status === "declined")) {
      op = this.dispose(d.dispose, d.status);
    } else if (d.toggleEvidence) {
      this.toggleEvidence(d.toggleEvidence);
    }
    if (op) {
      this.ops = this.ops.then(() => op).catch(() => undefined);
    }
  }

  private toggleEvidence(hypothesisId: string): void {
    if (this.openEvidence.has(hypothesisId)) {
      this.openEvidence.delete(hypothesisId);
    } else {
      this.openEvidence.add(hypothesisId);
    }
    this.render();
  }

  render(): void {
    this.root.textContent = "";
    const banner = document.createElement("p");
    banner.className = "error-banner";
    banner.textContent = this.errorText ?? "";
    if (!this.errorText) banner.classList.add("hidden");
    this.root.appendChild(banner);

    if (!this.state) {
      const empty = document.createElement("p");
      empty.className = "empty";
      empty.textContent = "No hunt selected.";
      this.root.appendChild(empty);
      return;
    }
    this.root.appendChild(renderSummary(this.state));
    const pending = this.state.hypotheses.filter((h) => h.status === "pending");
    const rejected = this.state.hypotheses.filter((h) => h.status === "rejected");
    this.root.appendChild(renderQueue(pending));
    this.root.appendChild(renderTimeline(this.state.facts, rejected));
    this.root.appendChild(renderRecommendations(this.state.recommendations));
    for (const hypId of this.openEvidence) {
      const drill = this.root.querySelector(`[data-evidence-for="${hypId}"]`);
      drill?.classList.remove("hidden");
    }
  }
}
