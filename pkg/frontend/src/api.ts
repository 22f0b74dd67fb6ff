/**
 * Typed API client. Tracks the latest known state hash and attaches it to
 * mutating requests, so an edit computed against a stale state is rejected
 * by the service with 409 instead of silently diverging.
 */

import type {
  AgreementPayload,
  ClustersPayload,
  CoveragePayload,
  EditCommand,
  HistogramPayload,
  InfluencePayload,
  LearnerRecommendation,
  Overview,
  ProjectionPayload,
  SampleDetail,
  ShotRecommendation,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class StaleStateError extends Error {
  constructor(public current: string) {
    super("state is stale");
  }
}

export class ApiClient {
  stateHash: string | null = null;

  constructor(
    private sessionId: string,
    private fetchImpl: FetchLike = (url, init) => fetch(url, init),
    private base = "/api",
  ) {}

  private url(path: string): string {
    return `${this.base}/sessions/${this.sessionId}${path}`;
  }

  private async getJson<T extends { state_hash: string }>(path: string): Promise<T> {
    const res = await this.fetchImpl(this.url(path));
    if (!res.ok) throw new Error(`GET ${path} -> ${res.status}`);
    const data = (await res.json()) as T;
    this.stateHash = data.state_hash;
    return data;
  }

  private async postJson<T>(path: string, body: unknown, guard: boolean): Promise<T> {
    const payload: Record<string, unknown> = { ...(body as Record<string, unknown>) };
    if (guard && this.stateHash) payload.state_hash = this.stateHash;
    const res = await this.fetchImpl(this.url(path), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
    if (res.status === 409) {
      const detail = (await res.json()) as { detail?: { current?: string } };
      throw new StaleStateError(detail.detail?.current ?? "");
    }
    if (!res.ok) throw new Error(`POST ${path} -> ${res.status}`);
    const data = (await res.json()) as T & { state_hash?: string };
    if (data.state_hash) this.stateHash = data.state_hash;
    return data;
  }

  overview(): Promise<Overview> {
    return this.getJson("/overview");
  }

  agreement(): Promise<AgreementPayload> {
    return this.getJson("/agreement");
  }

  histogram(learner: string, classIndex: number): Promise<HistogramPayload> {
    return this.getJson(
      `/histogram?learner=${encodeURIComponent(learner)}&class=${classIndex}`,
    );
  }

  projection(ratio: number, seed: number): Promise<ProjectionPayload> {
    return this.getJson(`/projection?ratio=${ratio}&seed=${seed}`);
  }

  influence(learner: string): Promise<InfluencePayload> {
    return this.getJson(`/influence?learner=${encodeURIComponent(learner)}`);
  }

  coverage(shot: number): Promise<CoveragePayload> {
    return this.getJson(`/coverage?shot=${shot}`);
  }

  clusters(kind: "learners" | "classes", count: number): Promise<ClustersPayload> {
    return this.getJson(`/clusters?kind=${kind}&count=${count}`);
  }

  sampleDetail(idx: number): Promise<SampleDetail> {
    return this.getJson(`/samples/${idx}`);
  }

  recommendLearners(ratio: number, seed?: number): Promise<LearnerRecommendation> {
    return this.postJson("/recommend/learners", { ratio, seed }, false);
  }

  recommendShots(budget: number, ratio: number, seed?: number): Promise<ShotRecommendation> {
    return this.postJson("/recommend/shots", { budget, ratio, seed }, false);
  }

  /** Apply one edit, guarded by the tracked state hash. */
  edit(command: EditCommand): Promise<{ state_hash: string }> {
    return this.postJson("/edits", { command }, true);
  }

  weightAdjust(
    learnerId: string,
    direction: "increase" | "decrease",
    selection: number[],
  ): Promise<{ new_weight: number; state_hash: string }> {
    return this.postJson(
      "/weight-adjust",
      { learner_id: learnerId, direction, selection },
      true,
    );
  }
}
