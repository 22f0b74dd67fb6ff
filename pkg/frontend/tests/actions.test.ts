/**
 * Mutation gestures must issue exactly the specified endpoint calls, and a
 * 409 (stale state) must never mutate the session: the controller refreshes
 * and offers a retry instead.
 */

import { describe, expect, it } from "vitest";

import { ApiClient, StaleStateError } from "../src/api.js";
import { App, type AppElements } from "../src/app.js";
import { HASH, overview } from "./fixtures.js";

interface Call {
  url: string;
  method: string;
  body: Record<string, unknown> | undefined;
}

function mockService(
  respond: (call: Call) => { status?: number; data: unknown } | undefined,
) {
  const calls: Call[] = [];
  const fetchImpl = async (url: string, init?: RequestInit) => {
    const call: Call = {
      url,
      method: init?.method ?? "GET",
      body: init?.body ? JSON.parse(String(init.body)) : undefined,
    };
    calls.push(call);
    const out = respond(call) ?? { data: { state_hash: HASH } };
    return new Response(JSON.stringify(out.data), {
      status: out.status ?? 200,
      headers: { "content-type": "application/json" },
    });
  };
  return { calls, fetchImpl };
}

function fakeElements(): AppElements {
  const el = () =>
    ({ textContent: "", onclick: null }) as unknown as HTMLElement;
  return {
    matrix: el(),
    scatter: el(),
    detail: el(),
    recommendations: el(),
    footer: el(),
    banner: el(),
  };
}

class HeadlessApp extends App {
  async renderAll(): Promise<void> {
    // rendering is exercised by the view tests; actions run headless
  }
}

function makeApp(respond: Parameters<typeof mockService>[0]) {
  const { calls, fetchImpl } = mockService(respond);
  const api = new ApiClient("s1", fetchImpl);
  const app = new HeadlessApp(api, fakeElements());
  return { app, api, calls };
}

const okOverview = { data: overview };

describe("gesture -> endpoint mapping", () => {
  it("weight up issues POST weight-adjust with the lasso as S1", async () => {
    const { app, calls } = makeApp((call) => {
      if (call.url.endsWith("/overview")) return okOverview;
      if (call.url.endsWith("/weight-adjust"))
        return { data: { new_weight: 1.2, state_hash: HASH } };
      return undefined;
    });
    await app.refresh();
    app.selection = [3, 4, 7];
    await app.adjustWeight("L0", "increase");
    const adjust = calls.filter((c) => c.url.endsWith("/weight-adjust"));
    expect(adjust).toHaveLength(1);
    expect(adjust[0].method).toBe("POST");
    expect(adjust[0].body).toMatchObject({
      learner_id: "L0",
      direction: "increase",
      selection: [3, 4, 7],
    });
  });

  it("shot checkbox toggles issue add_shot / remove_shot edit commands", async () => {
    const { app, calls } = makeApp((call) => {
      if (call.url.endsWith("/overview")) return okOverview;
      return undefined;
    });
    await app.refresh();
    await app.toggleShot(7, 2); // not a shot in the fixture -> add
    await app.toggleShot(0, null); // shot 0 exists -> remove
    const edits = calls.filter((c) => c.url.endsWith("/edits"));
    expect(edits.map((e) => e.body?.command)).toEqual([
      { kind: "add_shot", sample: 7, class: 2 },
      { kind: "remove_shot", sample: 0 },
    ]);
  });

  it("Recommend Shot button calls the shots endpoint with the budget", async () => {
    const { app, calls } = makeApp((call) => {
      if (call.url.endsWith("/overview")) return okOverview;
      if (call.url.endsWith("/recommend/shots"))
        return {
          data: {
            state_hash: HASH,
            recommended_sample_indices: [0, 5, 9],
            to_add: [9],
            to_remove: [],
            budget: 3,
            seed: 0,
          },
        };
      return undefined;
    });
    await app.refresh();
    await app.recommendShots(3);
    const rec = calls.filter((c) => c.url.endsWith("/recommend/shots"));
    expect(rec).toHaveLength(1);
    expect(rec[0].body).toMatchObject({ budget: 3 });
    expect(app.shotRec?.to_add).toEqual([9]);
  });

  it("Recommend Learner applies the recommendation through set_learner edits", async () => {
    const { app, calls } = makeApp((call) => {
      if (call.url.endsWith("/overview")) return okOverview;
      if (call.url.endsWith("/recommend/learners"))
        return {
          data: { state_hash: HASH, selected_learner_ids: ["L0"] },
        };
      return undefined;
    });
    await app.refresh();
    await app.recommendLearners();
    const edits = calls.filter((c) => c.url.endsWith("/edits"));
    // fixture has L0 and L1 selected; recommendation keeps only L0
    expect(edits.map((e) => e.body?.command)).toEqual([
      { kind: "set_learner", learner_id: "L1", selected: false },
    ]);
  });

  it("mutations re-fetch the overview afterwards", async () => {
    const { app, calls } = makeApp((call) => {
      if (call.url.endsWith("/overview")) return okOverview;
      return undefined;
    });
    await app.refresh();
    const before = calls.filter((c) => c.url.endsWith("/overview")).length;
    await app.undo();
    const after = calls.filter((c) => c.url.endsWith("/overview")).length;
    expect(after).toBe(before + 1);
  });
});

describe("stale-state safety", () => {
  it("edits carry the tracked state hash", async () => {
    const { app, calls } = makeApp((call) => {
      if (call.url.endsWith("/overview")) return okOverview;
      return undefined;
    });
    await app.refresh();
    await app.toggleShot(9, 1);
    const edit = calls.find((c) => c.url.endsWith("/edits"));
    expect(edit?.body?.state_hash).toBe(HASH);
  });

  it("a 409 never mutates: the app refreshes and surfaces a retry prompt", async () => {
    const newHash = "b".repeat(32);
    let rejected = 0;
    const { app, calls } = makeApp((call) => {
      if (call.url.endsWith("/overview"))
        return { data: { ...overview, state_hash: newHash } };
      if (call.url.endsWith("/edits")) {
        rejected += 1;
        return {
          status: 409,
          data: { detail: { code: "stale_state", current: newHash } },
        };
      }
      return undefined;
    });
    app.api.stateHash = HASH; // stale knowledge from an earlier load
    await app.toggleShot(4, 0);
    expect(rejected).toBe(1);
    // refreshed: the client now tracks the service's current hash
    expect(app.api.stateHash).toBe(newHash);
    expect(app.retryPrompt).not.toBeNull();
    const overviews = calls.filter((c) => c.url.endsWith("/overview"));
    expect(overviews.length).toBeGreaterThan(0);
  });

  it("StaleStateError carries the service's current hash", async () => {
    const { api } = makeApp((call) => {
      if (call.url.endsWith("/edits"))
        return {
          status: 409,
          data: { detail: { code: "stale_state", current: "c".repeat(32) } },
        };
      return undefined;
    });
    api.stateHash = HASH;
    await expect(api.edit({ kind: "undo" })).rejects.toThrowError(
      StaleStateError,
    );
  });
});
