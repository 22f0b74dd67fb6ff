/**
 * Application controller: wires user gestures to API calls and re-renders
 * from fresh payloads after every mutation. The UI holds no algorithmic
 * state; everything rendered is traceable to a payload field. A 409 from
 * the service (stale state) triggers a refresh and a retry prompt instead
 * of mutating with stale data.
 */

import { ApiClient, StaleStateError } from "./api.js";
import { buildMatrix, mountMatrix } from "./matrixView.js";
import { buildScatter, mountScatter } from "./scatterView.js";
import { classColor } from "./palette.js";
import type {
  CoveragePayload,
  InfluencePayload,
  Overview,
  ShotRecommendation,
} from "./types.js";

export interface AppElements {
  matrix: HTMLElement;
  scatter: HTMLElement;
  detail: HTMLElement;
  recommendations: HTMLElement;
  footer: HTMLElement;
  banner: HTMLElement;
}

export class App {
  overview: Overview | null = null;
  selection: number[] = [];
  focusedLearner: string | null = null;
  influence: InfluencePayload | null = null;
  coverage: CoveragePayload | null = null;
  shotRec: ShotRecommendation | null = null;
  collapsedClusters = new Set<number>();
  projectionRatio = 0.3;
  projectionSeed = 1;
  retryPrompt: (() => Promise<void>) | null = null;

  constructor(
    public api: ApiClient,
    private el: AppElements,
  ) {}

  async refresh(): Promise<void> {
    this.overview = await this.api.overview();
    await this.renderAll();
  }

  private async guarded(action: () => Promise<void>): Promise<void> {
    try {
      await action();
      this.retryPrompt = null;
      this.el.banner.textContent = "";
      await this.refresh();
    } catch (err) {
      if (err instanceof StaleStateError) {
        // never mutate on stale data: re-sync, then offer a retry
        await this.refresh();
        this.retryPrompt = action;
        this.el.banner.textContent =
          "Session changed since this view was loaded; it has been refreshed. Click to retry the action.";
        this.el.banner.onclick = () => {
          this.el.banner.textContent = "";
          void this.guarded(action);
        };
      } else {
        this.el.banner.textContent = `Request failed: ${String(err)}`;
      }
    }
  }

  // -- gestures --------------------------------------------------------

  recommendLearners(): Promise<void> {
    return this.guarded(async () => {
      const rec = await this.api.recommendLearners(1.0);
      for (const learner of this.overview?.learners ?? []) {
        const want = rec.selected_learner_ids.includes(learner.id);
        if (want !== learner.selected) {
          await this.api.edit({
            kind: "set_learner",
            learner_id: learner.id,
            selected: want,
          });
        }
      }
    });
  }

  recommendShots(budget: number): Promise<void> {
    return this.guarded(async () => {
      this.shotRec = await this.api.recommendShots(budget, this.projectionRatio);
    });
  }

  toggleShot(sample: number, classIndex: number | null): Promise<void> {
    return this.guarded(async () => {
      const isShot = this.overview?.shots.some((s) => s.sample === sample);
      if (isShot) {
        await this.api.edit({ kind: "remove_shot", sample });
      } else {
        await this.api.edit({
          kind: "add_shot",
          sample,
          class: classIndex ?? 0,
        });
      }
    });
  }

  adjustWeight(learnerId: string, direction: "increase" | "decrease"): Promise<void> {
    return this.guarded(async () => {
      await this.api.weightAdjust(learnerId, direction, this.selection);
    });
  }

  undo(): Promise<void> {
    return this.guarded(async () => {
      await this.api.edit({ kind: "undo" });
    });
  }

  async focusLearner(learnerId: string): Promise<void> {
    this.focusedLearner = learnerId;
    this.influence = await this.api.influence(learnerId);
    await this.renderAll();
  }

  async focusShot(sample: number): Promise<void> {
    this.coverage = await this.api.coverage(sample);
    await this.renderAll();
  }

  async setSelection(samples: number[]): Promise<void> {
    this.selection = samples;
    await this.renderDetail();
  }

  // -- rendering -------------------------------------------------------

  async renderAll(): Promise<void> {
    if (!this.overview) return;
    const agreement = await this.api.agreement();
    const selected = this.overview.learners.filter((l) => l.selected);
    const histograms = new Map<string, import("./types.js").HistogramPayload[]>();
    for (const learner of selected) {
      const per = [];
      for (let c = 0; c < this.overview.classes.length; c++) {
        per.push(await this.api.histogram(learner.id, c));
      }
      histograms.set(learner.id, per);
    }
    let clusters = null;
    if (selected.length > 1) {
      clusters = await this.api.clusters(
        "learners",
        Math.min(4, selected.length),
      );
    }
    const matrixVM = buildMatrix(this.overview, agreement, histograms, clusters);
    mountMatrix(matrixVM, this.el.matrix, {
      onClassBarClick: (learnerId, classIndex) =>
        void this.highlightClassSamples(learnerId, classIndex),
      onRowDoubleClick: (label) => {
        if (label === null) return;
        if (this.collapsedClusters.has(label)) this.collapsedClusters.delete(label);
        else this.collapsedClusters.add(label);
        void this.renderAll();
      },
      onWeightUp: (id) => void this.adjustWeight(id, "increase"),
      onWeightDown: (id) => void this.adjustWeight(id, "decrease"),
    }, this.collapsedClusters);

    const projection = await this.api.projection(
      this.projectionRatio,
      this.projectionSeed,
    );
    const scatterVM = buildScatter(
      projection,
      this.influence,
      this.coverage,
      new Set(this.selection),
    );
    mountScatter(scatterVM, this.el.scatter, {
      onShotClick: (sample) => void this.focusShot(sample),
      onLasso: (samples) => void this.setSelection(samples),
    });

    this.renderRecommendations();
    await this.renderDetail();
    this.el.footer.textContent =
      `state ${this.api.stateHash ?? "?"} | ` +
      `accuracy ${this.overview.accuracy?.toFixed(3) ?? "n/a"} | ` +
      `${this.overview.shots.length} shots`;
  }

  private async highlightClassSamples(
    learnerId: string,
    classIndex: number,
  ): Promise<void> {
    // samples the learner argmax-assigns to the class: derived server-side
    // numbers are not available per-sample, so reuse the projection payload
    const projection = await this.api.projection(
      this.projectionRatio,
      this.projectionSeed,
    );
    this.selection = projection.samples
      .filter((s) => s.class === classIndex)
      .map((s) => s.sample);
    void learnerId;
    await this.renderAll();
  }

  private renderRecommendations(): void {
    const host = this.el.recommendations;
    host.textContent = "";
    if (!this.shotRec) return;
    const title = document.createElement("div");
    title.className = "rec-title";
    title.textContent =
      `Recommended shots (budget ${this.shotRec.budget}): ` +
      `${this.shotRec.to_add.length} to add, ${this.shotRec.to_remove.length} to remove`;
    host.appendChild(title);
    for (const sample of this.shotRec.to_remove) {
      const chip = document.createElement("button");
      chip.className = "chip chip-remove"; // green-bordered removal candidate
      chip.textContent = `remove #${sample}`;
      chip.onclick = () => void this.toggleShot(sample, null);
      host.appendChild(chip);
    }
    for (const sample of this.shotRec.to_add) {
      const chip = document.createElement("button");
      chip.className = "chip chip-add";
      chip.textContent = `add #${sample}`;
      chip.onclick = () => void this.promptAdd(sample);
      host.appendChild(chip);
    }
  }

  private async promptAdd(sample: number): Promise<void> {
    const classes = this.overview?.classes ?? [];
    const answer = window.prompt(
      `Class for sample ${sample} (0..${classes.length - 1}: ${classes.join(", ")})`,
    );
    if (answer === null) return;
    await this.toggleShot(sample, parseInt(answer, 10) || 0);
  }

  private async renderDetail(): Promise<void> {
    const host = this.el.detail;
    host.textContent = "";
    for (const sample of this.selection.slice(0, 12)) {
      const detail = await this.api.sampleDetail(sample);
      const card = document.createElement("div");
      card.className = "sample-card";
      const img = document.createElement("div");
      img.className = "thumb";
      if (detail.image) {
        const tag = document.createElement("img");
        tag.src = detail.image;
        tag.onerror = () => {
          tag.remove();
          img.textContent = `#${sample}`;
        };
        img.appendChild(tag);
      } else {
        img.textContent = `#${sample}`;
      }
      card.appendChild(img);
      const bars = document.createElement("div");
      bars.className = "dist-bars";
      (detail.ensemble ?? []).forEach((p, c) => {
        const bar = document.createElement("div");
        bar.className = "dist-bar";
        bar.style.width = `${Math.round(p * 100)}%`;
        bar.style.background = classColor(c);
        bar.title = `${this.overview?.classes[c]}: ${p.toFixed(3)}`;
        bars.appendChild(bar);
      });
      card.appendChild(bars);
      const toggle = document.createElement("input");
      toggle.type = "checkbox";
      toggle.checked = detail.is_shot;
      toggle.onclick = () => void this.toggleShot(sample, detail.shot_class);
      card.appendChild(toggle);
      host.appendChild(card);
    }
  }
}

export function bootstrap(): void {
  const el: AppElements = {
    matrix: document.getElementById("matrix")!,
    scatter: document.getElementById("scatter")!,
    detail: document.getElementById("detail")!,
    recommendations: document.getElementById("recommendations")!,
    footer: document.getElementById("footer")!,
    banner: document.getElementById("banner")!,
  };
  const params = new URLSearchParams(window.location.search);
  let sessionId = params.get("session");
  const start = async () => {
    if (!sessionId) {
      const manifest = window.prompt("Manifest path on the server:");
      if (!manifest) return;
      const res = await fetch("/api/sessions", {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ manifest_path: manifest, seed: 0 }),
      });
      sessionId = ((await res.json()) as { session_id: string }).session_id;
    }
    const app = new App(new ApiClient(sessionId), el);
    (window as unknown as { app: App }).app = app;
    document.getElementById("btn-rec-learners")!.onclick = () =>
      void app.recommendLearners();
    document.getElementById("btn-rec-shots")!.onclick = () => {
      const budget = parseInt(
        (document.getElementById("budget") as HTMLInputElement).value,
        10,
      );
      void app.recommendShots(budget || 10);
    };
    document.getElementById("btn-undo")!.onclick = () => void app.undo();
    void app.refresh();
  };
  void start();
}

if (typeof document !== "undefined" && document.getElementById("matrix")) {
  bootstrap();
}
