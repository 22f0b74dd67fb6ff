/**
 * Learner matrix view model: rows are learners (grouped into expandable
 * clusters), the first column encodes the overall prediction difference
 * against the ensemble, and each class column carries a three-segment
 * stacked bar (learner-only / both / ensemble-only) plus paired four-bin
 * confidence histograms for the learner and the ensemble.
 *
 * Every number in the view model is copied verbatim from API payloads; the
 * builders hold no algorithmic state.
 */

import { classColor, shade } from "./palette.js";
import type { AgreementPayload, ClustersPayload, HistogramPayload, Overview } from "./types.js";

export interface HistogramBarVM {
  count: number;
  /** true when count is 0: drawn as the thin darker baseline bar only */
  baselineOnly: boolean;
}

export interface CellVM {
  classIndex: number;
  color: string;
  /** segment lengths in samples, fixed order: learner-only, both, ensemble-only */
  segments: [number, number, number];
  total: number;
  learnerHist: HistogramBarVM[];
  ensembleHist: HistogramBarVM[];
}

export interface RowVM {
  learnerId: string;
  selected: boolean;
  weight: number;
  overallDiff: number;
  /** 0..1, darkness of the first-column cell (monotone in overallDiff) */
  diffShade: number;
  cells: CellVM[];
  clusterLabel: number | null;
}

export interface MatrixVM {
  stateHash: string;
  classes: string[];
  rows: RowVM[];
  /** cluster label -> learner ids, for collapse/expand by double-click */
  clusters: Map<number, string[]>;
}

function toBars(counts: number[]): HistogramBarVM[] {
  return counts.map((count) => ({ count, baselineOnly: count === 0 }));
}

export function buildMatrix(
  overview: Overview,
  agreement: AgreementPayload,
  histograms: Map<string, HistogramPayload[]>, // learner id -> per-class payloads
  clusters: ClustersPayload | null = null,
): MatrixVM {
  const maxDiff = Math.max(
    1,
    ...agreement.learners.map((l) => l.overall_diff),
  );
  const clusterOf = new Map<string, number>();
  if (clusters) {
    clusters.items.forEach((id, i) => clusterOf.set(id, clusters.labels[i]));
  }
  const rows: RowVM[] = [];
  for (const entry of agreement.learners) {
    const learner = overview.learners.find((l) => l.id === entry.learner_id);
    if (!learner) continue;
    const perClass = histograms.get(entry.learner_id) ?? [];
    const cells: CellVM[] = entry.per_class.map((triple, c) => ({
      classIndex: c,
      color: classColor(c),
      segments: [triple[0], triple[1], triple[2]],
      total: triple[0] + triple[1] + triple[2],
      learnerHist: toBars(perClass[c]?.learner ?? [0, 0, 0, 0]),
      ensembleHist: toBars(perClass[c]?.ensemble ?? [0, 0, 0, 0]),
    }));
    rows.push({
      learnerId: entry.learner_id,
      selected: learner.selected,
      weight: learner.weight,
      overallDiff: entry.overall_diff,
      diffShade: entry.overall_diff / maxDiff,
      cells,
      clusterLabel: clusterOf.get(entry.learner_id) ?? null,
    });
  }
  const clusterMap = new Map<number, string[]>();
  for (const row of rows) {
    if (row.clusterLabel !== null) {
      const list = clusterMap.get(row.clusterLabel) ?? [];
      list.push(row.learnerId);
      clusterMap.set(row.clusterLabel, list);
    }
  }
  return {
    stateHash: agreement.state_hash,
    classes: overview.classes,
    rows,
    clusters: clusterMap,
  };
}

// ---------------------------------------------------------------------------
// SVG mounting (browser only)
// ---------------------------------------------------------------------------

const SVG_NS = "http://www.w3.org/2000/svg";
const CELL_W = 96;
const CELL_H = 46;
const DIFF_W = 34;
const LABEL_W = 120;

export interface MatrixHandlers {
  onClassBarClick?: (learnerId: string, classIndex: number) => void;
  onRowDoubleClick?: (clusterLabel: number | null) => void;
  onWeightUp?: (learnerId: string) => void;
  onWeightDown?: (learnerId: string) => void;
}

function svgEl<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string | number>,
): SVGElementTagNameMap[K] {
  const el = document.createElementNS(SVG_NS, tag);
  for (const [k, v] of Object.entries(attrs)) el.setAttribute(k, String(v));
  return el;
}

function mountHistogram(
  g: SVGGElement,
  bars: HistogramBarVM[],
  x: number,
  y: number,
  width: number,
  height: number,
  color: string,
): void {
  const maxCount = Math.max(1, ...bars.map((b) => b.count));
  const bw = width / bars.length;
  bars.forEach((bar, i) => {
    const bx = x + i * bw;
    if (bar.baselineOnly) {
      // zero-count bin: thin darker baseline marker on the x-axis
      g.appendChild(
        svgEl("rect", {
          x: bx + 1,
          y: y + height - 1.5,
          width: bw - 2,
          height: 1.5,
          fill: shade(color, 0.45),
          class: "hist-baseline",
        }),
      );
    } else {
      const h = (bar.count / maxCount) * (height - 2);
      g.appendChild(
        svgEl("rect", {
          x: bx + 1,
          y: y + height - h,
          width: bw - 2,
          height: h,
          fill: color,
          class: "hist-bar",
          "data-count": bar.count,
        }),
      );
    }
  });
}

export function mountMatrix(
  vm: MatrixVM,
  container: HTMLElement,
  handlers: MatrixHandlers = {},
  collapsed: Set<number> = new Set(),
): void {
  container.textContent = "";
  const visible = vm.rows.filter(
    (r) => r.clusterLabel === null || !collapsed.has(r.clusterLabel),
  );
  const width = LABEL_W + DIFF_W + vm.classes.length * CELL_W + 8;
  const height = (visible.length + 1) * CELL_H + 8;
  const svg = svgEl("svg", { width, height, class: "matrix" });

  vm.classes.forEach((name, c) => {
    const tx = LABEL_W + DIFF_W + c * CELL_W + CELL_W / 2;
    const label = svgEl("text", { x: tx, y: CELL_H - 18, class: "col-label" });
    label.textContent = name;
    svg.appendChild(label);
  });

  const maxTotal = Math.max(
    1,
    ...visible.flatMap((r) => r.cells.map((cell) => cell.total)),
  );

  visible.forEach((row, r) => {
    const y = (r + 1) * CELL_H;
    const g = svgEl("g", { class: "row", "data-learner": row.learnerId });
    g.addEventListener("dblclick", () =>
      handlers.onRowDoubleClick?.(row.clusterLabel),
    );

    const label = svgEl("text", { x: 4, y: y + 22, class: "row-label" });
    label.textContent = `${row.learnerId}${row.selected ? "" : " (off)"}`;
    g.appendChild(label);

    const up = svgEl("text", { x: LABEL_W - 34, y: y + 16, class: "weight-btn" });
    up.textContent = "▲";
    up.addEventListener("click", () => handlers.onWeightUp?.(row.learnerId));
    g.appendChild(up);
    const down = svgEl("text", { x: LABEL_W - 34, y: y + 34, class: "weight-btn" });
    down.textContent = "▼";
    down.addEventListener("click", () => handlers.onWeightDown?.(row.learnerId));
    g.appendChild(down);

    // first column: overall difference, darker = larger
    g.appendChild(
      svgEl("rect", {
        x: LABEL_W,
        y: y + 4,
        width: DIFF_W - 6,
        height: CELL_H - 8,
        fill: shade("#dddddd", row.diffShade * 0.85),
        class: "diff-cell",
        "data-diff": row.overallDiff,
      }),
    );

    row.cells.forEach((cell, c) => {
      const cx = LABEL_W + DIFF_W + c * CELL_W;
      const cg = svgEl("g", {
        class: "cell",
        "data-class": cell.classIndex,
      }) as SVGGElement;
      // stacked bar: learner-only, both, ensemble-only
      const barY = y + 6;
      const unit = (CELL_W - 10) / maxTotal;
      let xOff = cx + 4;
      cell.segments.forEach((count, s) => {
        const w = count * unit;
        const rect = svgEl("rect", {
          x: xOff,
          y: barY,
          width: Math.max(0, w),
          height: 10,
          fill: s === 1 ? cell.color : shade(cell.color, s === 0 ? 0.35 : -0.25),
          opacity: s === 2 ? 0.55 : 1.0,
          class: `seg seg-${s}`,
          "data-count": count,
        });
        cg.appendChild(rect);
        xOff += w;
      });
      cg.addEventListener("click", () =>
        handlers.onClassBarClick?.(row.learnerId, cell.classIndex),
      );
      mountHistogram(cg, cell.learnerHist, cx + 4, y + 18, (CELL_W - 10) / 2, 22, cell.color);
      mountHistogram(
        cg,
        cell.ensembleHist,
        cx + 4 + (CELL_W - 10) / 2 + 2,
        y + 18,
        (CELL_W - 10) / 2 - 2,
        22,
        shade(cell.color, 0.3),
      );
      g.appendChild(cg);
    });
    svg.appendChild(g);
  });
  container.appendChild(svg);
}
