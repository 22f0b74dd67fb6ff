/**
 * Sample scatterplot view model: one glyph per projected sample (star for
 * shots, circle for unlabeled), colored by the ensemble's predicted class,
 * gray when the prediction margin is below 0.2. Optional overlays: coverage
 * (neighbors of a clicked shot, darker class color = higher similarity),
 * learner influence arrows (up/down at |delta| >= 0.2) with a fixed-
 * bandwidth kernel-density shading over the flagged regions, toggled
 * separately for up- and down-flagged points.
 */

import { classColor, GRAY, shade } from "./palette.js";
import type { CoveragePayload, InfluencePayload, ProjectionPayload } from "./types.js";

export const GRAY_MARGIN = 0.2;

export interface GlyphVM {
  sample: number;
  x: number;
  y: number;
  shape: "star" | "circle";
  color: string;
  gray: boolean;
  classIndex: number;
  margin: number;
  arrow: "up" | "down" | null;
  coverageShade: number | null; // 0..1 similarity when coverage overlay active
  selected: boolean;
}

export interface ScatterVM {
  stateHash: string;
  glyphs: GlyphVM[];
  densityUp: { x: number; y: number }[];
  densityDown: { x: number; y: number }[];
}

export function buildScatter(
  projection: ProjectionPayload,
  influence: InfluencePayload | null = null,
  coverage: CoveragePayload | null = null,
  selection: Set<number> = new Set(),
): ScatterVM {
  const up = new Set(influence?.up ?? []);
  const down = new Set(influence?.down ?? []);
  const coverageSim = new Map<number, number>();
  if (coverage) {
    for (const n of coverage.neighbors) coverageSim.set(n.sample, n.similarity);
  }
  const glyphs: GlyphVM[] = projection.samples.map((s) => {
    const gray = s.margin < GRAY_MARGIN;
    return {
      sample: s.sample,
      x: s.x,
      y: s.y,
      shape: s.is_shot ? "star" : "circle",
      color: gray ? GRAY : classColor(s.class),
      gray,
      classIndex: s.class,
      margin: s.margin,
      arrow: up.has(s.sample) ? "up" : down.has(s.sample) ? "down" : null,
      coverageShade: coverageSim.get(s.sample) ?? null,
      selected: selection.has(s.sample),
    };
  });
  return {
    stateHash: projection.state_hash,
    glyphs,
    densityUp: glyphs.filter((g) => g.arrow === "up").map((g) => ({ x: g.x, y: g.y })),
    densityDown: glyphs
      .filter((g) => g.arrow === "down")
      .map((g) => ({ x: g.x, y: g.y })),
  };
}

/** Points inside a lasso polygon (ray casting). */
export function lassoSelect(
  glyphs: { sample: number; x: number; y: number }[],
  polygon: { x: number; y: number }[],
): number[] {
  if (polygon.length < 3) return [];
  const inside = (px: number, py: number): boolean => {
    let hit = false;
    for (let i = 0, j = polygon.length - 1; i < polygon.length; j = i++) {
      const xi = polygon[i].x;
      const yi = polygon[i].y;
      const xj = polygon[j].x;
      const yj = polygon[j].y;
      if (
        yi > py !== yj > py &&
        px < ((xj - xi) * (py - yi)) / (yj - yi) + xi
      ) {
        hit = !hit;
      }
    }
    return hit;
  };
  return glyphs.filter((g) => inside(g.x, g.y)).map((g) => g.sample);
}

/**
 * Fixed-bandwidth Gaussian density on a coarse grid; bandwidth is 3% of the
 * viewport diagonal. Returns cells with normalized intensity for shading.
 */
export function densityGrid(
  points: { x: number; y: number }[],
  viewport: { width: number; height: number },
  gridSize = 24,
): { col: number; row: number; intensity: number }[] {
  if (!points.length) return [];
  const bw = 0.03 * Math.hypot(viewport.width, viewport.height);
  const cells: { col: number; row: number; intensity: number }[] = [];
  let maxI = 0;
  const cw = viewport.width / gridSize;
  const ch = viewport.height / gridSize;
  for (let r = 0; r < gridSize; r++) {
    for (let c = 0; c < gridSize; c++) {
      const cx = (c + 0.5) * cw;
      const cy = (r + 0.5) * ch;
      let v = 0;
      for (const p of points) {
        const d2 = (p.x - cx) ** 2 + (p.y - cy) ** 2;
        v += Math.exp(-d2 / (2 * bw * bw));
      }
      if (v > maxI) maxI = v;
      cells.push({ col: c, row: r, intensity: v });
    }
  }
  return cells
    .map((cell) => ({ ...cell, intensity: maxI > 0 ? cell.intensity / maxI : 0 }))
    .filter((cell) => cell.intensity > 0.05);
}

// ---------------------------------------------------------------------------
// SVG mounting (browser only)
// ---------------------------------------------------------------------------

const SVG_NS = "http://www.w3.org/2000/svg";

function starPath(x: number, y: number, r: number): string {
  const pts: string[] = [];
  for (let i = 0; i < 10; i++) {
    const rad = i % 2 === 0 ? r : r * 0.45;
    const a = (Math.PI / 5) * i - Math.PI / 2;
    pts.push(`${x + rad * Math.cos(a)},${y + rad * Math.sin(a)}`);
  }
  return `M${pts.join("L")}Z`;
}

export interface ScatterHandlers {
  onShotClick?: (sample: number) => void;
  onLasso?: (samples: number[]) => void;
}

export interface ScatterOptions {
  width?: number;
  height?: number;
  showDensityUp?: boolean;
  showDensityDown?: boolean;
}

export function mountScatter(
  vm: ScatterVM,
  container: HTMLElement,
  handlers: ScatterHandlers = {},
  options: ScatterOptions = {},
): void {
  const width = options.width ?? 560;
  const height = options.height ?? 520;
  container.textContent = "";
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("width", String(width));
  svg.setAttribute("height", String(height));
  svg.setAttribute("class", "scatter");

  const xs = vm.glyphs.map((g) => g.x);
  const ys = vm.glyphs.map((g) => g.y);
  const x0 = Math.min(...xs);
  const x1 = Math.max(...xs);
  const y0 = Math.min(...ys);
  const y1 = Math.max(...ys);
  const pad = 18;
  const sx = (v: number) =>
    pad + ((v - x0) / Math.max(1e-9, x1 - x0)) * (width - 2 * pad);
  const sy = (v: number) =>
    pad + ((v - y0) / Math.max(1e-9, y1 - y0)) * (height - 2 * pad);

  for (const [cloud, show, cls] of [
    [vm.densityUp, options.showDensityUp ?? true, "density-up"],
    [vm.densityDown, options.showDensityDown ?? true, "density-down"],
  ] as const) {
    if (!show || !cloud.length) continue;
    const screenPts = cloud.map((p) => ({ x: sx(p.x), y: sy(p.y) }));
    for (const cell of densityGrid(screenPts, { width, height })) {
      const rect = document.createElementNS(SVG_NS, "rect");
      const cw = width / 24;
      const ch = height / 24;
      rect.setAttribute("x", String(cell.col * cw));
      rect.setAttribute("y", String(cell.row * ch));
      rect.setAttribute("width", String(cw));
      rect.setAttribute("height", String(ch));
      rect.setAttribute("fill", "#888888");
      rect.setAttribute("opacity", String(0.25 * cell.intensity));
      rect.setAttribute("class", cls);
      svg.appendChild(rect);
    }
  }

  // circles first so stars render above them
  const ordered = [...vm.glyphs].sort(
    (a, b) => Number(a.shape === "star") - Number(b.shape === "star"),
  );
  for (const g of ordered) {
    const px = sx(g.x);
    const py = sy(g.y);
    let color = g.color;
    if (g.coverageShade !== null) {
      color = shade(classColor(g.classIndex), 0.6 * g.coverageShade);
    }
    let node: SVGElement;
    if (g.shape === "star") {
      node = document.createElementNS(SVG_NS, "path");
      node.setAttribute("d", starPath(px, py, 8));
    } else {
      node = document.createElementNS(SVG_NS, "circle");
      node.setAttribute("cx", String(px));
      node.setAttribute("cy", String(py));
      node.setAttribute("r", "3.4");
    }
    node.setAttribute("fill", color);
    node.setAttribute("class", `glyph ${g.shape}${g.selected ? " selected" : ""}`);
    node.setAttribute("data-sample", String(g.sample));
    if (g.shape === "star" && handlers.onShotClick) {
      node.addEventListener("click", () => handlers.onShotClick?.(g.sample));
    }
    svg.appendChild(node);
    if (g.arrow) {
      const arrow = document.createElementNS(SVG_NS, "text");
      arrow.setAttribute("x", String(px));
      arrow.setAttribute("y", String(py - 6));
      arrow.setAttribute("class", `arrow arrow-${g.arrow}`);
      arrow.textContent = g.arrow === "up" ? "▲" : "▼";
      svg.appendChild(arrow);
    }
  }

  // lasso: freehand polygon while the pointer is down
  let lasso: { x: number; y: number }[] | null = null;
  let path: SVGPathElement | null = null;
  svg.addEventListener("pointerdown", (ev) => {
    lasso = [{ x: ev.offsetX, y: ev.offsetY }];
    path = document.createElementNS(SVG_NS, "path");
    path.setAttribute("class", "lasso");
    svg.appendChild(path);
  });
  svg.addEventListener("pointermove", (ev) => {
    if (!lasso || !path) return;
    lasso.push({ x: ev.offsetX, y: ev.offsetY });
    path.setAttribute(
      "d",
      "M" + lasso.map((p) => `${p.x},${p.y}`).join("L"),
    );
  });
  svg.addEventListener("pointerup", () => {
    if (lasso && lasso.length >= 3) {
      const screen = vm.glyphs.map((g) => ({
        sample: g.sample,
        x: sx(g.x),
        y: sy(g.y),
      }));
      handlers.onLasso?.(lassoSelect(screen, lasso));
    }
    path?.remove();
    lasso = null;
    path = null;
  });

  container.appendChild(svg);
}
