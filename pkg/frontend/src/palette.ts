/** Deterministic class palette keyed by class index. */

const BASE = [
  "#4e79a7",
  "#f28e2b",
  "#59a14f",
  "#e15759",
  "#b07aa1",
  "#76b7b2",
  "#edc948",
  "#ff9da7",
  "#9c755f",
  "#bab0ac",
];

export const GRAY = "#9e9e9e";

export function classColor(classIndex: number): string {
  if (classIndex < 0) return GRAY;
  if (classIndex < BASE.length) return BASE[classIndex];
  // Deterministic fallback for large class counts: golden-angle hue walk.
  const hue = (classIndex * 137.508) % 360;
  return `hsl(${hue.toFixed(1)}, 55%, 52%)`;
}

/** Darken a hex/hsl color toward black by a factor in [0, 1]. */
export function shade(color: string, factor: number): string {
  if (color.startsWith("#")) {
    const n = parseInt(color.slice(1), 16);
    const f = Math.max(0, Math.min(1, 1 - factor));
    const r = Math.round(((n >> 16) & 255) * f);
    const g = Math.round(((n >> 8) & 255) * f);
    const b = Math.round((n & 255) * f);
    return `rgb(${r}, ${g}, ${b})`;
  }
  return color;
}
