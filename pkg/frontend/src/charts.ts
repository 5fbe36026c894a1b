/** Inline SVG charts: proportion sparklines and the topic-embedding
 * scatter with the white-to-red negativity palette. */

import { svgEl } from "./dom.js";

export function sparkline(values: number[], width = 120,
                          height = 28): SVGElement {
  const svg = svgEl("svg", {
    width, height, viewBox: `0 0 ${width} ${height}`,
    class: "sparkline", role: "img",
  });
  if (values.length === 0) return svg;
  const max = Math.max(...values, 1e-12);
  const step = values.length > 1 ? width / (values.length - 1) : 0;
  const points = values
    .map((v, i) => `${(i * step).toFixed(1)},` +
      `${(height - 2 - (height - 4) * (v / max)).toFixed(1)}`)
    .join(" ");
  svg.append(svgEl("polyline", { points, fill: "none",
                                 stroke: "currentColor",
                                 "stroke-width": 1.5 }));
  return svg;
}

/** Negativity to fill color: 0 -> white, saturates toward red. */
export function negativityColor(negative: number): string {
  const clamped = Math.max(0, Math.min(1, negative));
  const level = Math.round(255 * (1 - clamped));
  return `rgb(255, ${level}, ${level})`;
}

export interface ScatterPoint {
  id: number;
  x: number;
  y: number;
  negative: number;
  selected: boolean;
}

export function embeddingScatter(points: ScatterPoint[],
                                 onPick: (id: number) => void,
                                 size = 220): SVGElement {
  const svg = svgEl("svg", {
    width: size, height: size, viewBox: `0 0 ${size} ${size}`,
    class: "embedding", role: "img",
  });
  if (!points.length) return svg;
  const xs = points.map((p) => p.x);
  const ys = points.map((p) => p.y);
  const span = Math.max(
    Math.max(...xs) - Math.min(...xs),
    Math.max(...ys) - Math.min(...ys),
    1e-9);
  const pad = 20;
  const scale = (size - 2 * pad) / span;
  const x0 = (Math.max(...xs) + Math.min(...xs)) / 2;
  const y0 = (Math.max(...ys) + Math.min(...ys)) / 2;
  for (const p of points) {
    const cx = size / 2 + (p.x - x0) * scale;
    const cy = size / 2 - (p.y - y0) * scale;
    const circle = svgEl("circle", {
      cx, cy, r: p.selected ? 10 : 7,
      fill: negativityColor(p.negative),
      stroke: p.selected ? "#1d4ed8" : "#666",
      "stroke-width": p.selected ? 2.5 : 1,
      class: "embedding-point",
      "data-topic": p.id,
      "data-negative": p.negative,
      tabindex: 0,
    });
    circle.addEventListener("click", () => onPick(p.id));
    circle.addEventListener("keydown", (ev) => {
      if ((ev as KeyboardEvent).key === "Enter") onPick(p.id);
    });
    const label = svgEl("text", { x: cx + 10, y: cy + 4,
                                  class: "embedding-label" });
    label.textContent = String(p.id);
    svg.append(circle, label);
  }
  return svg;
}
