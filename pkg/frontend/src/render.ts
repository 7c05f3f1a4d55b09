/** Pure SVG-string renderers for the objective plane. The app attaches the
 * output to the DOM; tests assert on the strings. The client never
 * recomputes in_focus: sample coloring restates the server's flag. */

import { conePath, coneOf } from "./cone.js";
import type { LandscapeResponse, SampleRecord } from "./types.js";

export type Coloring = "status" | "angle" | "density";

export const PANEL = 420;
export const MARGIN = 30;

function sx(v: number): number {
  return MARGIN + v * (PANEL - 2 * MARGIN);
}

function sy(v: number): number {
  return PANEL - MARGIN - v * (PANEL - 2 * MARGIN);
}

/** Blue (0) -> red (0.5) -> green (1), matching the report figures. */
export function brgColor(t: number): string {
  const u = Math.min(Math.max(t, 0), 1);
  let r: number, g: number, b: number;
  if (u < 0.5) {
    r = u / 0.5; g = 0; b = 1 - u / 0.5;
  } else {
    r = 1 - (u - 0.5) / 0.5; g = (u - 0.5) / 0.5; b = 0;
  }
  const hex = (x: number) => Math.round(255 * x).toString(16).padStart(2, "0");
  return `#${hex(r)}${hex(g)}${hex(b)}`;
}

export function densityValues(points: number[][], bins = 48): number[] {
  const counts = new Map<string, number>();
  const key = (p: number[]) => {
    const i = Math.min(Math.floor(Math.max(0, Math.min(1, p[0])) * bins), bins - 1);
    const j = Math.min(Math.floor(Math.max(0, Math.min(1, p[1])) * bins), bins - 1);
    return `${i},${j}`;
  };
  for (const p of points) counts.set(key(p), (counts.get(key(p)) ?? 0) + 1);
  let peak = 1;
  for (const v of counts.values()) peak = Math.max(peak, v);
  return points.map((p) => (counts.get(key(p)) ?? 0) / peak);
}

export interface PlaneOptions {
  coloring: Coloring;
  cone?: { direction: number[]; cG: number };
  goalAngle?: number; // used for "angle" coloring
}

/** One K=2 panel: masked region dark, unmasked light, front outlined,
 * samples on top. objIdx selects the objective pair for K>2 layouts. */
export function renderPlane(
  landscape: LandscapeResponse | null,
  samples: SampleRecord[],
  opts: PlaneOptions,
  objIdx: [number, number] = [0, 1],
): string {
  const [a, b] = objIdx;
  const parts: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${PANEL}" height="${PANEL}" viewBox="0 0 ${PANEL} ${PANEL}">`,
    `<rect x="${MARGIN}" y="${MARGIN}" width="${PANEL - 2 * MARGIN}" height="${PANEL - 2 * MARGIN}" fill="#f4f6fa" stroke="#555"/>`,
  ];
  if (landscape) {
    const cell = (PANEL - 2 * MARGIN) / Math.sqrt(landscape.points.length) / 1.4;
    for (const p of landscape.points) {
      const fill = p.masked ? "#23232e" : "#d7e1f0";
      parts.push(
        `<rect class="land ${p.masked ? "masked" : "open"}" x="${(sx(p.r[a]) - cell / 2).toFixed(1)}" ` +
        `y="${(sy(p.r[b]) - cell / 2).toFixed(1)}" width="${cell.toFixed(1)}" height="${cell.toFixed(1)}" fill="${fill}"/>`,
      );
    }
    const front = [...landscape.front].sort((u, v) => u[a] - v[a]);
    if (front.length > 1) {
      const d = front.map((p, i) => `${i ? "L" : "M"} ${sx(p[a]).toFixed(1)} ${sy(p[b]).toFixed(1)}`).join(" ");
      parts.push(`<path class="front" d="${d}" fill="none" stroke="#e04040" stroke-width="1.6"/>`);
    } else if (front.length === 1) {
      parts.push(`<circle class="front" cx="${sx(front[0][a]).toFixed(1)}" cy="${sy(front[0][b]).toFixed(1)}" r="4" fill="none" stroke="#e04040"/>`);
    }
  }
  if (opts.cone) {
    const cone = coneOf(opts.cone.direction, opts.cone.cG);
    // path in objective space, transformed into screen space
    const span = PANEL - 2 * MARGIN;
    parts.push(
      `<g transform="translate(${MARGIN} ${PANEL - MARGIN}) scale(${span} ${-span})">` +
      `<path class="cone" d="${conePath(cone, 1.45)}" fill="#74c0fc" fill-opacity="0.28" stroke="none"/></g>`,
    );
  }
  const density = opts.coloring === "density"
    ? densityValues(samples.map((s) => [s.r[a], s.r[b]]))
    : null;
  samples.forEach((s, i) => {
    let fill: string;
    if (opts.coloring === "status") {
      fill = s.in_focus === undefined ? "#888" : s.in_focus ? "#2f9e44" : "#adb5bd";
    } else if (opts.coloring === "angle") {
      fill = brgColor((opts.goalAngle ?? 0) / (Math.PI / 2));
    } else {
      const v = density![i];
      const hex = Math.round(64 + 191 * v).toString(16).padStart(2, "0");
      fill = `#${hex}${hex}ff`;
    }
    parts.push(
      `<circle class="sample${s.in_focus ? " in-focus" : ""}" cx="${sx(s.r[a]).toFixed(1)}" ` +
      `cy="${sy(s.r[b]).toFixed(1)}" r="3" fill="${fill}"/>`,
    );
  });
  parts.push("</svg>");
  return parts.join("\n");
}

/** Pairwise panels for K>2, row-wrapped. */
export function renderPanels(
  landscape: LandscapeResponse | null,
  samples: SampleRecord[],
  opts: PlaneOptions,
  k: number,
): string {
  const pairs: [number, number][] = [];
  for (let i = 0; i < k; i++) for (let j = i + 1; j < k; j++) pairs.push([i, j]);
  return pairs.map((pair) => renderPlane(landscape, samples, opts, pair)).join("\n");
}
