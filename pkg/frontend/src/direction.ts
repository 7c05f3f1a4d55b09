/** Direction math shared by the angle picker (K=2) and numeric entry (K>=3). */

export function angleToDirection(theta: number): number[] {
  return [Math.cos(theta), Math.sin(theta)];
}

export function directionToAngle(d: number[]): number {
  return Math.atan2(d[1], d[0]);
}

export function norm(v: number[]): number {
  return Math.sqrt(v.reduce((acc, x) => acc + x * x, 0));
}

/** Normalize a nonnegative vector to unit length; null for zero/negative input. */
export function normalizeDirection(v: number[]): number[] | null {
  if (v.some((x) => x < 0 || !Number.isFinite(x))) return null;
  const n = norm(v);
  if (n === 0) return null;
  return v.map((x) => x / n);
}

/** Parse comma/space separated numeric entry into a unit direction. */
export function parseDirection(text: string, k: number): number[] | null {
  const parts = text.split(/[\s,]+/).filter((s) => s.length > 0).map(Number);
  if (parts.length !== k || parts.some((x) => Number.isNaN(x))) return null;
  return normalizeDirection(parts);
}

export function cosineSim(a: number[], b: number[]): number {
  const na = norm(a);
  const nb = norm(b);
  if (na === 0 || nb === 0) return 0;
  const dot = a.reduce((acc, x, i) => acc + x * b[i], 0);
  return dot / (na * nb);
}
