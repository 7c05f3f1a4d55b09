/** Focus-cone geometry for the K=2 objective plane. A cone is the set of
 * points whose cosine similarity with the goal direction is at least c_g. */

import { cosineSim, directionToAngle } from "./direction.js";

export interface Cone {
  theta: number; // goal direction angle, radians in [0, pi/2]
  halfAngle: number; // acos(c_g)
}

export function coneOf(direction: number[], cG: number): Cone {
  return { theta: directionToAngle(direction), halfAngle: Math.acos(cG) };
}

/** Geometric membership; must agree with the server's in_focus flag. */
export function pointInCone(r: number[], direction: number[], cG: number): boolean {
  return cosineSim(r, direction) >= cG;
}

/** SVG path of the cone wedge clipped to radius `extent`, in objective
 * coordinates (y up; the caller applies the screen transform). */
export function conePath(cone: Cone, extent: number): string {
  const lo = cone.theta - cone.halfAngle;
  const hi = cone.theta + cone.halfAngle;
  const x1 = extent * Math.cos(lo);
  const y1 = extent * Math.sin(lo);
  const x2 = extent * Math.cos(hi);
  const y2 = extent * Math.sin(hi);
  return `M 0 0 L ${x1} ${y1} A ${extent} ${extent} 0 0 1 ${x2} ${y2} Z`;
}
