/** Scene geometry: presence-aware polyline runs and viewBox fitting. */

import type { ObjectFrame, RegionDoc, SceneDoc } from "./api.js";

export interface TimedPoint {
  x: number;
  y: number;
  /** frame index in the full trajectory (drives the time gradient) */
  t: number;
}

/**
 * Split one object's frames into contiguous present runs; frames with
 * present=false gap the polyline.
 */
export function presentRuns(frames: ObjectFrame[][], objectIndex: number): TimedPoint[][] {
  const runs: TimedPoint[][] = [];
  let current: TimedPoint[] = [];
  frames.forEach((row, t) => {
    const obj = row[objectIndex];
    if (obj && obj.present) {
      current.push({ x: obj.x, y: obj.y, t });
    } else if (current.length) {
      runs.push(current);
      current = [];
    }
  });
  if (current.length) runs.push(current);
  return runs;
}

export interface Bounds {
  minX: number;
  minY: number;
  maxX: number;
  maxY: number;
}

/** Bounding box over every present frame and every region vertex. */
export function sceneBounds(scene: SceneDoc): Bounds | null {
  let b: Bounds | null = null;
  const fold = (x: number, y: number) => {
    if (b === null) b = { minX: x, minY: y, maxX: x, maxY: y };
    else {
      b.minX = Math.min(b.minX, x);
      b.minY = Math.min(b.minY, y);
      b.maxX = Math.max(b.maxX, x);
      b.maxY = Math.max(b.maxY, y);
    }
  };
  for (const traj of scene.trajectories) {
    for (const row of traj.frames) {
      for (const obj of row) {
        if (obj.present) fold(obj.x, obj.y);
      }
    }
  }
  for (const region of scene.regions) {
    for (const [x, y] of region.polyline) fold(x, y);
  }
  return b;
}

/** viewBox string with a proportional margin; y is flipped by the caller. */
export function viewBox(b: Bounds, marginFrac = 0.08): string {
  const w = Math.max(b.maxX - b.minX, 1e-9);
  const h = Math.max(b.maxY - b.minY, 1e-9);
  const m = Math.max(w, h) * marginFrac;
  return `${b.minX - m} ${-(b.maxY + m)} ${w + 2 * m} ${h + 2 * m}`;
}

export function regionPath(region: RegionDoc): string {
  return region.polyline
    .map(([x, y], i) => `${i === 0 ? "M" : "L"}${x},${-y}`)
    .join(" ");
}
