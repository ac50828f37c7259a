/** Time-gradient coloring: trajectories fade from red to green. */

const RED: [number, number, number] = [214, 39, 40];
const GREEN: [number, number, number] = [44, 160, 44];

/** Fraction t in [0, 1] along the trajectory -> CSS color. */
export function timeColor(t: number): string {
  const k = Math.min(1, Math.max(0, t));
  const ch = RED.map((r, i) => Math.round(r + (GREEN[i] - r) * k));
  return `rgb(${ch[0]},${ch[1]},${ch[2]})`;
}

/** Per-segment colors for a polyline of n points (n - 1 segments). */
export function segmentColors(n: number): string[] {
  if (n < 2) return [];
  const out: string[] = [];
  for (let i = 0; i < n - 1; i++) {
    out.push(timeColor(n === 2 ? 0.5 : i / (n - 2)));
  }
  return out;
}
