// viridis anchor points, interpolated linearly
const ANCHORS: [number, number, number][] = [
  [68, 1, 84],
  [72, 40, 120],
  [62, 74, 137],
  [49, 104, 142],
  [38, 130, 142],
  [31, 158, 137],
  [53, 183, 121],
  [110, 206, 88],
  [181, 222, 43],
  [253, 231, 37]
];

// position on the scale in [0, 1]; monotonic in v, degenerate
// domains map to the midpoint
export function scalePosition(v: number, min: number, max: number): number {
  if (!(max > min)) return 0.5;
  const t = (v - min) / (max - min);
  return Math.min(1, Math.max(0, t));
}

export function colorAt(t: number): string {
  const clamped = Math.min(1, Math.max(0, t));
  const idx = Math.min(Math.floor(clamped * (ANCHORS.length - 1)), ANCHORS.length - 2);
  const frac = clamped * (ANCHORS.length - 1) - idx;
  const mix = (c: number) =>
    Math.round(ANCHORS[idx][c] + frac * (ANCHORS[idx + 1][c] - ANCHORS[idx][c]));
  return `rgb(${mix(0)},${mix(1)},${mix(2)})`;
}

export function colorFor(v: number, min: number, max: number): string {
  return colorAt(scalePosition(v, min, max));
}

export function gradientCss(steps = 20): string {
  const stops: string[] = [];
  for (let i = 0; i <= steps; i++) {
    stops.push(colorAt(i / steps));
  }
  return `linear-gradient(to right, ${stops.join(", ")})`;
}
