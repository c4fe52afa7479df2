// Floor polygon editing helpers: grid snapping, validity, edge placement.

import type { Point } from "./types.js";

export function snapToGrid(p: Point, grid: number): Point {
  return { x: Math.round(p.x / grid) * grid, y: Math.round(p.y / grid) * grid };
}

function orient(a: Point, b: Point, c: Point): number {
  const v = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
  if (Math.abs(v) < 1e-12) return 0;
  return v > 0 ? 1 : -1;
}

function segmentsCross(p1: Point, p2: Point, p3: Point, p4: Point): boolean {
  const o1 = orient(p1, p2, p3);
  const o2 = orient(p1, p2, p4);
  const o3 = orient(p3, p4, p1);
  const o4 = orient(p3, p4, p2);
  return o1 !== o2 && o3 !== o4 && o1 !== 0 && o2 !== 0 && o3 !== 0 && o4 !== 0;
}

export function isSimplePolygon(points: Point[]): boolean {
  const n = points.length;
  if (n < 3) return false;
  for (let i = 0; i < n; i++) {
    for (let j = i + 1; j < n; j++) {
      // skip adjacent edges (they share a vertex)
      if (j === i || (j + 1) % n === i || (i + 1) % n === j) continue;
      if (segmentsCross(points[i], points[(i + 1) % n], points[j], points[(j + 1) % n])) {
        return false;
      }
    }
  }
  return signedArea(points) !== 0;
}

export function signedArea(points: Point[]): number {
  let area = 0;
  const n = points.length;
  for (let i = 0; i < n; i++) {
    const a = points[i];
    const b = points[(i + 1) % n];
    area += a.x * b.y - b.x * a.y;
  }
  return area / 2;
}

export function ensureCounterClockwise(points: Point[]): Point[] {
  return signedArea(points) < 0 ? [...points].reverse() : points;
}

export function pointInPolygon(p: Point, points: Point[]): boolean {
  let inside = false;
  const n = points.length;
  for (let i = 0; i < n; i++) {
    const a = points[i];
    const b = points[(i + 1) % n];
    if (a.y > p.y !== b.y > p.y) {
      const xi = a.x + ((p.y - a.y) * (b.x - a.x)) / (b.y - a.y);
      if (p.x < xi) inside = !inside;
    }
  }
  return inside;
}

/** Closest point on any polygon edge; returns edge index and parameter t. */
export function nearestEdgePoint(p: Point, points: Point[]): {
  edge: number;
  t: number;
  point: Point;
  distance: number;
} {
  let best = { edge: 0, t: 0, point: points[0], distance: Infinity };
  const n = points.length;
  for (let i = 0; i < n; i++) {
    const a = points[i];
    const b = points[(i + 1) % n];
    const vx = b.x - a.x;
    const vy = b.y - a.y;
    const len2 = vx * vx + vy * vy;
    const t = len2 === 0 ? 0 : Math.max(0, Math.min(1, ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2));
    const q = { x: a.x + t * vx, y: a.y + t * vy };
    const d = Math.hypot(p.x - q.x, p.y - q.y);
    if (d < best.distance) best = { edge: i, t, point: q, distance: d };
  }
  return best;
}

/** Interior-facing angle (degrees) for an object sitting on edge i of a CCW polygon. */
export function edgeInwardTheta(points: Point[], edge: number): number {
  const a = points[edge];
  const b = points[(edge + 1) % points.length];
  // CCW polygon: interior lies left of the edge direction
  const angle = Math.atan2(b.y - a.y, b.x - a.x) + Math.PI / 2;
  return ((angle * 180) / Math.PI + 360) % 360;
}
