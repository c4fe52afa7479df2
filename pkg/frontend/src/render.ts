// Top-down scene renderer. Draws onto anything that looks like a 2D canvas
// context, which keeps it testable with a recording stub.

import type { Point, SceneObject, ScenePayload } from "./types.js";

export interface Ctx2D {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  globalAlpha: number;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  closePath(): void;
  fill(): void;
  stroke(): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  fillText(text: string, x: number, y: number): void;
  save(): void;
  restore(): void;
  translate(x: number, y: number): void;
  rotate(angle: number): void;
  setLineDash(segments: number[]): void;
  clearRect(x: number, y: number, w: number, h: number): void;
}

export interface RenderOptions {
  pixelsPerMeter: number;
  highlight?: number[];
  hover?: number | null;
  invalidPolygon?: boolean;
  knownCategories?: string[];
}

const PALETTE = [
  "#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948",
  "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac", "#86bcb6", "#d37295",
];

export function categoryColor(category: string): string {
  let h = 0;
  for (let i = 0; i < category.length; i++) h = (h * 31 + category.charCodeAt(i)) >>> 0;
  return PALETTE[h % PALETTE.length];
}

function isWallOrCeiling(o: SceneObject): boolean {
  // wall/ceiling-mounted things float above floor furniture in the layering
  return o.center[2] > 1.0;
}

export function renderScene(
  ctx: Ctx2D,
  scene: ScenePayload | null,
  polygon: Point[],
  opts: RenderOptions,
): void {
  const s = opts.pixelsPerMeter;
  ctx.clearRect(0, 0, 10_000, 10_000);

  if (polygon.length >= 2) {
    ctx.beginPath();
    ctx.moveTo(polygon[0].x * s, polygon[0].y * s);
    for (let i = 1; i < polygon.length; i++) ctx.lineTo(polygon[i].x * s, polygon[i].y * s);
    ctx.closePath();
    ctx.globalAlpha = 0.25;
    ctx.fillStyle = opts.invalidPolygon ? "#e15759" : "#c8d7e8";
    ctx.fill();
    ctx.globalAlpha = 1.0;
    ctx.lineWidth = 2;
    ctx.strokeStyle = opts.invalidPolygon ? "#c00000" : "#44576b";
    ctx.stroke();
  }

  if (!scene) return;
  const known = new Set(opts.knownCategories ?? scene.categories);
  const order = scene.objects
    .map((o, i) => ({ o, i }))
    .sort((a, b) => Number(isWallOrCeiling(a.o)) - Number(isWallOrCeiling(b.o)));

  for (const { o, i } of order) {
    const [cx, cy] = o.center;
    const [l, w] = o.dims;
    const unknown = !known.has(o.category);
    ctx.save();
    ctx.translate(cx * s, cy * s);
    ctx.rotate((o.theta * Math.PI) / 180);
    const fixture = o.flags.includes("door") || o.flags.includes("window");
    ctx.globalAlpha = fixture ? 0.9 : 0.75;
    ctx.fillStyle = unknown ? "#cccccc" : categoryColor(o.category);
    if (isWallOrCeiling(o)) ctx.setLineDash([4, 3]);
    else ctx.setLineDash([]);
    ctx.fillRect((-l / 2) * s, (-w / 2) * s, l * s, w * s);
    ctx.lineWidth = opts.highlight?.includes(i) ? 3 : 1;
    ctx.strokeStyle = opts.highlight?.includes(i) ? "#d62728" : "#222222";
    ctx.strokeRect((-l / 2) * s, (-w / 2) * s, l * s, w * s);
    ctx.restore();
    ctx.globalAlpha = 1.0;
    ctx.font = "10px sans-serif";
    ctx.fillStyle = "#111111";
    const label = unknown ? `${o.category} (?)` : o.category;
    ctx.fillText(label, cx * s + 3, cy * s - 3);
    if (opts.hover === i) {
      ctx.fillText(
        `c=(${o.center.map((v) => v.toFixed(2)).join(", ")}) θ=${o.theta.toFixed(0)}° ` +
          `dims=(${o.dims.map((v) => v.toFixed(2)).join(", ")})`,
        cx * s + 3,
        cy * s + 12,
      );
    }
  }
}
