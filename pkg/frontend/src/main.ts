// DOM wiring for the studio: canvas interactions, the control strip, and the
// completion loop against the generation service.

import { StudioApi, ApiError, decodePgm } from "./api.js";
import { categoryAccuracy, categoryChecklist } from "./accuracy.js";
import { renderScene } from "./render.js";
import { StudioState } from "./state.js";
import type { Mode, ScenePayload } from "./types.js";

const PX_PER_M = 90;

type Tool = "vertex" | "door" | "window" | "select";

class StudioApp {
  state = new StudioState();
  api = new StudioApi("");
  tool: Tool = "vertex";
  mode: Mode = "shape";
  categories: string[] = [];
  scene: ScenePayload | null = null;
  hover: number | null = null;
  statusEl: HTMLElement;
  seedInput: HTMLInputElement;
  textInput: HTMLTextAreaElement;
  canvas: HTMLCanvasElement;
  ctx: CanvasRenderingContext2D;
  checklistEl: HTMLElement;
  maskImage: { width: number; height: number; pixels: Uint8Array } | null = null;

  constructor() {
    this.canvas = document.getElementById("studio-canvas") as HTMLCanvasElement;
    this.ctx = this.canvas.getContext("2d")!;
    this.statusEl = document.getElementById("status")!;
    this.seedInput = document.getElementById("seed") as HTMLInputElement;
    this.textInput = document.getElementById("text-input") as HTMLTextAreaElement;
    this.checklistEl = document.getElementById("checklist")!;
    this.bind();
    this.refreshHealth();
    this.draw();
  }

  private bind(): void {
    for (const tool of ["vertex", "door", "window", "select"] as Tool[]) {
      document.getElementById(`tool-${tool}`)!.addEventListener("click", () => {
        this.tool = tool;
        this.setStatus(`tool: ${tool}`);
      });
    }
    document.getElementById("undo")!.addEventListener("click", () => {
      this.state.undo();
      this.syncSceneFromState();
    });
    document.getElementById("redo")!.addEventListener("click", () => {
      this.state.redo();
      this.syncSceneFromState();
    });
    document.getElementById("clear")!.addEventListener("click", () => {
      this.state.clearScene();
      this.scene = null;
      this.draw();
    });
    document.getElementById("rect")!.addEventListener("click", () => {
      this.state.setRectangle(1.0, 1.0, 5.0, 4.5);
      this.previewMask();
    });
    document.getElementById("add-one")!.addEventListener("click", () => this.complete(1));
    document.getElementById("complete-scene")!.addEventListener("click", () => this.complete(null));
    document.getElementById("generate-text")!.addEventListener("click", () => this.generateFromText());

    this.canvas.addEventListener("click", (ev) => this.onClick(ev));
    this.canvas.addEventListener("mousemove", (ev) => this.onHover(ev));
  }

  private canvasPoint(ev: MouseEvent): { x: number; y: number } {
    const rect = this.canvas.getBoundingClientRect();
    return { x: (ev.clientX - rect.left) / PX_PER_M, y: (ev.clientY - rect.top) / PX_PER_M };
  }

  private onClick(ev: MouseEvent): void {
    const p = this.canvasPoint(ev);
    try {
      if (this.tool === "vertex") {
        this.state.addVertex(p);
        this.previewMask();
      } else if (this.tool === "door" || this.tool === "window") {
        this.state.placeFixture(this.tool, p);
      } else if (this.tool === "select" && this.scene) {
        const hit = this.hitTest(p);
        if (hit !== null) {
          this.state.deleteObject(hit);
          this.syncSceneFromState();
          this.setStatus(`deleted object ${hit}`);
        }
      }
    } catch (e) {
      this.setStatus(String(e));
    }
    this.draw();
  }

  private onHover(ev: MouseEvent): void {
    if (!this.scene) return;
    this.hover = this.hitTest(this.canvasPoint(ev));
    this.draw();
  }

  private hitTest(p: { x: number; y: number }): number | null {
    if (!this.scene) return null;
    for (let i = this.scene.objects.length - 1; i >= 0; i--) {
      const o = this.scene.objects[i];
      const r = (-o.theta * Math.PI) / 180;
      const dx = p.x - o.center[0];
      const dy = p.y - o.center[1];
      const lx = Math.cos(r) * dx - Math.sin(r) * dy;
      const ly = Math.sin(r) * dx + Math.cos(r) * dy;
      if (Math.abs(lx) <= o.dims[0] / 2 && Math.abs(ly) <= o.dims[1] / 2) return i;
    }
    return null;
  }

  private seed(): number | undefined {
    const raw = this.seedInput.value.trim();
    return raw === "" ? undefined : Number(raw);
  }

  private async refreshHealth(): Promise<void> {
    try {
      const h = await this.api.health();
      this.setStatus(`connected; modes: ${h.loaded_modes.join(", ")}`);
    } catch {
      this.setStatus("service unreachable; start `scenegen serve`");
    }
  }

  private async previewMask(): Promise<void> {
    if (!this.state.polygonValid) return;
    try {
      const res = await this.api.rasterize(
        this.state.snapshot.polygon.map((p) => [p.x, p.y] as [number, number]), 128);
      this.maskImage = decodePgm(res.mask_base64);
    } catch {
      this.maskImage = null;
    }
    this.draw();
  }

  private syncSceneFromState(): void {
    if (this.scene) {
      this.scene = { ...this.scene, objects: this.state.snapshot.objects };
    }
    this.draw();
  }

  private async complete(maxNew: number | null): Promise<void> {
    if (!this.state.canRequest) {
      this.setStatus("floor not ready or request in flight");
      return;
    }
    try {
      const res = await this.state.requestCompletion(this.api, this.categories, maxNew, this.seed());
      this.scene = res.scene;
      this.categories = res.scene.categories;
      this.seedInput.value = String(res.seed);
      this.setStatus(`+${res.added_indices.length} objects (seed ${res.seed})` +
        (res.warnings.length ? `; ${res.warnings.join("; ")}` : ""));
    } catch (e) {
      this.setStatus(e instanceof ApiError ? `${e.message} (retry available)` : String(e));
    }
    this.draw();
  }

  private async generateFromText(): Promise<void> {
    const text = this.textInput.value.trim();
    if (!text) {
      this.setStatus("enter a description first");
      return;
    }
    try {
      const res = await this.api.generate("text", { text, seed: this.seed() });
      this.scene = res.scene;
      this.categories = res.scene.categories;
      this.seedInput.value = String(res.seed);
      const desc = await this.api.describe(res.scene, res.seed);
      const rows = categoryChecklist(desc.mentioned, res.scene.objects);
      const pct = categoryAccuracy(desc.mentioned, res.scene.objects);
      this.checklistEl.innerHTML = rows
        .map((r) => `<li class="${r.present ? "hit" : "miss"}">${r.category} #${r.ordinal}</li>`)
        .join("");
      this.setStatus(`text accuracy ${pct.toFixed(1)}% (seed ${res.seed})`);
    } catch (e) {
      this.setStatus(e instanceof ApiError ? `${e.message} (retry available)` : String(e));
    }
    this.draw();
  }

  private setStatus(message: string): void {
    this.statusEl.textContent = message;
  }

  private draw(): void {
    renderScene(this.ctx, this.scene, this.state.snapshot.polygon, {
      pixelsPerMeter: PX_PER_M,
      highlight: this.state.snapshot.addedIndices,
      hover: this.hover,
      invalidPolygon: this.state.snapshot.polygon.length >= 3 && !this.state.polygonValid,
      knownCategories: this.categories.length ? this.categories : undefined,
    });
  }
}

window.addEventListener("DOMContentLoaded", () => new StudioApp());
