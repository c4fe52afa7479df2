// Studio state: floor editing, fixtures, the working scene, and an undo/redo
// history. Every mutation lands in history as a full snapshot, so undo(do(s))
// restores s exactly; service requests are always derived from the snapshot
// plus an explicit seed, never from hidden state.

import {
  edgeInwardTheta,
  ensureCounterClockwise,
  isSimplePolygon,
  nearestEdgePoint,
  snapToGrid,
} from "./polygon.js";
import type { FloorPayload, Point, SceneObject, ScenePayload } from "./types.js";
import type { StudioApi } from "./api.js";

export interface Fixture {
  kind: "door" | "window";
  edge: number;
  t: number; // parameter along the edge
}

export interface Snapshot {
  polygon: Point[];
  fixtures: Fixture[];
  objects: SceneObject[];
  addedIndices: number[];
  lastSeed: number | null;
}

const DOOR_DIMS: [number, number, number] = [0.15, 0.9, 2.0];
const WINDOW_DIMS: [number, number, number] = [0.15, 1.2, 1.2];

function cloneSnapshot(s: Snapshot): Snapshot {
  return JSON.parse(JSON.stringify(s));
}

export class StudioState {
  snapshot: Snapshot = {
    polygon: [],
    fixtures: [],
    objects: [],
    addedIndices: [],
    lastSeed: null,
  };
  pending = false;
  gridStep = 0.25;
  extent = 6.0;

  private past: Snapshot[] = [];
  private future: Snapshot[] = [];

  private commit(mutate: (s: Snapshot) => void): void {
    this.past.push(cloneSnapshot(this.snapshot));
    this.future = [];
    mutate(this.snapshot);
  }

  undo(): boolean {
    const prev = this.past.pop();
    if (!prev) return false;
    this.future.push(cloneSnapshot(this.snapshot));
    this.snapshot = prev;
    return true;
  }

  redo(): boolean {
    const next = this.future.pop();
    if (!next) return false;
    this.past.push(cloneSnapshot(this.snapshot));
    this.snapshot = next;
    return true;
  }

  // -- floor editing ---------------------------------------------------------

  get polygonValid(): boolean {
    return isSimplePolygon(this.snapshot.polygon);
  }

  get canRequest(): boolean {
    return this.polygonValid && !this.pending;
  }

  addVertex(p: Point): void {
    this.commit((s) => {
      s.polygon.push(snapToGrid(p, this.gridStep));
    });
  }

  /** Returns false (and keeps history consistent) when the move would
   * self-intersect; the caller paints the red outline from polygonValid. */
  moveVertex(index: number, p: Point): boolean {
    const trial = this.snapshot.polygon.slice();
    trial[index] = snapToGrid(p, this.gridStep);
    const ok = trial.length < 3 || isSimplePolygon(trial);
    this.commit((s) => {
      s.polygon[index] = snapToGrid(p, this.gridStep);
    });
    return ok;
  }

  setRectangle(x0: number, y0: number, x1: number, y1: number): void {
    this.commit((s) => {
      s.polygon = ensureCounterClockwise([
        snapToGrid({ x: x0, y: y0 }, this.gridStep),
        snapToGrid({ x: x1, y: y0 }, this.gridStep),
        snapToGrid({ x: x1, y: y1 }, this.gridStep),
        snapToGrid({ x: x0, y: y1 }, this.gridStep),
      ]);
    });
  }

  /** Doors and windows snap onto the nearest polygon edge. */
  placeFixture(kind: "door" | "window", p: Point): Fixture {
    if (!this.polygonValid) throw new Error("floor polygon is not valid yet");
    const hit = nearestEdgePoint(p, this.snapshot.polygon);
    const fixture: Fixture = { kind, edge: hit.edge, t: hit.t };
    this.commit((s) => {
      s.fixtures.push(fixture);
    });
    return fixture;
  }

  fixtureObject(f: Fixture): SceneObject {
    const poly = this.snapshot.polygon;
    const a = poly[f.edge];
    const b = poly[(f.edge + 1) % poly.length];
    const theta = edgeInwardTheta(poly, f.edge);
    const dims = f.kind === "door" ? DOOR_DIMS : WINDOW_DIMS;
    const rad = (theta * Math.PI) / 180;
    // inset by half depth so the center sits inside the room
    const cx = a.x + f.t * (b.x - a.x) + (Math.cos(rad) * dims[0]) / 2;
    const cy = a.y + f.t * (b.y - a.y) + (Math.sin(rad) * dims[0]) / 2;
    const z = f.kind === "door" ? dims[2] / 2 : 1.4;
    return {
      category: f.kind,
      center: [round4(cx), round4(cy), z],
      theta,
      dims,
      flags: [f.kind],
    };
  }

  // -- payload assembly -------------------------------------------------------

  floorPayload(): FloorPayload {
    return {
      polygon: this.snapshot.polygon.map((p) => [p.x, p.y]),
      doors: this.snapshot.fixtures.filter((f) => f.kind === "door").map((f) => this.fixtureObject(f)),
      windows: this.snapshot.fixtures.filter((f) => f.kind === "window").map((f) => this.fixtureObject(f)),
      extent: this.extent,
    };
  }

  scenePayload(categories: string[]): ScenePayload {
    const fixtures = this.snapshot.fixtures.map((f) => this.fixtureObject(f));
    const furniture = this.snapshot.objects.filter(
      (o) => !o.flags.includes("door") && !o.flags.includes("window"),
    );
    return {
      categories,
      objects: [...fixtures, ...furniture],
      floor: { polygon: this.snapshot.polygon.map((p) => [p.x, p.y]) },
      extent: this.extent,
    };
  }

  // -- completion loop ----------------------------------------------------------

  deleteObject(index: number): void {
    this.commit((s) => {
      s.objects.splice(index, 1);
      s.addedIndices = s.addedIndices
        .filter((i) => i !== index)
        .map((i) => (i > index ? i - 1 : i));
    });
  }

  clearScene(): void {
    this.commit((s) => {
      s.objects = [];
      s.addedIndices = [];
    });
  }

  async requestCompletion(
    api: StudioApi,
    categories: string[],
    maxNew: number | null,
    seed?: number,
  ) {
    if (this.pending) throw new Error("a generation request is already in flight");
    if (!this.polygonValid) throw new Error("finish the floor polygon first");
    this.pending = true;
    try {
      const scene = this.scenePayload(categories);
      const response = await api.complete(scene, "shape", { floor: this.floorPayload() }, maxNew, seed);
      this.commit((s) => {
        s.objects = response.scene.objects;
        s.addedIndices = response.added_indices;
        s.lastSeed = response.seed;
      });
      return response;
    } finally {
      this.pending = false;
    }
  }
}

function round4(v: number): number {
  return Math.round(v * 1e4) / 1e4;
}
