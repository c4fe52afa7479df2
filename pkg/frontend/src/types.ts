// Mirrors the service's scene file schema and /v1 payloads.

export interface Point {
  x: number;
  y: number;
}

export interface SceneObject {
  category: string;
  center: [number, number, number];
  theta: number;
  dims: [number, number, number];
  flags: string[];
}

export interface ScenePayload {
  categories: string[];
  objects: SceneObject[];
  floor: { polygon: [number, number][] };
  extent: number;
}

export interface PlacedObject {
  catalog_id: string;
  category: string;
  center: [number, number, number];
  theta: number;
  dims: [number, number, number];
  is_fixture: boolean;
}

export interface FloorPayload {
  polygon: [number, number][];
  doors: SceneObject[];
  windows: SceneObject[];
  extent: number;
}

export interface GenerateResponse {
  scene: ScenePayload;
  placed_objects: PlacedObject[];
  warnings: string[];
  seed: number;
}

export interface CompleteResponse extends GenerateResponse {
  added_indices: number[];
}

export interface DescribeResponse {
  sentences: string[];
  mentioned: { category: string; ordinal: number }[];
  seed: number;
}

export type Mode = "none" | "shape" | "text";
