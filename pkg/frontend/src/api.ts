// Thin client for the /v1 generation service.

import type {
  CompleteResponse,
  DescribeResponse,
  FloorPayload,
  GenerateResponse,
  Mode,
  ScenePayload,
} from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, detail: string) {
    super(`service ${status}: ${detail}`);
  }
}

async function post<T>(base: string, path: string, body: unknown): Promise<T> {
  const res = await fetch(`${base}${path}`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(body),
  });
  const payload = await res.json().catch(() => ({}));
  if (!res.ok) {
    throw new ApiError(res.status, (payload as { detail?: string }).detail ?? res.statusText);
  }
  return payload as T;
}

export class StudioApi {
  constructor(private base: string = "") {}

  async health(): Promise<{ status: string; loaded_modes: Mode[] }> {
    const res = await fetch(`${this.base}/v1/health`);
    if (!res.ok) throw new ApiError(res.status, res.statusText);
    return res.json();
  }

  rasterize(polygon: [number, number][], resolution = 256) {
    return post<{ mask_base64: string; resolution: number }>(
      this.base, "/v1/rasterize", { polygon, resolution });
  }

  generate(mode: Mode, opts: { floor?: FloorPayload; text?: string; seed?: number }) {
    return post<GenerateResponse>(this.base, "/v1/generate", { mode, ...opts });
  }

  complete(
    scene: ScenePayload,
    mode: Mode,
    condition: { floor?: FloorPayload; text?: string },
    maxNew: number | null,
    seed?: number,
  ) {
    return post<CompleteResponse>(this.base, "/v1/complete", {
      scene, mode, condition, max_new: maxNew, seed,
    });
  }

  describe(scene: ScenePayload, seed?: number) {
    return post<DescribeResponse>(this.base, "/v1/describe", { scene, seed });
  }
}

/** Decode the service's base64 P5 PGM into width/height plus a byte per pixel. */
export function decodePgm(base64: string): { width: number; height: number; pixels: Uint8Array } {
  const raw = typeof atob === "function"
    ? Uint8Array.from(atob(base64), (c) => c.charCodeAt(0))
    : new Uint8Array(Buffer.from(base64, "base64"));
  // header: "P5\n<w> <h>\n255\n"
  let pos = 0;
  const readLine = () => {
    let end = pos;
    while (raw[end] !== 10) end++;
    const line = new TextDecoder().decode(raw.slice(pos, end));
    pos = end + 1;
    return line;
  };
  const magic = readLine();
  if (magic !== "P5") throw new Error(`not a P5 PGM: ${magic}`);
  const [w, h] = readLine().split(" ").map(Number);
  readLine(); // maxval
  return { width: w, height: h, pixels: raw.slice(pos, pos + w * h) };
}
