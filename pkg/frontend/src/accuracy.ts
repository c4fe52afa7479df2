// Client-side mirror of the service's category-accuracy metric, used for the
// text-mode checklist. Multiset semantics: two mentioned beds need two
// generated beds.

import type { SceneObject } from "./types.js";

export interface Mention {
  category: string;
  ordinal: number;
}

export interface ChecklistRow {
  category: string;
  ordinal: number;
  present: boolean;
}

export function categoryChecklist(mentioned: Mention[], objects: SceneObject[]): ChecklistRow[] {
  const have = new Map<string, number>();
  for (const o of objects) have.set(o.category, (have.get(o.category) ?? 0) + 1);
  return mentioned.map((m) => ({
    category: m.category,
    ordinal: m.ordinal,
    present: (have.get(m.category) ?? 0) >= m.ordinal,
  }));
}

export function categoryAccuracy(mentioned: Mention[], objects: SceneObject[]): number {
  if (mentioned.length === 0) throw new Error("nothing mentioned");
  const rows = categoryChecklist(mentioned, objects);
  const hit = rows.filter((r) => r.present).length;
  return (100 * hit) / rows.length;
}
