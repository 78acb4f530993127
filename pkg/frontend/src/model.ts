// Client-side helpers over the wire-format graph documents.

import type { EndpointDoc, GraphDoc } from "./protocol.js";

export function isNodeEnd(e: EndpointDoc): boolean {
  return e.node !== undefined;
}

export function endId(e: EndpointDoc): string {
  return e.node ?? e.boundary ?? "";
}

export interface BoundaryPoint {
  id: string;
  kind: "input" | "output";
  pos: [number, number];
}

/** Inputs are boundary ids occurring as wire sources, outputs as targets.
 * Boundary points carry no stored position, so they are placed beside the
 * node their unique wire attaches to (matching the engine's TikZ layout
 * convention). */
export function boundaryPoints(g: GraphDoc): BoundaryPoint[] {
  const points: BoundaryPoint[] = [];
  const rank = new Map<string, number>();
  let bareRank = 0;
  for (const wid of Object.keys(g.wires).sort()) {
    const w = g.wires[wid];
    if (!isNodeEnd(w.src) && !isNodeEnd(w.tgt)) {
      points.push({ id: endId(w.src), kind: "input", pos: [-1.2, bareRank] });
      points.push({ id: endId(w.tgt), kind: "output", pos: [1.2, bareRank] });
      bareRank += 1;
      continue;
    }
    for (const [ep, other, dx, kind] of [
      [w.src, w.tgt, -1.2, "input"],
      [w.tgt, w.src, 1.2, "output"],
    ] as const) {
      if (isNodeEnd(ep)) continue;
      const key = `${endId(other)}:${kind}`;
      const k = rank.get(key) ?? 0;
      rank.set(key, k + 1);
      const node = g.nodes[endId(other)];
      points.push({
        id: endId(ep),
        kind,
        pos: [node.pos[0] + dx, node.pos[1] + 0.4 * k],
      });
    }
  }
  return points;
}

export function nodeCount(g: GraphDoc): number {
  return Object.keys(g.nodes).length;
}

/** The styling key the theory descriptor uses for a node payload. */
export function styleKey(data: unknown): string {
  if (typeof data === "string") return data;
  if (data && typeof data === "object") {
    const record = data as Record<string, unknown>;
    if ("lit" in record || "var" in record) return "box";
  }
  return "default";
}

export function nodeLabel(data: unknown): string {
  if (data && typeof data === "object") {
    const record = data as Record<string, unknown>;
    if (typeof record.lit === "string") return record.lit;
    if (typeof record.var === "string") return `?${record.var}`;
  }
  return "";
}
