// Minimal graph editing: pure functions over graph documents backing the
// palette (add a node of a theory type, draw a wire, add a boundary).
// Edits are persisted through save_graph; the engine re-validates.

import type { GraphDoc } from "./protocol.js";

function freshId(prefix: string, taken: Iterable<string>): string {
  const used = new Set(taken);
  for (let i = 0; ; i++) {
    const candidate = `${prefix}${i}`;
    if (!used.has(candidate)) return candidate;
  }
}

export function emptyGraph(theory: string): GraphDoc {
  return { theory, nodes: {}, wires: {}, circles: [], bboxes: {} };
}

export function addNode(
  g: GraphDoc,
  data: unknown,
  pos: [number, number],
): { graph: GraphDoc; id: string } {
  const id = freshId("v", Object.keys(g.nodes));
  const graph: GraphDoc = {
    ...g,
    nodes: { ...g.nodes, [id]: { data, pos } },
  };
  return { graph, id };
}

export function addWire(
  g: GraphDoc,
  srcNode: string,
  tgtNode: string,
): { graph: GraphDoc; id: string } {
  if (!(srcNode in g.nodes) || !(tgtNode in g.nodes)) {
    throw new Error("wire endpoints must be existing nodes");
  }
  const id = freshId("w", Object.keys(g.wires));
  const graph: GraphDoc = {
    ...g,
    wires: {
      ...g.wires,
      [id]: { src: { node: srcNode }, tgt: { node: tgtNode }, data: null },
    },
  };
  return { graph, id };
}

function boundaryIds(g: GraphDoc): string[] {
  const ids: string[] = [];
  for (const w of Object.values(g.wires)) {
    if (w.src.boundary !== undefined) ids.push(w.src.boundary);
    if (w.tgt.boundary !== undefined) ids.push(w.tgt.boundary);
  }
  return ids;
}

/** Attach a fresh boundary point to a node: an input wire into it, or an
 * output wire out of it. */
export function addBoundary(
  g: GraphDoc,
  node: string,
  kind: "input" | "output",
): { graph: GraphDoc; id: string } {
  if (!(node in g.nodes)) throw new Error(`unknown node: ${node}`);
  const label = freshId(kind === "input" ? "in" : "out", boundaryIds(g));
  const id = freshId("w", Object.keys(g.wires));
  const wire =
    kind === "input"
      ? { src: { boundary: label }, tgt: { node }, data: null }
      : { src: { node }, tgt: { boundary: label }, data: null };
  return {
    graph: { ...g, wires: { ...g.wires, [id]: wire } },
    id: label,
  };
}
