// Graph rendering: world-to-screen layout plus SVG element construction.
// The layout math is DOM-free so it can be tested headlessly.

import { boundaryPoints, endId, isNodeEnd, nodeLabel, styleKey } from
  "./model.js";
import type { GraphDoc } from "./protocol.js";

export interface NodeStyleDoc {
  name: string;
  shape: string;
  fill: string;
  label_template: string;
}

export interface TheoryDoc {
  name: string;
  styles: Record<string, NodeStyleDoc>;
}

export const SCALE = 55;
export const MARGIN = 40;

export interface Placed {
  id: string;
  x: number;
  y: number;
  wx: number;
  wy: number;
  kind: "node" | "input" | "output";
  fill: string;
  label: string;
}

export interface WirePath {
  id: string;
  x1: number;
  y1: number;
  x2: number;
  y2: number;
  selfLoop: boolean;
}

export interface Layout {
  width: number;
  height: number;
  elements: Placed[];
  wires: WirePath[];
  circles: number;
}

/** Screen coordinates for every node, boundary point and wire of a
 * diagram, normalised to positive space with a margin. */
export function layoutGraph(g: GraphDoc, theory: TheoryDoc | null): Layout {
  const elements: Placed[] = [];

  for (const id of Object.keys(g.nodes).sort()) {
    const node = g.nodes[id];
    const style = theory?.styles[styleKey(node.data)];
    elements.push({
      id,
      x: node.pos[0],
      y: node.pos[1],
      wx: node.pos[0],
      wy: node.pos[1],
      kind: "node",
      fill: style?.fill ?? "white",
      label: nodeLabel(node.data),
    });
  }
  for (const point of boundaryPoints(g)) {
    elements.push({
      id: point.id,
      x: point.pos[0],
      y: point.pos[1],
      wx: point.pos[0],
      wy: point.pos[1],
      kind: point.kind,
      fill: "none",
      label: point.id,
    });
  }

  const xs = elements.map((e) => e.x);
  const ys = elements.map((e) => e.y);
  const minX = Math.min(0, ...xs);
  const minY = Math.min(0, ...ys);
  for (const e of elements) {
    e.x = (e.x - minX) * SCALE + MARGIN;
    e.y = (e.y - minY) * SCALE + MARGIN;
  }
  const placed = new Map(elements.map((e) => [e.id, e]));

  const wires: WirePath[] = [];
  for (const wid of Object.keys(g.wires).sort()) {
    const w = g.wires[wid];
    const src = placed.get(endId(w.src))!;
    const tgt = placed.get(endId(w.tgt))!;
    wires.push({
      id: wid,
      x1: src.x,
      y1: src.y,
      x2: tgt.x,
      y2: tgt.y,
      selfLoop: isNodeEnd(w.src) && isNodeEnd(w.tgt) &&
        endId(w.src) === endId(w.tgt),
    });
  }

  return {
    width: Math.max(...elements.map((e) => e.x), MARGIN) + MARGIN,
    height: Math.max(...elements.map((e) => e.y), MARGIN) + MARGIN,
    elements,
    wires,
    circles: g.circles.length,
  };
}

const SVG_NS = "http://www.w3.org/2000/svg";

export interface RenderHooks {
  highlighted?: Set<string>;
  selectedNodes?: Set<string>;
  onNodeClick?: (id: string) => void;
  onNodeDrag?: (id: string, worldX: number, worldY: number) => void;
}

/** Build an interactive SVG for a diagram. Nodes are clickable (scope
 * selection) and draggable; highlighted elements get a halo class. */
export function renderGraph(
  g: GraphDoc,
  theory: TheoryDoc | null,
  hooks: RenderHooks = {},
): SVGSVGElement {
  const layout = layoutGraph(g, theory);
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("width", String(layout.width));
  svg.setAttribute("height", String(layout.height));
  svg.classList.add("diagram");

  for (const wire of layout.wires) {
    const path = document.createElementNS(SVG_NS, "path");
    let d: string;
    if (wire.selfLoop) {
      d = `M ${wire.x1} ${wire.y1 - 8} C ${wire.x1 + 45} ${wire.y1 - 45}, ` +
        `${wire.x1 + 45} ${wire.y1 + 45}, ${wire.x2} ${wire.y2 + 8}`;
    } else {
      const mx = (wire.x1 + wire.x2) / 2;
      d = `M ${wire.x1} ${wire.y1} C ${mx} ${wire.y1}, ${mx} ${wire.y2}, ` +
        `${wire.x2} ${wire.y2}`;
    }
    path.setAttribute("d", d);
    path.setAttribute("class", "wire");
    path.setAttribute("marker-mid", "url(#arrow)");
    svg.appendChild(path);
  }

  for (let i = 0; i < layout.circles; i++) {
    const loop = document.createElementNS(SVG_NS, "circle");
    loop.setAttribute("cx", String(MARGIN + 18 + 40 * i));
    loop.setAttribute("cy", String(layout.height - 18));
    loop.setAttribute("r", "12");
    loop.setAttribute("class", "free-loop");
    svg.appendChild(loop);
  }

  for (const e of layout.elements) {
    const group = document.createElementNS(SVG_NS, "g");
    group.setAttribute("transform", `translate(${e.x},${e.y})`);
    group.dataset.id = e.id;
    let shape: SVGElement;
    if (e.kind === "node") {
      shape = document.createElementNS(SVG_NS, "circle");
      shape.setAttribute("r", "11");
      shape.setAttribute("fill", e.fill);
      shape.setAttribute("class", "node");
    } else {
      shape = document.createElementNS(SVG_NS, "circle");
      shape.setAttribute("r", "3.5");
      shape.setAttribute("class", `boundary ${e.kind}`);
    }
    if (hooks.highlighted?.has(e.id)) group.classList.add("highlight");
    if (hooks.selectedNodes?.has(e.id)) group.classList.add("selected");
    group.appendChild(shape);
    if (e.label) {
      const text = document.createElementNS(SVG_NS, "text");
      text.textContent = e.label;
      text.setAttribute("y", e.kind === "node" ? "4" : "-7");
      text.setAttribute("class", "label");
      group.appendChild(text);
    }
    if (e.kind === "node") {
      group.addEventListener("click", (event) => {
        event.stopPropagation();
        hooks.onNodeClick?.(e.id);
      });
      attachDrag(group, e, hooks);
    }
    svg.appendChild(group);
  }
  return svg;
}

function attachDrag(group: SVGElement, e: Placed, hooks: RenderHooks): void {
  if (!hooks.onNodeDrag) return;
  let dragging = false;
  let sx = 0;
  let sy = 0;
  group.addEventListener("pointerdown", (ev) => {
    dragging = true;
    sx = ev.clientX;
    sy = ev.clientY;
    group.setPointerCapture(ev.pointerId);
  });
  group.addEventListener("pointermove", (ev) => {
    if (!dragging) return;
    const nx = e.x + (ev.clientX - sx);
    const ny = e.y + (ev.clientY - sy);
    group.setAttribute("transform", `translate(${nx},${ny})`);
  });
  group.addEventListener("pointerup", (ev) => {
    if (!dragging) return;
    dragging = false;
    hooks.onNodeDrag?.(
      e.id,
      e.wx + (ev.clientX - sx) / SCALE,
      e.wy + (ev.clientY - sy) / SCALE,
    );
  });
}
