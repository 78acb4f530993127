// Browser shell: renders the controller's state into the three-pane
// derivation editor (history left, diagram centre, controls right) and
// forwards input events. All rewriting happens on the server.

import { Controller } from "./controller.js";
import { addBoundary, addNode, addWire } from "./editor.js";
import { connectWebSocket, GraphDoc, ServerEvent } from "./protocol.js";
import { historyRows, graphAt } from "./state.js";
import { renderGraph, TheoryDoc } from "./render.js";

let controller: Controller | null = null;
let theory: TheoryDoc | null = null;
let hoverHighlight = new Set<string>();
let editGraph: GraphDoc | null = null;
let editSelection: string[] = [];

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  cls?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

function byId(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
}

function render(): void {
  if (!controller) return;
  const state = controller.state;
  byId("project-name").textContent = state.projectName || "(no project)";
  byId("banner").style.display = state.connected ? "none" : "block";

  renderGraphPicker(state.graphs);
  renderHistory();
  renderDiagram();
  renderRewritePanel();
  renderSimplifyPanel();
}

function renderGraphPicker(graphs: string[]): void {
  const picker = byId("graph-picker") as HTMLSelectElement;
  if (picker.options.length !== graphs.length) {
    picker.innerHTML = "";
    for (const name of graphs) {
      const option = document.createElement("option");
      option.value = name;
      option.textContent = name;
      picker.appendChild(option);
    }
  }
}

function renderHistory(): void {
  const state = controller!.state;
  const container = byId("history");
  container.innerHTML = "";
  for (const row of historyRows(state)) {
    const label = row.position === null ? "root" :
      `${row.position}: ${row.rule}`;
    const item = el("div", "history-row", label);
    item.style.paddingLeft = `${8 + row.depth * 14}px`;
    if (row.isHead) item.classList.add("head");
    if (row.position === state.selected) item.classList.add("current");
    item.onclick = () => controller!.select(row.position);
    container.appendChild(item);
  }
}

function renderDiagram(): void {
  const state = controller!.state;
  const stage = byId("stage");
  stage.innerHTML = "";
  byId("palette").style.display = state.derivation ? "none" : "flex";
  if (!state.derivation) {
    if (editGraph) {
      stage.appendChild(renderGraph(editGraph, theory, {
        selectedNodes: new Set(editSelection),
        onNodeClick: (id) => {
          editSelection = [...editSelection.filter((x) => x !== id), id]
            .slice(-2);
          renderDiagram();
        },
      }));
    } else {
      stage.appendChild(el("p", "hint",
        "Pick a graph to edit it, or start a derivation."));
    }
    return;
  }
  const selected = state.selected;
  if (selected !== null && !state.derivation.heads.has(selected)) {
    // a proof step: before and after side by side, changes highlighted
    const entry = state.derivation.steps.get(selected)!;
    const before = graphAt(state, entry.parent);
    const deleted = new Set(Object.values(entry.step.node_map));
    const fresh = new Set(entry.step.fresh_nodes);
    stage.appendChild(pane("before", before, deleted));
    stage.appendChild(pane("after", entry.step.result, fresh));
    return;
  }
  const g = graphAt(state, selected);
  const svg = renderGraph(g, theory, {
    highlighted: hoverHighlight,
    selectedNodes: state.scope,
    onNodeClick: (id) => {
      const next = new Set(state.scope);
      if (next.has(id)) next.delete(id);
      else next.add(id);
      controller!.selectScope([...next]);
    },
    onNodeDrag: (id, x, y) => void persistPosition(g, id, x, y),
  });
  stage.appendChild(svg);
}

function pane(title: string, g: GraphDoc, mark: Set<string>): HTMLElement {
  const wrap = el("div", "pane");
  wrap.appendChild(el("h3", undefined, title));
  wrap.appendChild(renderGraph(g, theory, { highlighted: mark }));
  return wrap;
}

async function persistPosition(
  g: GraphDoc,
  id: string,
  x: number,
  y: number,
): Promise<void> {
  const picker = byId("graph-picker") as HTMLSelectElement;
  const copy: GraphDoc = JSON.parse(JSON.stringify(g));
  copy.nodes[id].pos = [x, y];
  await controller!.saveGraph(picker.value, copy);
  render();
}

function renderRewritePanel(): void {
  const state = controller!.state;
  const list = byId("matches");
  list.innerHTML = "";
  byId("rewrite-panel").style.display =
    state.panel === "rewrite" ? "block" : "none";
  for (const item of state.matches) {
    const row = el("div", "match-row",
      `${item.rule}  @${JSON.stringify(item.match.multiplicity)}`);
    row.onmouseenter = () => {
      hoverHighlight = new Set(controller!.matchHighlight(item.match));
      renderDiagram();
    };
    row.onmouseleave = () => {
      hoverHighlight = new Set();
      renderDiagram();
    };
    row.onclick = () => void controller!.applyMatch(item).catch(reportError);
    list.appendChild(row);
  }
  if (state.matchRequest !== null) {
    list.appendChild(el("div", "hint", "searching..."));
  }
}

function renderSimplifyPanel(): void {
  const state = controller!.state;
  byId("simplify-panel").style.display =
    state.panel === "simplify" ? "block" : "none";
  const list = byId("simprocs");
  list.innerHTML = "";
  for (const name of state.simprocs) {
    const row = el("div", "match-row", name);
    row.onclick = () => void controller!.runSimproc(name).catch(reportError);
    list.appendChild(row);
  }
  (byId("stop-simproc") as HTMLButtonElement).disabled =
    state.runningSimproc === null;
}

async function loadForEditing(name: string): Promise<void> {
  if (!controller || controller.state.derivation) return;
  editSelection = [];
  const ev = await controller.conn.request("get_graph", { name });
  editGraph = ev.payload.graph as GraphDoc;
  renderDiagram();
}

function paletteAddNode(colour: string): void {
  if (!editGraph) return;
  const x = Object.keys(editGraph.nodes).length;
  editGraph = addNode(editGraph, colour, [x, 0]).graph;
  void paletteSave();
}

function paletteBoundary(kind: "input" | "output"): void {
  if (!editGraph || editSelection.length === 0) return;
  editGraph = addBoundary(editGraph,
                          editSelection[editSelection.length - 1],
                          kind).graph;
  void paletteSave();
}

async function paletteSave(): Promise<void> {
  const picker = byId("graph-picker") as HTMLSelectElement;
  if (!editGraph) return;
  await controller!.saveGraph(picker.value, editGraph);
  renderDiagram();
}

function reportError(err: unknown): void {
  const banner = byId("error");
  banner.textContent = String(err instanceof Error ? err.message : err);
  banner.style.display = "block";
  setTimeout(() => {
    banner.style.display = "none";
  }, 4000);
}

async function boot(): Promise<void> {
  const url = `ws://${location.host}/api`;
  const conn = await connectWebSocket(url);
  controller = new Controller(conn, render);

  const open = await conn.request("open_project");
  theory = open.payload.theory as TheoryDoc;
  await controller.openProject();

  const picker = byId("graph-picker") as HTMLSelectElement;
  byId("new-derivation").onclick = () => {
    editGraph = null;
    void controller!.newDerivation(picker.value).catch(reportError);
  };
  picker.onchange = () => void loadForEditing(picker.value);
  byId("palette-white").onclick = () => paletteAddNode("white");
  byId("palette-gray").onclick = () => paletteAddNode("gray");
  byId("palette-wire").onclick = () => {
    if (!editGraph || editSelection.length !== 2) return;
    editGraph = addWire(editGraph, editSelection[0],
                        editSelection[1]).graph;
    void paletteSave();
  };
  byId("palette-input").onclick = () => paletteBoundary("input");
  byId("palette-output").onclick = () => paletteBoundary("output");
  byId("branch").onclick = () =>
    void controller!.branch(controller!.state.selected).catch(reportError);
  byId("stop-simproc").onclick = () =>
    void controller!.stopSimproc().catch(reportError);
  byId("export-theorem").onclick = () => {
    const name = prompt("Theorem name", "theorems/my-theorem");
    if (name) void controller!.exportTheorem(name).catch(reportError);
  };
  for (const mode of ["rewrite", "simplify"] as const) {
    byId(`tab-${mode}`).onclick = () => controller!.setPanel(mode);
  }
  render();
}

void boot().catch((err: unknown) => {
  document.body.textContent = `failed to connect: ${err}`;
});

export { render };
export type { ServerEvent };
