// View state: a pure projection of server-acknowledged facts. Every
// history mutation shown corresponds to an acknowledged extend/branch
// event; streamed matches are dropped the moment the head they were found
// on advances.

import type { GraphDoc, MatchDoc, StepDoc } from "./protocol.js";

export type Position = string | null; // step id, or null for the root

export interface StepEntry {
  parent: Position;
  step: StepDoc;
}

export interface DerivationState {
  id: string;
  root: GraphDoc;
  steps: Map<string, StepEntry>;
  heads: Set<Position>;
}

export interface MatchItem {
  rule: string;
  match: MatchDoc;
  forHead: Position;
}

export type PanelMode = "rewrite" | "simplify";

export interface ViewState {
  projectName: string;
  rules: string[];
  simprocs: string[];
  graphs: string[];
  derivation: DerivationState | null;
  selected: Position;
  scope: Set<string>;
  panel: PanelMode;
  matches: MatchItem[];
  runningSimproc: number | null; // request id of the active run
  matchRequest: number | null;
  connected: boolean;
}

export function initialState(): ViewState {
  return {
    projectName: "",
    rules: [],
    simprocs: [],
    graphs: [],
    derivation: null,
    selected: null,
    scope: new Set(),
    panel: "rewrite",
    matches: [],
    runningSimproc: null,
    matchRequest: null,
    connected: false,
  };
}

export function startDerivation(
  state: ViewState,
  id: string,
  root: GraphDoc,
): void {
  state.derivation = { id, root, steps: new Map(), heads: new Set([null]) };
  state.selected = null;
  state.scope = new Set();
  state.matches = [];
}

/** Record a server-acknowledged extension: the step hangs under the head
 * it was applied at, which advances. */
export function ackExtend(
  state: ViewState,
  head: Position,
  step: StepDoc,
): void {
  const d = state.derivation;
  if (!d) throw new Error("no open derivation");
  if (!d.heads.has(head)) throw new Error(`not a head: ${head}`);
  if (d.steps.has(step.step_id)) {
    throw new Error(`duplicate step id: ${step.step_id}`);
  }
  d.steps.set(step.step_id, { parent: head, step });
  d.heads.delete(head);
  d.heads.add(step.step_id);
  if (state.selected === head) state.selected = step.step_id;
  // matches streamed for the old head are stale now
  state.matches = state.matches.filter((m) => m.forHead !== head);
}

export function ackBranch(state: ViewState, position: Position): void {
  const d = state.derivation;
  if (!d) throw new Error("no open derivation");
  if (position !== null && !d.steps.has(position)) {
    throw new Error(`unknown position: ${position}`);
  }
  d.heads.add(position);
}

export function graphAt(state: ViewState, position: Position): GraphDoc {
  const d = state.derivation;
  if (!d) throw new Error("no open derivation");
  if (position === null) return d.root;
  const entry = d.steps.get(position);
  if (!entry) throw new Error(`unknown position: ${position}`);
  return entry.step.result;
}

export function selectPosition(state: ViewState, position: Position): void {
  graphAt(state, position); // validates
  state.selected = position;
  state.scope = new Set();
  state.matches = [];
}

export function setScope(state: ViewState, nodeIds: Iterable<string>): void {
  const g = graphAt(state, state.selected);
  const chosen = new Set<string>();
  for (const id of nodeIds) {
    if (g.nodes[id] !== undefined) chosen.add(id);
  }
  state.scope = chosen;
  state.matches = [];
}

export function addMatch(
  state: ViewState,
  rule: string,
  match: MatchDoc,
  forHead: Position,
): void {
  // only surface matches for the still-current selection
  if (forHead !== state.selected) return;
  state.matches.push({ rule, match, forHead });
}

export function children(d: DerivationState, position: Position): string[] {
  const out: string[] = [];
  for (const [id, entry] of d.steps) {
    if (entry.parent === position) out.push(id);
  }
  return out.sort();
}

/** Flatten the history tree for display: depth-first, children in id
 * order; each row knows its indentation depth and head/selection flags. */
export interface HistoryRow {
  position: Position;
  depth: number;
  isHead: boolean;
  rule: string | null;
}

export function historyRows(state: ViewState): HistoryRow[] {
  const d = state.derivation;
  if (!d) return [];
  const rows: HistoryRow[] = [];
  const walk = (position: Position, depth: number) => {
    rows.push({
      position,
      depth,
      isHead: d.heads.has(position),
      rule: position === null ? null : d.steps.get(position)!.step.rule,
    });
    for (const child of children(d, position)) walk(child, depth + 1);
  };
  walk(null, 0);
  return rows;
}
