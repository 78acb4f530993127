// The derivation editor's behaviour, free of DOM concerns: every action
// issues protocol requests and folds acknowledged results into the view
// state. The browser shell (app.ts) only renders state and forwards
// input events here.

import type { Connection, MatchDoc, ServerEvent } from "./protocol.js";
import {
  ackBranch,
  ackExtend,
  addMatch,
  graphAt,
  initialState,
  Position,
  selectPosition,
  setScope,
  startDerivation,
  ViewState,
} from "./state.js";

export class Controller {
  state: ViewState = initialState();
  readonly conn: Connection;
  private changed: () => void;

  constructor(conn: Connection, onChange: () => void = () => undefined) {
    this.conn = conn;
    this.changed = onChange;
    conn.onDisconnect = () => {
      this.state.connected = false;
      this.changed();
    };
  }

  async openProject(): Promise<void> {
    const done = await this.conn.request("open_project");
    this.state.projectName = done.payload.name;
    this.state.rules = done.payload.rules;
    this.state.simprocs = done.payload.simprocs;
    this.state.graphs = done.payload.graphs;
    this.state.connected = true;
    this.changed();
  }

  async newDerivation(graphName: string): Promise<void> {
    const done = await this.conn.request("new_derivation", {
      graph: graphName,
    });
    startDerivation(
      this.state,
      done.payload.derivation_id,
      done.payload.derivation.root,
    );
    this.changed();
    await this.refreshMatches();
  }

  select(position: Position): void {
    selectPosition(this.state, position);
    this.changed();
    void this.refreshMatches();
  }

  selectScope(nodeIds: string[]): void {
    setScope(this.state, nodeIds);
    this.changed();
    void this.refreshMatches();
  }

  setPanel(panel: "rewrite" | "simplify"): void {
    this.state.panel = panel;
    this.changed();
    if (panel === "rewrite") void this.refreshMatches();
  }

  /** Eagerly look for matches of every rule on the selected part of the
   * graph at the selected head; matches stream into the panel as found. */
  async refreshMatches(): Promise<void> {
    const state = this.state;
    if (!state.derivation || state.panel !== "rewrite") return;
    if (!state.derivation.heads.has(state.selected)) return;
    const head = state.selected;
    state.matches = [];
    this.changed();
    const args: Record<string, unknown> = {
      graph: graphAt(state, head),
      rules: state.rules,
    };
    if (state.scope.size > 0) args.scope = [...state.scope];
    await this.conn.request(
      "find_matches",
      args,
      (ev: ServerEvent) => {
        addMatch(state, ev.payload.rule, ev.payload.match, head);
        this.changed();
      },
      (id) => {
        state.matchRequest = id;
      },
    );
    state.matchRequest = null;
    this.changed();
  }

  /** Node ids to highlight when hovering a match: the match image. */
  matchHighlight(match: MatchDoc): string[] {
    return [...new Set(Object.values(match.node_map))].sort();
  }

  /** Apply a streamed match at its head: the server extends the
   * derivation and acknowledges with the new step. */
  async applyMatch(item: { match: MatchDoc; forHead: Position }):
      Promise<void> {
    const d = this.state.derivation;
    if (!d) throw new Error("no open derivation");
    if (item.forHead !== this.state.selected ||
        !d.heads.has(item.forHead)) {
      // the graph advanced since this match streamed in
      this.state.matches = this.state.matches.filter((m) => m !== item);
      this.changed();
      return;
    }
    const done = await this.conn.request("extend_derivation", {
      derivation_id: d.id,
      head: item.forHead,
      match: item.match,
    });
    ackExtend(this.state, item.forHead, done.payload.step);
    this.changed();
    await this.refreshMatches();
  }

  async branch(position: Position): Promise<void> {
    const d = this.state.derivation;
    if (!d) throw new Error("no open derivation");
    await this.conn.request("branch_derivation", {
      derivation_id: d.id,
      position,
    });
    ackBranch(this.state, position);
    this.changed();
  }

  /** Run a simproc at the selected head, folding acknowledged steps into
   * the history as they stream. Resolves when the run terminates. */
  async runSimproc(name: string): Promise<void> {
    const state = this.state;
    const d = state.derivation;
    if (!d) throw new Error("no open derivation");
    if (state.runningSimproc !== null) {
      throw new Error("a simproc is already running on this derivation");
    }
    const head = state.selected;
    if (!d.heads.has(head)) throw new Error(`not a head: ${head}`);
    let current: Position = head;
    try {
      await this.conn.request(
        "run_simproc",
        { name, derivation_id: d.id, head },
        (ev: ServerEvent) => {
          ackExtend(state, current, ev.payload);
          current = ev.payload.step_id;
          this.changed();
        },
        (id) => {
          state.runningSimproc = id;
          this.changed();
        },
      );
    } finally {
      state.runningSimproc = null;
      this.changed();
    }
  }

  /** Stop the running simproc; already-received steps remain. */
  async stopSimproc(): Promise<void> {
    const id = this.state.runningSimproc;
    if (id === null) return;
    await this.conn.interrupt(id);
  }

  async exportTheorem(name: string): Promise<string> {
    const d = this.state.derivation;
    if (!d) throw new Error("no open derivation");
    const head = this.state.selected;
    if (!d.heads.has(head)) throw new Error(`not a head: ${head}`);
    const done = await this.conn.request("export_theorem", {
      derivation_id: d.id,
      head,
      name,
    });
    const ruleName: string = done.payload.rule.name;
    if (!this.state.rules.includes(ruleName)) {
      this.state.rules.push(ruleName);
    }
    this.changed();
    return ruleName;
  }

  /** Persist dragged node positions (and palette edits) for a named
   * project graph. */
  async saveGraph(name: string, graph: unknown): Promise<void> {
    await this.conn.request("save_graph", { name, graph });
  }
}
