// A scripted double of the engine's wire protocol, faithful to the frame
// shapes and the one-terminal-event-per-request contract, with just
// enough rewriting behaviour for the editor workflow tests.

import type { GraphDoc, MatchDoc, SocketLike, StepDoc } from
  "../src/protocol.js";

export function pairGraph(): GraphDoc {
  return {
    theory: "bialg",
    nodes: {
      w: { data: "white", pos: [-0.75, 0] },
      g: { data: "gray", pos: [0.75, 0] },
    },
    wires: {
      wa: { src: { boundary: "a" }, tgt: { node: "w" }, data: null },
      wb: { src: { boundary: "b" }, tgt: { node: "w" }, data: null },
      wm: { src: { node: "w" }, tgt: { node: "g" }, data: null },
      wc: { src: { node: "g" }, tgt: { boundary: "c" }, data: null },
      wd: { src: { node: "g" }, tgt: { boundary: "d" }, data: null },
    },
    circles: [],
    bboxes: {},
  };
}

export function bipartiteResult(step: string): GraphDoc {
  const n = (s: string) => `s${step}_${s}`;
  return {
    theory: "bialg",
    nodes: {
      [n("gb@b:1")]: { data: "gray", pos: [-0.75, 0.4] },
      [n("gb@b:2")]: { data: "gray", pos: [-0.75, -0.4] },
      [n("wc@c:1")]: { data: "white", pos: [0.75, 0.4] },
      [n("wc@c:2")]: { data: "white", pos: [0.75, -0.4] },
    },
    wires: {
      wa: { src: { boundary: "a" }, tgt: { node: n("gb@b:1") }, data: null },
      wb: { src: { boundary: "b" }, tgt: { node: n("gb@b:2") }, data: null },
      [n("k1")]: { src: { node: n("gb@b:1") }, tgt: { node: n("wc@c:1") },
                   data: null },
      [n("k2")]: { src: { node: n("gb@b:1") }, tgt: { node: n("wc@c:2") },
                   data: null },
      [n("k3")]: { src: { node: n("gb@b:2") }, tgt: { node: n("wc@c:1") },
                   data: null },
      [n("k4")]: { src: { node: n("gb@b:2") }, tgt: { node: n("wc@c:2") },
                   data: null },
      wc: { src: { node: n("wc@c:1") }, tgt: { boundary: "c" }, data: null },
      wd: { src: { node: n("wc@c:2") }, tgt: { boundary: "d" }, data: null },
    },
    circles: [],
    bboxes: {},
  };
}

export function distributeMatch(): MatchDoc {
  return {
    rule: "axioms/distribute",
    multiplicity: { b: 2, c: 2 },
    node_map: { w: "w", g: "g" },
    wire_claims: {
      wa: { ends: { producer: null, consumer: "bw@b:1" } },
      wb: { ends: { producer: null, consumer: "bw@b:2" } },
      wm: { whole: "mw" },
      wc: { ends: { producer: "cw@c:1", consumer: null } },
      wd: { ends: { producer: "cw@c:2", consumer: null } },
    },
    subst: {},
    instance: {
      name: "axioms/distribute",
      lhs: pairGraph(),
      rhs: bipartiteResult("x"),
    },
  };
}

interface Sent {
  v: number;
  id: number;
  cmd: string;
  [key: string]: unknown;
}

export class FakeServer {
  socket: SocketLike;
  log: Sent[] = [];
  /** Requests the scripted server leaves running until interrupted. */
  private streaming = new Map<number, { emitted: number }>();
  simprocStepsBeforeInterrupt = 2;
  private derivationSteps = 0;

  constructor() {
    this.socket = {
      send: (text: string) => this.receive(JSON.parse(text) as Sent),
      close: () => undefined,
      onmessage: null,
      onclose: null,
      onopen: null,
    };
  }

  private emit(id: number, event: string, payload: unknown): void {
    this.socket.onmessage?.({
      data: JSON.stringify({ v: 1, id, event, payload }),
    });
  }

  private receive(request: Sent): void {
    this.log.push(request);
    const { id, cmd } = request;
    switch (cmd) {
      case "open_project":
        this.emit(id, "done", {
          name: "bialgebra",
          theory: { name: "bialg", styles: {} },
          rules: ["axioms/red-merge", "axioms/red-id", "axioms/green-merge",
                  "axioms/green-id", "axioms/distribute"],
          simprocs: ["basic_simp"],
          graphs: ["merge-sample", "ouroboros", "pair"],
        });
        break;
      case "get_graph":
        this.emit(id, "done", { name: request.name,
                                graph: pairGraph() });
        break;
      case "save_graph":
        this.emit(id, "done", { name: request.name });
        break;
      case "new_derivation":
        this.emit(id, "done", {
          derivation_id: "d1",
          derivation: { root: pairGraph(), steps: {}, heads: [null] },
        });
        break;
      case "find_matches": {
        const scope = request.scope as string[] | undefined;
        const visible = !scope ||
          (scope.includes("w") && scope.includes("g"));
        if (visible) {
          this.emit(id, "match", {
            rule: "axioms/distribute",
            match: distributeMatch(),
          });
        }
        this.emit(id, "done", {
          counts: { "axioms/distribute": visible ? 1 : 0 },
        });
        break;
      }
      case "extend_derivation": {
        this.derivationSteps += 1;
        const stepId = String(this.derivationSteps);
        const step: StepDoc = {
          step_id: stepId,
          rule: (request.match as MatchDoc).rule,
          multiplicity: (request.match as MatchDoc).multiplicity,
          node_map: (request.match as MatchDoc).node_map,
          fresh_nodes: Object.keys(bipartiteResult(stepId).nodes),
          result: bipartiteResult(stepId),
        };
        this.emit(id, "done", { step, head: stepId });
        break;
      }
      case "branch_derivation":
        this.emit(id, "done", { heads: [null, "1"] });
        break;
      case "run_simproc": {
        // stream a couple of steps, then wait for the interrupt
        const state = { emitted: 0 };
        this.streaming.set(id, state);
        for (let k = 0; k < this.simprocStepsBeforeInterrupt; k++) {
          this.derivationSteps += 1;
          const stepId = String(this.derivationSteps);
          state.emitted += 1;
          this.emit(id, "step", {
            step_id: stepId,
            rule: "axioms/red-merge",
            multiplicity: { b: 1, c: 2 },
            node_map: {},
            fresh_nodes: [],
            result: pairGraph(),
            head: stepId,
          });
        }
        break;
      }
      case "interrupt": {
        const target = request.target_id as number;
        const running = this.streaming.get(target);
        if (running === undefined) {
          this.emit(id, "warning", { message: `no active request ${target}` });
          this.emit(id, "done", {});
          break;
        }
        this.streaming.delete(target);
        this.emit(target, "done", { reason: "interrupted",
                                    steps: running.emitted });
        this.emit(id, "done", { interrupted: target });
        break;
      }
      case "export_theorem":
        this.emit(id, "done", {
          rule: { name: request.name, lhs: pairGraph(),
                  rhs: bipartiteResult("1") },
        });
        break;
      default:
        this.emit(id, "error", { message: `unknown command: ${cmd}` });
    }
  }
}
