// Wire protocol: versioned JSON requests answered by event streams,
// multiplexed over one socket and demultiplexed by request id.

export const PROTOCOL_VERSION = 1;

export interface EndpointDoc {
  node?: string;
  boundary?: string;
}

export interface GraphDoc {
  theory: string;
  nodes: Record<string, { data: unknown; pos: [number, number] }>;
  wires: Record<string, { src: EndpointDoc; tgt: EndpointDoc; data: unknown }>;
  circles: unknown[];
  bboxes: Record<string, { contents: string[] }>;
}

export interface RuleDoc {
  name: string;
  lhs: GraphDoc;
  rhs: GraphDoc;
}

export interface MatchDoc {
  rule: string;
  multiplicity: Record<string, number>;
  node_map: Record<string, string>;
  wire_claims: Record<string, unknown>;
  subst: Record<string, string>;
  instance: RuleDoc;
}

export interface StepDoc {
  step_id: string;
  rule: string;
  multiplicity: Record<string, number>;
  node_map: Record<string, string>;
  fresh_nodes: string[];
  result: GraphDoc;
  head?: string;
}

export type EventKind = "match" | "step" | "warning" | "done" | "error";

export interface ServerEvent {
  v: number;
  id: number;
  event: EventKind;
  payload: any;
}

export interface SocketLike {
  send(text: string): void;
  close(): void;
  onmessage: ((ev: { data: string }) => void) | null;
  onclose: (() => void) | null;
  onopen: (() => void) | null;
}

interface Pending {
  onEvent: (ev: ServerEvent) => void;
  settle: (terminal: ServerEvent) => void;
}

/** One connection to the engine. Each request gets a fresh id; events are
 * routed to the caller's stream handler until the terminal event, which
 * resolves the returned promise. Unknown event kinds are ignored, and
 * events for unknown ids are dropped (the request may have been
 * abandoned). */
export class Connection {
  private socket: SocketLike;
  private nextId = 1;
  private pending = new Map<number, Pending>();
  onDisconnect: (() => void) | null = null;

  constructor(socket: SocketLike) {
    this.socket = socket;
    socket.onmessage = (ev) => this.dispatch(ev.data);
    socket.onclose = () => {
      const waiting = [...this.pending.values()];
      this.pending.clear();
      for (const p of waiting) {
        p.settle({ v: PROTOCOL_VERSION, id: -1, event: "error",
                   payload: { message: "disconnected" } });
      }
      if (this.onDisconnect) this.onDisconnect();
    };
  }

  private dispatch(text: string): void {
    let ev: ServerEvent;
    try {
      ev = JSON.parse(text);
    } catch {
      return;
    }
    if (!["match", "step", "warning", "done", "error"].includes(ev.event)) {
      return; // forward compatibility: ignore unknown kinds
    }
    const p = this.pending.get(ev.id);
    if (!p) return;
    if (ev.event === "done" || ev.event === "error") {
      this.pending.delete(ev.id);
      p.settle(ev);
    } else {
      p.onEvent(ev);
    }
  }

  /** Send a command; streamed events go to onEvent, the promise resolves
   * with the terminal done event (or rejects on error). Returns the
   * request id immediately via the out-parameter callback so the caller
   * can interrupt it later. */
  request(
    cmd: string,
    args: Record<string, unknown> = {},
    onEvent: (ev: ServerEvent) => void = () => undefined,
    onStarted: (id: number) => void = () => undefined,
  ): Promise<ServerEvent> {
    const id = this.nextId++;
    const promise = new Promise<ServerEvent>((resolve, reject) => {
      this.pending.set(id, {
        onEvent,
        settle: (terminal) => {
          if (terminal.event === "done") resolve(terminal);
          else reject(new Error(terminal.payload?.message ?? "error"));
        },
      });
    });
    onStarted(id);
    this.socket.send(JSON.stringify({ v: PROTOCOL_VERSION, id, cmd, ...args }));
    return promise;
  }

  interrupt(targetId: number): Promise<ServerEvent> {
    return this.request("interrupt", { target_id: targetId });
  }

  activeRequests(): number[] {
    return [...this.pending.keys()];
  }

  close(): void {
    this.socket.close();
  }
}

export function connectWebSocket(url: string): Promise<Connection> {
  return new Promise((resolve, reject) => {
    const ws = new WebSocket(url);
    const socket: SocketLike = {
      send: (t) => ws.send(t),
      close: () => ws.close(),
      onmessage: null,
      onclose: null,
      onopen: null,
    };
    ws.onmessage = (ev) => socket.onmessage?.({ data: String(ev.data) });
    ws.onclose = () => socket.onclose?.();
    ws.onerror = () => reject(new Error("websocket error"));
    ws.onopen = () => resolve(new Connection(socket));
  });
}
