"""The streaming request protocol between the engine and its clients.

Requests and events are JSON objects tagged with a protocol version and a
client-chosen request id. Every request is handled by its own worker and
terminates with exactly one `done` or `error` event; streaming commands
(`find_matches`, `run_simproc`) emit `match` / `step` events as results
are found. An `interrupt` request stops another request at its next
step or match boundary, which then terminates with done("interrupted").

Two transports carry the same frames: newline-delimited JSON on
stdin/stdout, and a WebSocket endpoint at /api (with the UI bundle, when
present, served statically at /).

Producers observe per-request backpressure: at most 64 events may be
buffered per request before the worker pauses.
"""

from __future__ import annotations

import json
import queue
import threading
import traceback
from pathlib import Path
from typing import Any, Callable, Optional

from fastapi import WebSocket, WebSocketDisconnect

from rewire.derivation import (DerivationError, branch, export_theorem,
                               extend, extend_with_match, graph_at,
                               new_derivation)
from rewire.graph import OpenGraph
from rewire.matcher import MatchError, find_bbox_matches
from rewire.persist import (DecodeError, Project, ProjectError, atomic_write,
                            decode_graph, decode_match, dumps,
                            encode_derivation, encode_graph, encode_match,
                            encode_rule, encode_theory_descriptor,
                            load_project)
from rewire.rewrite import RewriteError, apply_rewrite
from rewire.simproc import SimprocError, eval_simproc
from rewire.theory import TheoryError

PROTOCOL_VERSION = 1
BUFFER_LIMIT = 64
_POLL = 0.05


class ServiceError(Exception):
    """A request that cannot be served; reported as an error event."""


def _encode_step_event(step) -> dict:
    return {
        "step_id": step.step_id,
        "rule": step.rule_name,
        "multiplicity": dict(step.multiplicity),
        "node_map": dict(step.node_map),
        "fresh_nodes": sorted(v for v in step.result.nodes
                              if v.startswith(f"s{step.step_id}_")),
        "result": encode_graph(step.result),
    }


class Server:
    """Shared engine state: the open project and in-memory derivations.

    Mutations (opening projects, derivation ops, theorem export) are
    serialised through one coordinator lock; read-only work runs on
    immutable snapshots and needs no locking.
    """

    def __init__(self, project: Project) -> None:
        self.lock = threading.Lock()
        self.project = project
        self.derivations: dict[str, Any] = {}
        self._derivation_counter = 0

    def fresh_derivation_id(self) -> str:
        self._derivation_counter += 1
        return f"d{self._derivation_counter}"

    def resolve_graph(self, spec: Any, path: str) -> OpenGraph:
        """A graph argument is either a project graph name or an inline
        document."""
        if isinstance(spec, str):
            if spec not in self.project.graphs:
                raise ServiceError(f"unknown graph: {spec}")
            return self.project.graphs[spec]
        return decode_graph(spec, path)


class _Request:
    __slots__ = ("id", "cancel", "slots", "done")

    def __init__(self, request_id: int) -> None:
        self.id = request_id
        self.cancel = threading.Event()
        self.slots = threading.Semaphore(BUFFER_LIMIT)
        self.done = False


class Session:
    """One client connection: accepts requests, multiplexes the event
    streams of their workers into a single outgoing queue."""

    def __init__(self, server: Server) -> None:
        self.server = server
        self._out: queue.Queue = queue.Queue()
        self._requests: dict[int, _Request] = {}
        self._lock = threading.Lock()
        self._closed = threading.Event()
        self._threads: list[threading.Thread] = []

    # -- outgoing side ---------------------------------------------------

    def next_event(self, timeout: Optional[float] = None) -> Optional[dict]:
        """Blocking pull of the next outgoing event; None once the
        session is closed and drained."""
        while True:
            try:
                req, event = self._out.get(timeout=_POLL)
            except queue.Empty:
                if self._closed.is_set():
                    return None
                if timeout is not None:
                    timeout -= _POLL
                    if timeout <= 0:
                        return None
                continue
            if req is not None:
                req.slots.release()
            return event

    def close(self) -> None:
        self._closed.set()
        with self._lock:
            for req in self._requests.values():
                req.cancel.set()
        for t in self._threads:
            t.join(timeout=5)

    def _emit(self, req: Optional[_Request], event: str,
              payload: Any, request_id: Optional[int] = None) -> None:
        if req is not None:
            if req.done:
                return
            if event in ("done", "error"):
                req.done = True
            else:
                # backpressure; give up slots politely if cancelled
                while not req.slots.acquire(timeout=_POLL):
                    if self._closed.is_set():
                        return
                self._out.put((req, {"v": PROTOCOL_VERSION, "id": req.id,
                                     "event": event, "payload": payload}))
                return
        rid = req.id if req is not None else request_id
        self._out.put((None, {"v": PROTOCOL_VERSION, "id": rid,
                              "event": event, "payload": payload}))

    # -- incoming side ---------------------------------------------------

    def post_text(self, line: str) -> None:
        line = line.strip()
        if not line:
            return
        try:
            request = json.loads(line)
        except json.JSONDecodeError as e:
            self._emit(None, "error", {"message": f"bad JSON: {e}"}, None)
            return
        self.post(request)

    def post(self, request: Any) -> None:
        if (not isinstance(request, dict)
                or not isinstance(request.get("id"), int)
                or not isinstance(request.get("cmd"), str)):
            self._emit(None, "error",
                       {"message": "request needs integer 'id' and "
                                   "string 'cmd'"},
                       request.get("id") if isinstance(request, dict) else None)
            return
        request_id = request["id"]
        with self._lock:
            if request_id in self._requests:
                self._emit(None, "error",
                           {"message": f"duplicate request id {request_id}"},
                           request_id)
                return
            req = _Request(request_id)
            self._requests[request_id] = req
        worker = threading.Thread(target=self._run, args=(req, request),
                                  daemon=True)
        self._threads.append(worker)
        worker.start()

    def _run(self, req: _Request, request: dict) -> None:
        try:
            handler = _HANDLERS.get(request["cmd"])
            if handler is None:
                raise ServiceError(f"unknown command: {request['cmd']}")
            payload = handler(self, req, request)
            if req.cancel.is_set():
                self._emit(req, "done", {"reason": "interrupted"})
            else:
                self._emit(req, "done", payload or {})
        except (ServiceError, DecodeError, ProjectError, MatchError,
                RewriteError, DerivationError, SimprocError, TheoryError,
                KeyError) as e:
            self._emit(req, "error", {"message": str(e)})
        except Exception as e:  # engine bug: still terminate the request
            self._emit(req, "error",
                       {"message": f"internal error: {e}",
                        "trace": traceback.format_exc()})

    # -- command handlers --------------------------------------------------

    def _cmd_open_project(self, req: _Request, request: dict) -> dict:
        path = request.get("path")
        with self.server.lock:
            if path is not None:
                self.server.project = load_project(path)
                self.server.derivations.clear()
            project = self.server.project
            return {
                "name": project.name,
                "theory": encode_theory_descriptor(project.theory),
                "rules": list(project.rules),
                "simprocs": project.simprocs.names(),
                "graphs": sorted(project.graphs),
            }

    def _cmd_list_rules(self, req: _Request, request: dict) -> dict:
        return {"rules": list(self.server.project.rules)}

    def _cmd_list_simprocs(self, req: _Request, request: dict) -> dict:
        return {"simprocs": self.server.project.simprocs.names()}

    def _cmd_get_graph(self, req: _Request, request: dict) -> dict:
        name = request.get("name")
        if name not in self.server.project.graphs:
            raise ServiceError(f"unknown graph: {name}")
        return {"name": name,
                "graph": encode_graph(self.server.project.graphs[name])}

    def _cmd_save_graph(self, req: _Request, request: dict) -> dict:
        name = request.get("name")
        if not isinstance(name, str) or not name:
            raise ServiceError("save_graph needs a name")
        g = decode_graph(request.get("graph"), "graph")
        with self.server.lock:
            project = self.server.project
            project.graphs[name] = g
            if project.path is not None:
                atomic_write(project.path / "graphs" / f"{name}.graph",
                             dumps(encode_graph(g)))
        return {"name": name}

    def _cmd_find_matches(self, req: _Request, request: dict) -> dict:
        project = self.server.project
        target = self.server.resolve_graph(request.get("graph"), "graph")
        rule_names = request.get("rules")
        if rule_names is None:
            rule_names = list(project.rules)
        for name in rule_names:
            if name not in project.rules:
                raise ServiceError(f"unknown rule: {name}")
        scope = request.get("scope")
        scope_set = frozenset(scope) if scope is not None else None
        counts = {name: 0 for name in rule_names}

        def scan(name: str) -> None:
            for m in find_bbox_matches(project.rules[name], target,
                                       scope_set):
                if req.cancel.is_set():
                    return
                counts[name] += 1
                self._emit(req, "match",
                           {"rule": name, "match": encode_match(m)})

        threads = [threading.Thread(target=scan, args=(name,), daemon=True)
                   for name in rule_names]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        return {"counts": counts}

    def _cmd_apply_rewrite(self, req: _Request, request: dict) -> dict:
        target = self.server.resolve_graph(request.get("graph"), "graph")
        m = decode_match(request.get("match"), "match")
        step_id = request.get("step_id", "1")
        step = apply_rewrite(target, m, str(step_id))
        return {"step": _encode_step_event(step)}

    def _cmd_run_simproc(self, req: _Request, request: dict) -> dict:
        project = self.server.project
        name = request.get("name")
        simproc = project.simprocs.get(name)
        derivation_id = request.get("derivation_id")
        if derivation_id is not None:
            return self._run_simproc_on_derivation(req, name, simproc,
                                                   derivation_id,
                                                   request.get("head"))
        g = self.server.resolve_graph(request.get("graph"), "graph")
        count = 0
        for step in eval_simproc(simproc, g, project.rules,
                                 cancel=req.cancel):
            count += 1
            self._emit(req, "step", _encode_step_event(step))
        return {"steps": count}

    def _run_simproc_on_derivation(self, req: _Request, name: str, simproc,
                                   derivation_id: str,
                                   head: Optional[str]) -> dict:
        with self.server.lock:
            d = self._derivation(derivation_id)
            if head not in d.heads:
                raise ServiceError(f"not a head: {head}")
            start = 1 + max((int(s) for s in d.steps if s.isdigit()),
                            default=0)
            g = graph_at(d, head)
        count = 0
        for step in eval_simproc(simproc, g, self.server.project.rules,
                                 start_id=start, cancel=req.cancel):
            with self.server.lock:
                d = extend(self._derivation(derivation_id), head, step)
                self.server.derivations[derivation_id] = d
            head = step.step_id
            count += 1
            self._emit(req, "step",
                       dict(_encode_step_event(step), head=head))
        return {"steps": count, "head": head}

    def _derivation(self, derivation_id: str):
        d = self.server.derivations.get(derivation_id)
        if d is None:
            raise ServiceError(f"unknown derivation: {derivation_id}")
        return d

    def _cmd_new_derivation(self, req: _Request, request: dict) -> dict:
        g = self.server.resolve_graph(request.get("graph"), "graph")
        with self.server.lock:
            derivation_id = self.server.fresh_derivation_id()
            self.server.derivations[derivation_id] = new_derivation(g)
        return {"derivation_id": derivation_id,
                "derivation": encode_derivation(
                    self.server.derivations[derivation_id])}

    def _cmd_extend_derivation(self, req: _Request, request: dict) -> dict:
        m = decode_match(request.get("match"), "match")
        head = request.get("head")
        with self.server.lock:
            d = self._derivation(request.get("derivation_id"))
            d2, step = extend_with_match(d, head, m)
            self.server.derivations[request["derivation_id"]] = d2
        return {"step": _encode_step_event(step), "head": step.step_id}

    def _cmd_branch_derivation(self, req: _Request, request: dict) -> dict:
        position = request.get("position")
        with self.server.lock:
            d = self._derivation(request.get("derivation_id"))
            d2 = branch(d, position)
            self.server.derivations[request["derivation_id"]] = d2
            return {"heads": sorted(d2.heads,
                                    key=lambda h: "" if h is None else h)}

    def _cmd_get_derivation(self, req: _Request, request: dict) -> dict:
        with self.server.lock:
            d = self._derivation(request.get("derivation_id"))
            return {"derivation": encode_derivation(d)}

    def _cmd_export_theorem(self, req: _Request, request: dict) -> dict:
        name = request.get("name")
        if not isinstance(name, str) or not name.startswith("theorems/"):
            raise ServiceError("theorem name must start with 'theorems/'")
        head = request.get("head")
        with self.server.lock:
            project = self.server.project
            derivation_id = request.get("derivation_id")
            d = self._derivation(derivation_id)
            theorem = export_theorem(d, head, name,
                                     existing_names=set(project.rules))
            derivation_name = f"exported-{derivation_id}"
            project.add_theorem(theorem, derivation_name)
            project.derivations[derivation_name] = d
            if project.path is not None:
                atomic_write(
                    project.path / "derivations" /
                    f"{derivation_name}.derive",
                    dumps(encode_derivation(d)))
                stem = name.split("/", 1)[1]
                atomic_write(
                    project.path / "theorems" / f"{stem}.rule",
                    dumps(encode_rule(
                        theorem, project.theorem_links[name])))
        return {"rule": encode_rule(theorem)}

    def _cmd_interrupt(self, req: _Request, request: dict) -> dict:
        target_id = request.get("target_id")
        with self._lock:
            target = self._requests.get(target_id)
        if target is None or target.done:
            self._emit(req, "warning",
                       {"message": f"no active request {target_id}"})
            return {}
        target.cancel.set()
        return {"interrupted": target_id}


_HANDLERS: dict[str, Callable[[Session, _Request, dict], Optional[dict]]] = {
    "open_project": Session._cmd_open_project,
    "list_rules": Session._cmd_list_rules,
    "list_simprocs": Session._cmd_list_simprocs,
    "get_graph": Session._cmd_get_graph,
    "save_graph": Session._cmd_save_graph,
    "find_matches": Session._cmd_find_matches,
    "apply_rewrite": Session._cmd_apply_rewrite,
    "run_simproc": Session._cmd_run_simproc,
    "new_derivation": Session._cmd_new_derivation,
    "extend_derivation": Session._cmd_extend_derivation,
    "branch_derivation": Session._cmd_branch_derivation,
    "get_derivation": Session._cmd_get_derivation,
    "export_theorem": Session._cmd_export_theorem,
    "interrupt": Session._cmd_interrupt,
}


# -- transports ------------------------------------------------------------------


def serve_stdio(server: Server, stdin=None, stdout=None) -> None:
    """Newline-delimited JSON over standard input/output; returns on EOF."""
    import sys
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    session = Session(server)
    stopped = threading.Event()

    def writer() -> None:
        while True:
            event = session.next_event(timeout=0.2)
            if event is not None:
                stdout.write(json.dumps(event, sort_keys=True) + "\n")
                stdout.flush()
            elif stopped.is_set():
                return

    out = threading.Thread(target=writer, daemon=True)
    out.start()
    try:
        for line in stdin:
            session.post_text(line)
    finally:
        session.close()
        stopped.set()
        out.join(timeout=5)


def build_app(server: Server, ui_dir: Optional[Path] = None):
    """The FastAPI app: WebSocket protocol at /api, UI bundle at /."""
    import asyncio

    from fastapi import FastAPI
    from fastapi.responses import HTMLResponse
    from fastapi.staticfiles import StaticFiles

    app = FastAPI(title="rewire")

    @app.websocket("/api")
    async def api(ws: WebSocket) -> None:
        await ws.accept()
        session = Session(server)
        loop = asyncio.get_running_loop()

        async def sender() -> None:
            while True:
                event = await loop.run_in_executor(
                    None, session.next_event, 0.2)
                if event is None:
                    if session._closed.is_set():
                        return
                    continue
                await ws.send_text(json.dumps(event, sort_keys=True))

        task = asyncio.create_task(sender())
        try:
            while True:
                session.post_text(await ws.receive_text())
        except WebSocketDisconnect:
            pass
        finally:
            session.close()
            task.cancel()

    if ui_dir is not None and ui_dir.is_dir():
        app.mount("/", StaticFiles(directory=ui_dir, html=True),
                  name="ui")
    else:
        @app.get("/")
        def index() -> HTMLResponse:
            return HTMLResponse(
                "<html><body><h1>rewire engine</h1>"
                "<p>No UI bundle found; the protocol endpoint is at "
                "<code>/api</code>.</p></body></html>")

    return app


def serve_http(server: Server, port: int,
               ui_dir: Optional[Path] = None) -> None:
    import uvicorn

    uvicorn.run(build_app(server, ui_dir), host="127.0.0.1", port=port,
                log_level="warning")
