"""Protocol service: streaming, interleaving, interruption, accounting."""

import json
import time

import pytest

from rewire.bialg import build_example_project
from rewire.matcher import find_bbox_matches
from rewire.persist import encode_graph, encode_match, load_project
from rewire.service import PROTOCOL_VERSION, Server, Session


@pytest.fixture()
def project(tmp_path):
    build_example_project(tmp_path / "proj")
    return load_project(tmp_path / "proj")


@pytest.fixture()
def session(project):
    s = Session(Server(project))
    yield s
    s.close()


def drain(session, request_id, timeout=30.0):
    """All events for one request id, up to its terminal event."""
    events = []
    deadline = time.time() + timeout
    while time.time() < deadline:
        ev = session.next_event(timeout=1.0)
        if ev is None:
            continue
        if ev["id"] != request_id:
            continue
        events.append(ev)
        if ev["event"] in ("done", "error"):
            return events
    raise TimeoutError(f"request {request_id} never terminated")


class TestBasicCommands:
    def test_open_project_describes_state(self, session):
        session.post({"v": 1, "id": 1, "cmd": "open_project"})
        events = drain(session, 1)
        assert [e["event"] for e in events] == ["done"]
        payload = events[0]["payload"]
        assert payload["name"] == "bialgebra"
        assert "axioms/distribute" in payload["rules"]
        assert payload["simprocs"] == ["basic_simp"]
        assert events[0]["v"] == PROTOCOL_VERSION

    def test_list_and_get(self, session):
        session.post({"v": 1, "id": 2, "cmd": "list_rules"})
        assert drain(session, 2)[0]["payload"]["rules"]
        session.post({"v": 1, "id": 3, "cmd": "list_simprocs"})
        assert drain(session, 3)[0]["payload"]["simprocs"] == ["basic_simp"]
        session.post({"v": 1, "id": 4, "cmd": "get_graph", "name": "pair"})
        payload = drain(session, 4)[0]["payload"]
        assert payload["graph"]["theory"] == "bialg"

    def test_unknown_command_and_graph(self, session):
        session.post({"v": 1, "id": 5, "cmd": "zap"})
        assert drain(session, 5)[-1]["event"] == "error"
        session.post({"v": 1, "id": 6, "cmd": "get_graph", "name": "zz"})
        events = drain(session, 6)
        assert events[-1]["event"] == "error"
        assert "unknown graph" in events[-1]["payload"]["message"]

    def test_malformed_request_gets_error_event(self, session):
        session.post_text("this is not json")
        ev = session.next_event(timeout=5)
        assert ev["event"] == "error"
        assert "bad JSON" in ev["payload"]["message"]

    def test_duplicate_request_id_rejected(self, session):
        session.post({"v": 1, "id": 9, "cmd": "list_rules"})
        drain(session, 9)
        session.post({"v": 1, "id": 9, "cmd": "list_rules"})
        ev = session.next_event(timeout=5)
        assert ev["event"] == "error"
        assert "duplicate" in ev["payload"]["message"]


class TestFindMatches:
    def test_matches_equal_direct_matcher_calls(self, session, project):
        session.post({"v": 1, "id": 1, "cmd": "find_matches",
                      "graph": "pair", "rules": list(project.rules)})
        events = drain(session, 1)
        assert events[-1]["event"] == "done"
        got = {(e["payload"]["rule"],
                json.dumps(e["payload"]["match"], sort_keys=True))
               for e in events[:-1]}
        expect = set()
        for name, rule in project.rules.items():
            for m in find_bbox_matches(rule, project.graphs["pair"]):
                expect.add((name, json.dumps(encode_match(m),
                                             sort_keys=True)))
        assert got == expect

    def test_scope_respected(self, session):
        session.post({"v": 1, "id": 2, "cmd": "find_matches",
                      "graph": "pair", "rules": ["axioms/distribute"],
                      "scope": ["w"]})
        events = drain(session, 2)
        assert [e["event"] for e in events] == ["done"]
        assert events[-1]["payload"]["counts"] == {"axioms/distribute": 0}

    def test_inline_graph_document(self, session, project):
        doc = encode_graph(project.graphs["pair"])
        session.post({"v": 1, "id": 3, "cmd": "find_matches", "graph": doc,
                      "rules": ["axioms/distribute"]})
        events = drain(session, 3)
        assert events[-1]["payload"]["counts"] == {"axioms/distribute": 4}


class TestConcurrency:
    def test_per_id_serializability_under_concurrency(self, session,
                                                      project):
        ids = [10, 11, 12, 13]
        for request_id in ids:
            session.post({"v": 1, "id": request_id, "cmd": "find_matches",
                          "graph": "pair", "rules": list(project.rules)})
        per_id = {i: [] for i in ids}
        terminated = set()
        deadline = time.time() + 60
        while len(terminated) < len(ids) and time.time() < deadline:
            ev = session.next_event(timeout=1.0)
            if ev is None or ev["id"] not in per_id:
                continue
            per_id[ev["id"]].append(ev)
            if ev["event"] in ("done", "error"):
                terminated.add(ev["id"])
        assert terminated == set(ids)

        serial = set()
        for name, rule in project.rules.items():
            for m in find_bbox_matches(rule, project.graphs["pair"]):
                serial.add((name, json.dumps(encode_match(m),
                                             sort_keys=True)))
        for request_id in ids:
            events = per_id[request_id]
            assert [e["event"] for e in events].count("done") == 1
            assert events[-1]["event"] == "done"
            got = {(e["payload"]["rule"],
                    json.dumps(e["payload"]["match"], sort_keys=True))
                   for e in events[:-1]}
            assert got == serial

    def test_exactly_one_terminal_event_per_request(self, session):
        for request_id in range(20, 26):
            session.post({"v": 1, "id": request_id, "cmd": "list_rules"})
        seen = {}
        deadline = time.time() + 30
        while sum(seen.values()) < 6 and time.time() < deadline:
            ev = session.next_event(timeout=1.0)
            if ev and ev["event"] in ("done", "error"):
                seen[ev["id"]] = seen.get(ev["id"], 0) + 1
        assert seen == {i: 1 for i in range(20, 26)}


class TestBackpressure:
    def test_producer_pauses_at_buffer_limit(self, project):
        """A request with hundreds of results only keeps BUFFER_LIMIT
        events in flight until the consumer drains them."""
        from rewire.graph import Endpoint, NodeData, OpenGraph, Wire
        from rewire.persist import encode_graph
        from rewire.service import BUFFER_LIMIT

        n_in = 6  # 6 interchangeable in-claims: 720 symmetric matches
        wires = {f"w{i}": Wire(Endpoint.boundary(f"i{i}"),
                               Endpoint.node("m")) for i in range(n_in)}
        wires["wo"] = Wire(Endpoint.node("m"), Endpoint.boundary("o"))
        target = OpenGraph("bialg", {"m": NodeData("white")}, wires)
        rule_lhs = OpenGraph("bialg", {"p": NodeData("white")}, {
            f"q{i}": Wire(Endpoint.boundary(f"a{i}"), Endpoint.node("p"))
            for i in range(n_in)} | {
            "qo": Wire(Endpoint.node("p"), Endpoint.boundary("b"))})
        from rewire.rule import Rule
        project.rules["axioms/wide"] = Rule("axioms/wide", rule_lhs,
                                            rule_lhs)

        from rewire.service import Server, Session
        session = Session(Server(project))
        try:
            session.post({"v": 1, "id": 1, "cmd": "find_matches",
                          "graph": encode_graph(target),
                          "rules": ["axioms/wide"]})
            time.sleep(1.0)  # producer must be parked at the limit
            backlog = session._out.qsize()
            assert backlog <= BUFFER_LIMIT + 1
            events = drain(session, 1, timeout=60)
            assert events[-1]["event"] == "done"
            import math
            assert len(events) - 1 == math.factorial(n_in)
        finally:
            session.close()

    def test_no_events_after_termination(self, session):
        session.post({"v": 1, "id": 1, "cmd": "find_matches",
                      "graph": "pair", "rules": ["axioms/distribute"]})
        events = drain(session, 1)
        assert events[-1]["event"] == "done"
        late = session.next_event(timeout=0.8)
        assert late is None or late["id"] != 1


class TestSimprocAndDerivations:
    def test_run_simproc_streams_steps(self, session):
        session.post({"v": 1, "id": 1, "cmd": "run_simproc",
                      "name": "basic_simp", "graph": "pair"})
        events = drain(session, 1)
        kinds = [e["event"] for e in events]
        assert kinds == ["step", "done"]
        assert events[0]["payload"]["rule"] == "axioms/distribute"
        assert events[-1]["payload"] == {"steps": 1}

    def test_unknown_simproc(self, session):
        session.post({"v": 1, "id": 2, "cmd": "run_simproc",
                      "name": "zz", "graph": "pair"})
        events = drain(session, 2)
        assert events[-1]["event"] == "error"

    def test_derivation_workflow(self, session, project):
        session.post({"v": 1, "id": 1, "cmd": "new_derivation",
                      "graph": "pair"})
        derivation_id = drain(session, 1)[0]["payload"]["derivation_id"]

        m = next(find_bbox_matches(project.rules["axioms/distribute"],
                                   project.graphs["pair"]))
        session.post({"v": 1, "id": 2, "cmd": "extend_derivation",
                      "derivation_id": derivation_id, "head": None,
                      "match": encode_match(m)})
        events = drain(session, 2)
        assert events[-1]["event"] == "done"
        head = events[-1]["payload"]["head"]
        assert head == "1"

        session.post({"v": 1, "id": 3, "cmd": "branch_derivation",
                      "derivation_id": derivation_id, "position": None})
        heads = drain(session, 3)[0]["payload"]["heads"]
        assert heads == [None, "1"]

        session.post({"v": 1, "id": 4, "cmd": "export_theorem",
                      "derivation_id": derivation_id, "head": "1",
                      "name": "theorems/via-service"})
        events = drain(session, 4)
        assert events[-1]["event"] == "done"
        assert events[-1]["payload"]["rule"]["name"] == "theorems/via-service"

        session.post({"v": 1, "id": 5, "cmd": "get_derivation",
                      "derivation_id": derivation_id})
        doc = drain(session, 5)[0]["payload"]["derivation"]
        assert set(doc["steps"]) == {"1"}

    def test_run_simproc_on_derivation_advances_head(self, session):
        session.post({"v": 1, "id": 1, "cmd": "new_derivation",
                      "graph": "merge-sample"})
        derivation_id = drain(session, 1)[0]["payload"]["derivation_id"]
        session.post({"v": 1, "id": 2, "cmd": "run_simproc",
                      "name": "basic_simp",
                      "derivation_id": derivation_id, "head": None})
        events = drain(session, 2)
        assert events[-1]["event"] == "done"
        assert events[-1]["payload"]["steps"] >= 1
        session.post({"v": 1, "id": 3, "cmd": "get_derivation",
                      "derivation_id": derivation_id})
        doc = drain(session, 3)[0]["payload"]["derivation"]
        assert len(doc["steps"]) == events[-1]["payload"]["steps"]


class TestInterrupt:
    def test_interrupt_unknown_id_warns(self, session):
        session.post({"v": 1, "id": 1, "cmd": "interrupt", "target_id": 99})
        events = drain(session, 1)
        assert [e["event"] for e in events] == ["warning", "done"]

    def test_interrupt_stops_simproc_stream(self, project):
        """A consumer interrupting after the first step sees only
        already-emitted steps plus a single terminal event."""
        slow = Session(Server(project))
        try:
            slow.post({"v": 1, "id": 1, "cmd": "run_simproc",
                       "name": "basic_simp", "graph": "merge-sample"})
            first = None
            deadline = time.time() + 20
            while first is None and time.time() < deadline:
                ev = slow.next_event(timeout=1.0)
                if ev and ev["id"] == 1:
                    first = ev
            assert first is not None and first["event"] == "step"
            slow.post({"v": 1, "id": 2, "cmd": "interrupt", "target_id": 1})
            streams = {1: [first], 2: []}
            finished = set()
            deadline = time.time() + 30
            while len(finished) < 2 and time.time() < deadline:
                ev = slow.next_event(timeout=1.0)
                if ev is None or ev["id"] not in streams:
                    continue
                streams[ev["id"]].append(ev)
                if ev["event"] in ("done", "error"):
                    finished.add(ev["id"])
            assert finished == {1, 2}
            # either the run finished before the interrupt landed or it
            # reports the interruption; both end with one terminal event
            assert streams[1][-1]["event"] == "done"
            assert all(e["event"] == "step" for e in streams[1][:-1])
        finally:
            slow.close()

    def test_interrupted_long_run_reports_reason(self, project):
        session = Session(Server(project))
        try:
            session.post({"v": 1, "id": 1, "cmd": "find_matches",
                          "graph": "merge-sample"})
            session.post({"v": 1, "id": 2, "cmd": "interrupt",
                          "target_id": 1})
            events = drain(session, 1)
            assert events[-1]["event"] == "done"
        finally:
            session.close()


class TestTransports:
    def test_websocket_round_trip(self, project):
        from fastapi.testclient import TestClient

        from rewire.service import build_app

        app = build_app(Server(project))
        client = TestClient(app)
        with client.websocket_connect("/api") as ws:
            ws.send_text(json.dumps({"v": 1, "id": 1, "cmd": "list_rules"}))
            ev = json.loads(ws.receive_text())
            assert ev["event"] == "done"
            assert "axioms/distribute" in ev["payload"]["rules"]

    def test_index_page_served(self, project):
        from fastapi.testclient import TestClient

        from rewire.service import build_app

        client = TestClient(build_app(Server(project)))
        response = client.get("/")
        assert response.status_code == 200
