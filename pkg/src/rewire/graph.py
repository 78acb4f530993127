"""Open graphs: the data model for string diagrams.

An open graph has typed nodes, directed wires, named boundary points and a
multiset of circles (closed loops carrying only edge data). Boundary points
are not stored separately: a boundary id exists by occurring in exactly one
wire endpoint. An id occurring as a wire source is an *input* of the graph,
as a wire target an *output*.

Graphs may also carry !-boxes: named, pairwise-disjoint sets of node and
boundary ids marking repeatable subdiagrams (see :mod:`rewire.rule`).

All graphs are immutable values: every operation returns a new graph, and
values can be shared freely between threads. All enumeration orders are
lexicographic on ids, so every operation in this module is deterministic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from types import MappingProxyType
from typing import Any, Callable, Iterator, Mapping, Optional


class GraphError(Exception):
    """Raised on malformed graph operations (bad ids, bad composition)."""


@dataclass(frozen=True)
class Endpoint:
    """One end of a wire: either a node or a named boundary point."""

    kind: str  # "node" | "boundary"
    id: str

    @staticmethod
    def node(node_id: str) -> Endpoint:
        return Endpoint("node", node_id)

    @staticmethod
    def boundary(label: str) -> Endpoint:
        return Endpoint("boundary", label)

    @property
    def is_node(self) -> bool:
        return self.kind == "node"

    @property
    def is_boundary(self) -> bool:
        return self.kind == "boundary"

    def __repr__(self) -> str:
        return f"{self.kind[0]}:{self.id}"


@dataclass(frozen=True)
class NodeData:
    """Payload and layout position of a node. The payload belongs to the
    graph's theory and is treated as a black box here."""

    data: Any
    pos: tuple[float, float] = (0.0, 0.0)


@dataclass(frozen=True)
class Wire:
    """A directed wire between two endpoints, carrying theory edge data.

    Self-loops (both endpoints on one node) and parallel wires are allowed.
    """

    src: Endpoint
    tgt: Endpoint
    data: Any = None


class OpenGraph:
    """A string diagram.

    Construct with plain dicts; the graph takes (shallow) copies and is
    immutable afterwards. Node and boundary ids live in one namespace for
    !-box membership, so an id may not be used as both.
    """

    __slots__ = ("theory_name", "nodes", "wires", "circles", "bboxes",
                 "_adjacency", "_boundary")

    def __init__(self,
                 theory_name: str,
                 nodes: Mapping[str, NodeData] | None = None,
                 wires: Mapping[str, Wire] | None = None,
                 circles: tuple[Any, ...] | list[Any] = (),
                 bboxes: Mapping[str, frozenset[str]] | None = None) -> None:
        object.__setattr__(self, "theory_name", theory_name)
        object.__setattr__(self, "nodes",
                           MappingProxyType(dict(nodes or {})))
        object.__setattr__(self, "wires",
                           MappingProxyType(dict(wires or {})))
        object.__setattr__(self, "circles", tuple(circles))
        object.__setattr__(self, "bboxes", MappingProxyType(
            {b: frozenset(members) for b, members in (bboxes or {}).items()}))
        object.__setattr__(self, "_adjacency", None)
        object.__setattr__(self, "_boundary", None)

    def __setattr__(self, name: str, value: Any) -> None:
        raise AttributeError("OpenGraph is immutable")

    def __reduce__(self):
        return (OpenGraph, (self.theory_name, dict(self.nodes),
                            dict(self.wires), self.circles,
                            dict(self.bboxes)))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, OpenGraph):
            return NotImplemented
        return (self.theory_name == other.theory_name
                and dict(self.nodes) == dict(other.nodes)
                and dict(self.wires) == dict(other.wires)
                and sorted(self.circles, key=repr) == sorted(other.circles, key=repr)
                and dict(self.bboxes) == dict(other.bboxes))

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return (f"OpenGraph({self.theory_name!r}, {len(self.nodes)} nodes, "
                f"{len(self.wires)} wires, {len(self.circles)} circles, "
                f"{len(self.bboxes)} bboxes)")

    # -- structure accessors ------------------------------------------------

    def _adj(self) -> dict[str, tuple[list[str], list[str]]]:
        """Per-node (in-wire ids, out-wire ids), sorted; cached."""
        adj = object.__getattribute__(self, "_adjacency")
        if adj is None:
            adj = {v: ([], []) for v in self.nodes}
            for wid in sorted(self.wires):
                w = self.wires[wid]
                if w.src.is_node and w.src.id in adj:
                    adj[w.src.id][1].append(wid)
                if w.tgt.is_node and w.tgt.id in adj:
                    adj[w.tgt.id][0].append(wid)
            object.__setattr__(self, "_adjacency", adj)
        return adj

    def in_wires(self, v: str) -> list[str]:
        """Ids of wires with target `v`, sorted."""
        return list(self._adj()[v][0])

    def out_wires(self, v: str) -> list[str]:
        """Ids of wires with source `v`, sorted."""
        return list(self._adj()[v][1])

    def in_degree(self, v: str) -> int:
        return len(self._adj()[v][0])

    def out_degree(self, v: str) -> int:
        return len(self._adj()[v][1])

    def degree_pair(self, v: str) -> tuple[int, int]:
        io = self._adj()[v]
        return (len(io[0]), len(io[1]))

    def boundary_ids(self) -> frozenset[str]:
        ins, outs = boundary(self)
        return ins | outs

    def node_ids_of_bbox(self, b: str) -> frozenset[str]:
        return frozenset(m for m in self.bboxes[b] if m in self.nodes)

    def boundary_ids_of_bbox(self, b: str) -> frozenset[str]:
        return frozenset(m for m in self.bboxes[b] if m not in self.nodes)

    def bbox_of(self, element_id: str) -> Optional[str]:
        """The !-box containing the given node/boundary id, if any."""
        for b, members in self.bboxes.items():
            if element_id in members:
                return b
        return None


def empty_graph(theory_name: str) -> OpenGraph:
    return OpenGraph(theory_name)


# -- validation ---------------------------------------------------------------


def validate(g: OpenGraph) -> list[str]:
    """Check every structural invariant of `g`.

    Returns a list of human-readable violations naming the offending ids;
    the empty list means the graph is well-formed. Layout positions are
    never inspected.
    """
    violations: list[str] = []
    boundary_occurrences: dict[str, list[str]] = {}

    for wid in sorted(g.wires):
        w = g.wires[wid]
        for ep in (w.src, w.tgt):
            if ep.is_node:
                if ep.id not in g.nodes:
                    violations.append(f"wire {wid}: unknown node {ep.id}")
            else:
                boundary_occurrences.setdefault(ep.id, []).append(wid)

    for label, wids in sorted(boundary_occurrences.items()):
        if len(wids) > 1:
            violations.append(
                f"boundary used twice: {label} (wires {', '.join(wids)})")
        if label in g.nodes:
            violations.append(f"id used as both node and boundary: {label}")

    element_ids = set(g.nodes) | set(boundary_occurrences)
    seen: dict[str, str] = {}
    for b in sorted(g.bboxes):
        for m in sorted(g.bboxes[b]):
            if m not in element_ids:
                violations.append(f"bbox {b}: unknown member {m}")
            elif m in seen:
                violations.append(
                    f"bbox overlap: {seen[m]} and {b} share {m}")
            else:
                seen[m] = b

    def membership(ep: Endpoint) -> Optional[str]:
        return seen.get(ep.id)

    for wid in sorted(g.wires):
        w = g.wires[wid]
        if w.src.is_boundary and w.tgt.is_boundary:
            if membership(w.src) != membership(w.tgt):
                violations.append(f"bare wire crosses box border: {wid}")
            continue
        for node_end, other in ((w.src, w.tgt), (w.tgt, w.src)):
            if node_end.is_node and other.is_boundary:
                b = membership(node_end)
                if b is not None and membership(other) != b:
                    violations.append(
                        f"crossing wire to unboxed boundary: {wid} "
                        f"(node {node_end.id} in {b}, boundary {other.id})")

    return violations


def boundary(g: OpenGraph) -> tuple[frozenset[str], frozenset[str]]:
    """The (inputs, outputs) of `g`: boundary ids occurring as wire sources
    and targets respectively."""
    cached = object.__getattribute__(g, "_boundary")
    if cached is None:
        ins = frozenset(w.src.id for w in g.wires.values() if w.src.is_boundary)
        outs = frozenset(w.tgt.id for w in g.wires.values() if w.tgt.is_boundary)
        cached = (ins, outs)
        object.__setattr__(g, "_boundary", cached)
    return cached


# -- composition ----------------------------------------------------------------


def _rename(g: OpenGraph, f: Callable[[str], str]) -> OpenGraph:
    """Apply an id-renaming to every node, wire, boundary and bbox id."""
    def ep(e: Endpoint) -> Endpoint:
        return Endpoint(e.kind, f(e.id))

    return OpenGraph(
        g.theory_name,
        nodes={f(v): nd for v, nd in g.nodes.items()},
        wires={f(wid): Wire(ep(w.src), ep(w.tgt), w.data)
               for wid, w in g.wires.items()},
        circles=g.circles,
        bboxes={f(b): frozenset(f(m) for m in members)
                for b, members in g.bboxes.items()})


def compose_par(g1: OpenGraph, g2: OpenGraph,
                prefix1: str, prefix2: str) -> OpenGraph:
    """The parallel composition (disjoint union) of two diagrams.

    Every id of `g1` is prefixed with `prefix1` and every id of `g2`
    with `prefix2` (plain string concatenation), making the union disjoint.
    The boundary of the result is the union of the renamed boundaries.
    """
    if g1.theory_name != g2.theory_name:
        raise GraphError(
            f"theory mismatch: {g1.theory_name} vs {g2.theory_name}")
    r1 = _rename(g1, lambda i: prefix1 + i)
    r2 = _rename(g2, lambda i: prefix2 + i)
    overlap = (set(r1.nodes) | set(r1.wires)) & (set(r2.nodes) | set(r2.wires))
    if overlap:
        raise GraphError(f"id collision after prefixing: {sorted(overlap)}")
    nodes = dict(r1.nodes)
    nodes.update(r2.nodes)
    wires = dict(r1.wires)
    wires.update(r2.wires)
    bboxes = dict(r1.bboxes)
    bboxes.update(r2.bboxes)
    return OpenGraph(g1.theory_name, nodes, wires,
                     r1.circles + r2.circles, bboxes)


def compose_seq(g1: OpenGraph, g2: OpenGraph,
                plug: Mapping[str, str]) -> OpenGraph:
    """Sequential composition: plug the outputs of `g1` into the inputs
    of `g2`.

    `plug` must be a total bijection from the outputs of `g1` to the
    inputs of `g2`. For each plugged pair the two adjacent wires are fused
    into one (their edge data must agree); a fusion that closes a loop
    yields a circle. Ids of the two graphs must not collide (pre-rename
    with :func:`compose_par`-style prefixes if needed). The result has
    inputs(g1) and outputs(g2) as its boundary.
    """
    if g1.theory_name != g2.theory_name:
        raise GraphError(
            f"theory mismatch: {g1.theory_name} vs {g2.theory_name}")
    outs1 = boundary(g1)[1]
    ins2 = boundary(g2)[0]
    if set(plug.keys()) != set(outs1) or set(plug.values()) != set(ins2) \
            or len(set(plug.values())) != len(plug):
        raise GraphError("plug is not a bijection outputs(g1) -> inputs(g2)")

    shared = ((set(g1.nodes) | set(g1.wires) | set(g1.bboxes))
              & (set(g2.nodes) | set(g2.wires) | set(g2.bboxes)))
    if shared:
        raise GraphError(f"id collision between composed graphs: {sorted(shared)}")
    b1 = boundary(g1)[0] | outs1
    b2 = ins2 | boundary(g2)[1]
    bshared = (b1 & b2) - (outs1 | ins2)
    if bshared:
        raise GraphError(f"boundary id collision: {sorted(bshared)}")

    nodes = dict(g1.nodes)
    nodes.update(g2.nodes)
    wires: dict[str, Wire] = {}
    for src_graph in (g1, g2):
        for wid, w in src_graph.wires.items():
            wires[wid] = w
    bboxes = dict(g1.bboxes)
    bboxes.update(g2.bboxes)
    circles = list(g1.circles) + list(g2.circles)

    # Fuse wire pairs across the plug. Each plugged label pair joins the
    # wire ending at the g1 output to the wire starting at the g2 input;
    # chains of fusions (through bare wires) are followed to a fixed point.
    tgt_of = {w.tgt.id: wid for wid, w in wires.items() if w.tgt.is_boundary}
    src_of = {w.src.id: wid for wid, w in wires.items() if w.src.is_boundary}
    for out_label in sorted(plug):
        in_label = plug[out_label]
        w1_id = tgt_of.pop(out_label)
        w2_id = src_of.pop(in_label)
        w1 = wires[w1_id]
        w2 = wires[w2_id]
        if w1.data != w2.data:
            raise GraphError(
                f"edge data mismatch fusing {w1_id} and {w2_id}")
        if w1_id == w2_id:
            # both ends of one wire plugged together: a closed loop
            del wires[w1_id]
            circles.append(w1.data)
            continue
        fused = Wire(w1.src, w2.tgt, w1.data)
        keep = min(w1_id, w2_id)
        drop = max(w1_id, w2_id)
        del wires[drop]
        wires[keep] = fused
        # re-point boundary indices at the surviving wire
        if fused.src.is_boundary:
            src_of[fused.src.id] = keep
        if fused.tgt.is_boundary:
            tgt_of[fused.tgt.id] = keep

    return OpenGraph(g1.theory_name, nodes, wires, circles, bboxes)


# -- isomorphism ----------------------------------------------------------------


@dataclass(frozen=True)
class Iso:
    """A structure-preserving bijection between two graphs.

    Maps node, wire, boundary and !-box ids of the first graph onto the
    second; direction, payloads (by equality), input/output polarity and
    box membership are all preserved. Circles are matched as multisets.
    """

    node_map: dict[str, str]
    wire_map: dict[str, str]
    boundary_map: dict[str, str]
    bbox_map: dict[str, str]

    def compose(self, other: Iso) -> Iso:
        """The composite iso g1 -> g3 of self: g1 -> g2 and other: g2 -> g3."""
        return Iso(
            {a: other.node_map[b] for a, b in self.node_map.items()},
            {a: other.wire_map[b] for a, b in self.wire_map.items()},
            {a: other.boundary_map[b] for a, b in self.boundary_map.items()},
            {a: other.bbox_map[b] for a, b in self.bbox_map.items()})

    def invert(self) -> Iso:
        return Iso({b: a for a, b in self.node_map.items()},
                   {b: a for a, b in self.wire_map.items()},
                   {b: a for a, b in self.boundary_map.items()},
                   {b: a for a, b in self.bbox_map.items()})


def _data_key(x: Any) -> str:
    return repr(x)


def _circle_multiset(g: OpenGraph) -> list[str]:
    return sorted(_data_key(c) for c in g.circles)


def iso_iter(g1: OpenGraph, g2: OpenGraph) -> Iterator[Iso]:
    """Enumerate all isomorphisms g1 -> g2, deterministically.

    Backtracking over node assignments (and, when !-boxes are present, over
    box-label bijections); intended for desk-scale graphs.
    """
    if g1.theory_name != g2.theory_name:
        return
    if (len(g1.nodes) != len(g2.nodes) or len(g1.wires) != len(g2.wires)
            or len(g1.bboxes) != len(g2.bboxes)
            or _circle_multiset(g1) != _circle_multiset(g2)):
        return
    ins1, outs1 = boundary(g1)
    ins2, outs2 = boundary(g2)
    if len(ins1) != len(ins2) or len(outs1) != len(outs2):
        return

    labels1 = sorted(g1.bboxes)
    labels2 = sorted(g2.bboxes)
    nodes1 = sorted(g1.nodes)

    for perm in itertools.permutations(labels2):
        bbox_map = dict(zip(labels1, perm))
        if any(len(g1.bboxes[a]) != len(g2.bboxes[b])
               for a, b in bbox_map.items()):
            continue
        box_of1 = {m: b for b in labels1 for m in g1.bboxes[b]}
        box_of2 = {m: b for b in labels2 for m in g2.bboxes[b]}

        def compatible(v1: str, v2: str) -> bool:
            if _data_key(g1.nodes[v1].data) != _data_key(g2.nodes[v2].data):
                return False
            if g1.degree_pair(v1) != g2.degree_pair(v2):
                return False
            b = box_of1.get(v1)
            return (bbox_map.get(b) if b else None) == box_of2.get(v2)

        yield from _extend_iso(g1, g2, nodes1, 0, {}, bbox_map,
                               box_of1, box_of2, compatible)


def _extend_iso(g1: OpenGraph, g2: OpenGraph, nodes1: list[str], i: int,
                node_map: dict[str, str], bbox_map: dict[str, str],
                box_of1: dict[str, str], box_of2: dict[str, str],
                compatible: Callable[[str, str], bool]) -> Iterator[Iso]:
    if i == len(nodes1):
        result = _complete_iso(g1, g2, node_map, bbox_map, box_of1, box_of2)
        if result is not None:
            yield result
        return
    v1 = nodes1[i]
    used = set(node_map.values())
    for v2 in sorted(g2.nodes):
        if v2 in used or not compatible(v1, v2):
            continue
        node_map[v1] = v2
        yield from _extend_iso(g1, g2, nodes1, i + 1, node_map, bbox_map,
                               box_of1, box_of2, compatible)
        del node_map[v1]


def _wire_group_key(g: OpenGraph, wid: str, node_map: Optional[dict[str, str]],
                    box_of: dict[str, str]) -> tuple:
    """Key under which wires must pair up in an iso: endpoint classes
    (mapped through node_map for the left graph), data, box membership
    of boundary endpoints."""
    w = g.wires[wid]

    def ep_key(e: Endpoint) -> tuple:
        if e.is_node:
            v = node_map[e.id] if node_map else e.id
            return ("node", v)
        return ("boundary", box_of.get(e.id, ""))

    return (ep_key(w.src), ep_key(w.tgt), _data_key(w.data))


def _complete_iso(g1: OpenGraph, g2: OpenGraph, node_map: dict[str, str],
                  bbox_map: dict[str, str], box_of1: dict[str, str],
                  box_of2: dict[str, str]) -> Optional[Iso]:
    """Given a full node bijection, derive the wire and boundary maps
    (or fail). Within a group of interchangeable parallel wires the
    pairing is fixed by sorted ids."""
    groups1: dict[tuple, list[str]] = {}
    for wid in sorted(g1.wires):
        key = _wire_group_key(g1, wid, node_map,
                              {m: bbox_map[b] for m, b in box_of1.items()})
        groups1.setdefault(key, []).append(wid)
    groups2: dict[tuple, list[str]] = {}
    for wid in sorted(g2.wires):
        groups2.setdefault(_wire_group_key(g2, wid, None, box_of2),
                           []).append(wid)
    if set(groups1) != set(groups2):
        return None
    wire_map: dict[str, str] = {}
    boundary_map: dict[str, str] = {}
    for key, wids1 in groups1.items():
        wids2 = groups2[key]
        if len(wids1) != len(wids2):
            return None
        for a, b in zip(wids1, wids2):
            wire_map[a] = b
            wa, wb = g1.wires[a], g2.wires[b]
            for ea, eb in ((wa.src, wb.src), (wa.tgt, wb.tgt)):
                if ea.is_boundary:
                    boundary_map[ea.id] = eb.id

    # box membership must map member sets exactly
    for b1, b2 in bbox_map.items():
        image = set()
        for m in g1.bboxes[b1]:
            image.add(node_map[m] if m in node_map else boundary_map.get(m))
        if image != set(g2.bboxes[b2]):
            return None
    return Iso(dict(node_map), wire_map, boundary_map, dict(bbox_map))


def iso_check(g1: OpenGraph, g2: OpenGraph) -> Optional[Iso]:
    """The first isomorphism between `g1` and `g2` in the deterministic
    search order, or None if the graphs are not isomorphic."""
    return next(iso_iter(g1, g2), None)
