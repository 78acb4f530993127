"""Rewrite rules and !-box instantiation.

A rule is a pair of open graphs over one theory that share their boundary
labels: the common labels are the correspondence along which a rewrite
glues the right side into the hole cut for the left side. Rules may carry
!-boxes, again paired by label on the two sides, marking subdiagrams that
an instance repeats any number of times (including zero).

Instantiation fixes a repetition count per box and produces a concrete,
box-free rule. Copy ids are suffixed deterministically ("@b:1", "@b:2",
...) so that stored derivations can name the exact instance they used.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from rewire.graph import Endpoint, GraphError, OpenGraph, Wire, boundary, validate
from rewire.theory import get_theory


class RuleError(Exception):
    """Raised on invalid rules or instantiation parameters."""


@dataclass(frozen=True)
class Rule:
    """A diagram equation, oriented left-to-right.

    `name` is a project path such as "axioms/red-merge"; theorems live
    under "theorems/".
    """

    name: str
    lhs: OpenGraph
    rhs: OpenGraph

    @property
    def theory_name(self) -> str:
        return self.lhs.theory_name


def validate_rule(r: Rule) -> list[str]:
    """Check every rule invariant, on top of graph validity of both sides.

    Returns all violations (empty list means the rule is well formed):
    boundary label sharing, the two !-box conditions, and the left-side
    restrictions that make matching well defined (at least one node, no
    circles, no bare boundary-to-boundary wires). In theories with
    variables, the right side may not introduce variables absent from
    the left.
    """
    violations = [f"lhs: {v}" for v in validate(r.lhs)]
    violations += [f"rhs: {v}" for v in validate(r.rhs)]
    if r.lhs.theory_name != r.rhs.theory_name:
        violations.append(
            f"theory mismatch: {r.lhs.theory_name} vs {r.rhs.theory_name}")
        return violations
    if violations:
        return violations

    lin, lout = boundary(r.lhs)
    rin, rout = boundary(r.rhs)
    for label in sorted((lin ^ rin) | (lout ^ rout)):
        violations.append(f"boundary mismatch: {label}")
    for label in sorted(lin & rout) + sorted(lout & rin):
        violations.append(f"boundary polarity mismatch: {label}")

    lboxes, rboxes = set(r.lhs.bboxes), set(r.rhs.bboxes)
    for b in sorted(lboxes ^ rboxes):
        violations.append(f"condition (i): {b}")
    for b in sorted(lboxes & rboxes):
        lhs_bound = r.lhs.boundary_ids_of_bbox(b)
        rhs_bound = r.rhs.boundary_ids_of_bbox(b)
        for x in sorted(lhs_bound ^ rhs_bound):
            violations.append(f"condition (ii): {x} in box {b}")

    if not r.lhs.nodes:
        violations.append("lhs has no nodes")
    else:
        boxed = set().union(*r.lhs.bboxes.values()) if r.lhs.bboxes else set()
        if not (set(r.lhs.nodes) - boxed):
            # otherwise instantiating every box at zero leaves no anchor
            violations.append("lhs has no node outside !-boxes")
    if r.lhs.circles:
        violations.append("lhs contains circles")
    for wid in sorted(r.lhs.wires):
        w = r.lhs.wires[wid]
        if w.src.is_boundary and w.tgt.is_boundary:
            violations.append(f"lhs bare wire: {wid}")

    theory = get_theory(r.theory_name)
    lhs_vars: set[str] = set()
    for nd in r.lhs.nodes.values():
        lhs_vars |= theory.node_data_variables(nd.data)
    for v, nd in sorted(r.rhs.nodes.items()):
        extra = theory.node_data_variables(nd.data) - lhs_vars
        for x in sorted(extra):
            violations.append(f"rhs variable not bound by lhs: {x} (node {v})")

    return violations


def expand_bbox(g: OpenGraph, b: str, copy_tag: str) -> OpenGraph:
    """Add one fresh copy of box `b`'s contents, outside all boxes.

    Member nodes and boundary points are copied with `copy_tag` appended to
    their ids; wires inside the box are copied, wires crossing the border
    are copied with the outside endpoint fixed. Box `b` and its original
    contents are left in place.
    """
    if b not in g.bboxes:
        raise GraphError(f"unknown bbox: {b}")
    members = g.bboxes[b]

    def inside(e: Endpoint) -> bool:
        return e.id in members

    def copy_ep(e: Endpoint) -> Endpoint:
        return Endpoint(e.kind, e.id + copy_tag) if inside(e) else e

    nodes = dict(g.nodes)
    for v in sorted(members):
        if v in g.nodes:
            nd = g.nodes[v]
            new_id = v + copy_tag
            if new_id in nodes:
                raise GraphError(f"copy id collision: {new_id}")
            nodes[new_id] = type(nd)(nd.data,
                                     (nd.pos[0] + 0.5, nd.pos[1] - 0.5))

    wires = dict(g.wires)
    for wid in sorted(g.wires):
        w = g.wires[wid]
        if inside(w.src) or inside(w.tgt):
            new_id = wid + copy_tag
            if new_id in wires:
                raise GraphError(f"copy id collision: {new_id}")
            wires[new_id] = Wire(copy_ep(w.src), copy_ep(w.tgt), w.data)

    return OpenGraph(g.theory_name, nodes, wires, g.circles, g.bboxes)


def kill_bbox(g: OpenGraph, b: str) -> OpenGraph:
    """Remove box `b`, its contents, and every wire touching them."""
    if b not in g.bboxes:
        raise GraphError(f"unknown bbox: {b}")
    members = g.bboxes[b]
    nodes = {v: nd for v, nd in g.nodes.items() if v not in members}
    wires = {wid: w for wid, w in g.wires.items()
             if w.src.id not in members and w.tgt.id not in members}
    bboxes = {label: mem for label, mem in g.bboxes.items() if label != b}
    return OpenGraph(g.theory_name, nodes, wires, g.circles, bboxes)


def instantiate_rule(r: Rule, multiplicity: Mapping[str, int]) -> Rule:
    """Fix a repetition count per !-box and produce the concrete rule.

    For each box b (in label order) the contents are expanded
    `multiplicity[b]` times with copy tags "@b:1".."@b:n", then the box
    and its originals are removed. The two sides are processed
    identically, so copied boundary labels still coincide; the result is
    box-free and again a valid rule.
    """
    problems = validate_rule(r)
    if problems:
        raise RuleError(f"invalid rule {r.name}: " + "; ".join(problems))
    return _instantiate_unchecked(r, multiplicity)


def _instantiate_unchecked(r: Rule, multiplicity: Mapping[str, int]) -> Rule:
    """Instantiation fast path for callers that validated `r` already."""
    if set(multiplicity) != set(r.lhs.bboxes):
        raise RuleError(
            f"multiplicity domain {sorted(multiplicity)} does not match "
            f"boxes {sorted(r.lhs.bboxes)}")
    for b, n in multiplicity.items():
        if n < 0:
            raise RuleError(f"negative multiplicity for box {b}")

    def apply_side(g: OpenGraph) -> OpenGraph:
        for b in sorted(multiplicity):
            for i in range(1, multiplicity[b] + 1):
                g = expand_bbox(g, b, f"@{b}:{i}")
            g = kill_bbox(g, b)
        return g

    return Rule(r.name, apply_side(r.lhs), apply_side(r.rhs))
