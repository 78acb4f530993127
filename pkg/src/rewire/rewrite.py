"""Applying a match: the cut-and-glue rewrite step, and its verification.

Applying a match deletes the matched node images and wholly-claimed wires,
detaches end-claimed wires into labelled stubs, then glues in the rule's
right side: fresh copies of its nodes and wires, with each right-side wire
running to a boundary label fused onto the stub carrying that label. A
fusion that closes a loop produces a circle. Because fresh ids are derived
deterministically from the step id, replaying a stored step must reproduce
its recorded result graph byte-for-byte, which is what `check_step`
verifies.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping, Optional

from rewire.graph import Endpoint, NodeData, OpenGraph, Wire
from rewire.matcher import Claim, Match, match_violations
from rewire.rule import Rule, RuleError, instantiate_rule
from rewire.theory import Subst, TheoryError, get_theory


class RewriteError(Exception):
    """Raised when a match cannot be applied to the given graph."""


@dataclass
class ProofStep:
    """One recorded rewrite: the rule used, the exact concrete instance
    (all data substituted), the match that located it, and the result."""

    step_id: str
    rule_name: str
    instance: Rule
    node_map: dict[str, str]
    wire_claims: dict[str, Claim]
    multiplicity: dict[str, int]
    result: OpenGraph


def _subst_rule(rule: Rule, subst: Subst) -> Rule:
    """Apply a solved substitution to every payload of both sides."""
    theory = get_theory(rule.theory_name)

    def side(g: OpenGraph) -> OpenGraph:
        nodes = {v: NodeData(theory.subst_in_node_data(subst, nd.data), nd.pos)
                 for v, nd in g.nodes.items()}
        wires = {wid: Wire(w.src, w.tgt,
                           theory.subst_in_edge_data(subst, w.data))
                 for wid, w in g.wires.items()}
        circles = tuple(theory.subst_in_edge_data(subst, c) for c in g.circles)
        return OpenGraph(g.theory_name, nodes, wires, circles, g.bboxes)

    return Rule(rule.name, side(rule.lhs), side(rule.rhs))


class _Segment:
    """A wire under construction during gluing. Each end is either
    anchored at a concrete endpoint or open, labelled by a rule boundary
    id awaiting fusion."""

    __slots__ = ("src_anchor", "src_open", "tgt_anchor", "tgt_open",
                 "data", "rank")

    def __init__(self, src_anchor: Optional[Endpoint], src_open: Optional[str],
                 tgt_anchor: Optional[Endpoint], tgt_open: Optional[str],
                 data: Any, rank: tuple) -> None:
        self.src_anchor = src_anchor
        self.src_open = src_open
        self.tgt_anchor = tgt_anchor
        self.tgt_open = tgt_open
        self.data = data
        self.rank = rank


def apply_rewrite(target: OpenGraph, m: Match, step_id: str) -> ProofStep:
    """Apply `m` to the graph it was found in, producing a proof step.

    Fresh ids are "s{step_id}_" plus the instance's right-side id; new
    nodes are translated so their centroid lands on the centroid of the
    deleted nodes. The result has exactly the boundary of `target`.
    """
    problems = match_violations(m, target)
    if problems:
        raise RewriteError("stale or invalid match: " + "; ".join(problems))
    instance = _subst_rule(m.instance, m.subst)
    lhs, rhs = instance.lhs, instance.rhs

    deleted = set(m.node_map.values())
    nodes = {v: nd for v, nd in target.nodes.items() if v not in deleted}

    segments: dict[str, _Segment] = {}
    for wid in sorted(target.wires):
        w = target.wires[wid]
        claim = m.wire_claims.get(wid)
        if claim is None:
            segments[wid] = _Segment(w.src, None, w.tgt, None, w.data,
                                     (0, wid))
            continue
        if claim.whole is not None:
            continue
        src_open = (lhs.wires[claim.producer].tgt.id
                    if claim.producer is not None else None)
        tgt_open = (lhs.wires[claim.consumer].src.id
                    if claim.consumer is not None else None)
        segments[wid] = _Segment(None if src_open else w.src, src_open,
                                 None if tgt_open else w.tgt, tgt_open,
                                 w.data, (0, wid))

    # insert the right side with freshened ids and translated positions
    def fresh(rhs_id: str) -> str:
        return f"s{step_id}_{rhs_id}"

    if rhs.nodes:
        if deleted:
            cx = sum(target.nodes[v].pos[0] for v in deleted) / len(deleted)
            cy = sum(target.nodes[v].pos[1] for v in deleted) / len(deleted)
        else:
            cx = cy = 0.0
        rx = sum(nd.pos[0] for nd in rhs.nodes.values()) / len(rhs.nodes)
        ry = sum(nd.pos[1] for nd in rhs.nodes.values()) / len(rhs.nodes)
        for k, v in enumerate(sorted(rhs.nodes)):
            nd = rhs.nodes[v]
            new_id = fresh(v)
            if new_id in nodes:
                raise RewriteError(f"fresh id collision: {new_id}")
            nodes[new_id] = NodeData(nd.data,
                                     (nd.pos[0] - rx + cx + 0.01 * k,
                                      nd.pos[1] - ry + cy + 0.01 * k))

    circles = list(target.circles) + list(rhs.circles)
    for wid in sorted(rhs.wires):
        w = rhs.wires[wid]
        new_id = fresh(wid)
        if new_id in segments:
            raise RewriteError(f"fresh id collision: {new_id}")
        segments[new_id] = _Segment(
            Endpoint.node(fresh(w.src.id)) if w.src.is_node else None,
            w.src.id if w.src.is_boundary else None,
            Endpoint.node(fresh(w.tgt.id)) if w.tgt.is_node else None,
            w.tgt.id if w.tgt.is_boundary else None,
            w.data, (1, new_id))

    # fuse: each rule boundary label pairs one open source end with one
    # open target end; chains through bare wires merge transitively
    open_src = {s.src_open: sid for sid, s in segments.items()
                if s.src_open is not None}
    open_tgt = {s.tgt_open: sid for sid, s in segments.items()
                if s.tgt_open is not None}
    for label in sorted(open_src):
        into = open_tgt.pop(label)
        outof = open_src.pop(label)
        upstream = segments[into]
        downstream = segments[outof]
        if into == outof:
            # both remaining ends of one chain: a closed loop
            del segments[into]
            circles.append(upstream.data)
            continue
        rank = min(upstream.rank, downstream.rank)
        data = upstream.data if upstream.rank <= downstream.rank \
            else downstream.data
        merged = _Segment(upstream.src_anchor, upstream.src_open,
                          downstream.tgt_anchor, downstream.tgt_open,
                          data, rank)
        del segments[into]
        del segments[outof]
        merged_id = f"_fused:{label}"
        segments[merged_id] = merged
        if merged.src_open is not None:
            open_src[merged.src_open] = merged_id
        if merged.tgt_open is not None:
            open_tgt[merged.tgt_open] = merged_id

    wires: dict[str, Wire] = {}
    for seg in segments.values():
        assert seg.src_anchor is not None and seg.tgt_anchor is not None
        wid = seg.rank[1]
        if wid in wires:
            raise RewriteError(f"wire id collision after fusion: {wid}")
        wires[wid] = Wire(seg.src_anchor, seg.tgt_anchor, seg.data)

    bboxes = {}
    for b, members in target.bboxes.items():
        remaining = frozenset(x for x in members if x not in deleted)
        bboxes[b] = remaining

    result = OpenGraph(target.theory_name, nodes, wires, circles, bboxes)
    return ProofStep(step_id, m.rule_name, instance, dict(m.node_map),
                     dict(m.wire_claims), dict(m.multiplicity), result)


def check_step(pre_graph: OpenGraph, step: ProofStep,
               ruleset: Mapping[str, Rule]) -> Optional[str]:
    """Verify a stored proof step against the graph it claims to rewrite.

    Checks that the recorded instance really is an instantiation of the
    named rule at the recorded multiplicity, that the recorded match is a
    genuine match of the instance into `pre_graph`, and that re-applying
    it reproduces the recorded result exactly. Returns a description of
    the first violation, or None if the step is sound.
    """
    rule = ruleset.get(step.rule_name)
    if rule is None:
        return f"unknown rule: {step.rule_name}"
    try:
        try:
            general = instantiate_rule(rule, step.multiplicity)
        except RuleError as e:
            return f"instance not derived from rule {step.rule_name}: {e}"
        mismatch = _instance_of(step.instance, general)
        if mismatch is not None:
            return f"instance not derived from rule {step.rule_name}: {mismatch}"

        m = Match(step.rule_name, step.instance, step.node_map,
                  step.wire_claims, Subst(), step.multiplicity)
        problems = match_violations(m, pre_graph)
        if problems:
            return "match invalid: " + "; ".join(problems)
        replayed = apply_rewrite(pre_graph, m, step.step_id)
    except (RuleError, RewriteError, TheoryError) as e:
        return f"replay failed: {e}"
    if replayed.result != step.result:
        return "result mismatch"
    return None


def _instance_of(concrete: Rule, general: Rule) -> Optional[str]:
    """Is `concrete` the result of substituting solved data into
    `general`? Ids must align exactly (instantiation is deterministic);
    payloads are compared through the theory's matching hooks. Layout
    positions are ignored."""
    theory = get_theory(general.theory_name)
    ps = theory.empty_psubst()
    for side_name, gside, cside in (("lhs", general.lhs, concrete.lhs),
                                    ("rhs", general.rhs, concrete.rhs)):
        if set(gside.nodes) != set(cside.nodes):
            return f"{side_name}: node ids differ"
        if set(gside.wires) != set(cside.wires):
            return f"{side_name}: wire ids differ"
        if gside.bboxes or cside.bboxes:
            return f"{side_name}: instance not box-free"
        for v in sorted(gside.nodes):
            ps = theory.match_node_data(gside.nodes[v].data,
                                        cside.nodes[v].data, ps)
            if ps is None:
                return f"{side_name}: node data mismatch at {v}"
        for wid in sorted(gside.wires):
            gw, cw = gside.wires[wid], cside.wires[wid]
            if gw.src != cw.src or gw.tgt != cw.tgt:
                return f"{side_name}: wire {wid} endpoints differ"
            ps = theory.match_edge_data(gw.data, cw.data, ps)
            if ps is None:
                return f"{side_name}: edge data mismatch at {wid}"
        if sorted(map(repr, gside.circles)) != sorted(map(repr, cside.circles)):
            return f"{side_name}: circles differ"

    for subst in theory.solve_psubst(ps):
        substituted = _subst_rule(general, subst)
        if (_payloads_equal(substituted.lhs, concrete.lhs)
                and _payloads_equal(substituted.rhs, concrete.rhs)):
            return None
    return "no substitution reproduces the instance data"


def _payloads_equal(a: OpenGraph, b: OpenGraph) -> bool:
    return (all(a.nodes[v].data == b.nodes[v].data for v in a.nodes)
            and all(a.wires[w].data == b.wires[w].data for w in a.wires))
