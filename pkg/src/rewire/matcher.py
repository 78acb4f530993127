"""Match enumeration: occurrences of a rule's left side in a target graph.

A match pins down an injective map of pattern nodes into the target plus a
*claim* for how each affected target wire is consumed: either whole (both
endpoints matched by pattern nodes) or at one of its ends (realizing the
attachment of the pattern's boundary to the surrounding diagram; a single
target wire may be claimed at both ends, which is how a pattern with one
input and one output matches a self-loop).

Enumeration is a backtracking search over node assignments in lexicographic
id order, then wire claims in lexicographic order, threading the theory's
constraint state through the data hooks. The generators are lazy: pulling
the next match does exactly the search work needed to reach it.

For rules with !-boxes, :func:`find_bbox_matches` enumerates repetition
counts up to a completeness bound, instantiates, and delegates. Counts
whose instances provably cannot match (by degree accounting) are skipped
without instantiating; this does not change the emitted sequence.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Iterator, Mapping, Optional

from rewire.graph import Endpoint, OpenGraph
from rewire.rule import Rule, _instantiate_unchecked, validate_rule
from rewire.theory import PSubst, Subst, get_theory


class MatchError(Exception):
    """Raised on precondition violations of the match operations."""


@dataclass(frozen=True)
class Claim:
    """How one target wire is consumed by a match.

    Exactly one of two shapes: `whole` names the pattern wire matching the
    target wire end-to-end; otherwise `producer` and/or `consumer` name
    pattern wires claiming the target wire's source / target end.
    """

    whole: Optional[str] = None
    producer: Optional[str] = None
    consumer: Optional[str] = None

    def key(self) -> tuple:
        return (self.whole, self.producer, self.consumer)


@dataclass
class Match:
    """An occurrence of a concrete rule instance in a target graph.

    `instance` is box-free; its payloads may still contain pattern
    variables — `subst` is applied when the match is used in a rewrite.
    `multiplicity` records the !-box repetition counts that produced the
    instance (empty for rules without boxes).
    """

    rule_name: str
    instance: Rule
    node_map: dict[str, str]
    wire_claims: dict[str, Claim]
    subst: Subst
    multiplicity: dict[str, int] = field(default_factory=dict)
    scope: Optional[frozenset[str]] = None

    def key(self) -> tuple:
        """Hashable identity for set comparison in tests and protocols."""
        return (tuple(sorted(self.node_map.items())),
                tuple(sorted((w, c.key()) for w, c in self.wire_claims.items())),
                self.subst.bindings,
                tuple(sorted(self.multiplicity.items())))


def _check_pattern(rule: Rule) -> None:
    if rule.lhs.bboxes or rule.rhs.bboxes:
        raise MatchError(f"pattern is not box-free: {rule.name}")
    problems = validate_rule(rule)
    if problems:
        raise MatchError(f"invalid pattern {rule.name}: " + "; ".join(problems))


def find_matches(rule: Rule, target: OpenGraph,
                 scope: Optional[frozenset[str]] = None) -> Iterator[Match]:
    """Lazily enumerate every match of a concrete (box-free) rule's left
    side into `target`, in deterministic lexicographic order.

    With `scope` set, only matches whose node images lie inside the given
    target node set are produced.
    """
    _check_pattern(rule)
    if target.theory_name != rule.theory_name:
        raise MatchError(
            f"theory mismatch: {rule.theory_name} vs {target.theory_name}")
    return _matches(rule, target, scope, {})


def _matches(instance: Rule, target: OpenGraph,
             scope: Optional[frozenset[str]],
             multiplicity: Mapping[str, int]) -> Iterator[Match]:
    theory = get_theory(target.theory_name)
    pattern = instance.lhs
    pnodes = sorted(pattern.nodes)
    tnodes = [n for n in sorted(target.nodes)
              if scope is None or n in scope]

    def assign_nodes(i: int, node_map: dict[str, str],
                     ps: PSubst) -> Iterator[Match]:
        if i == len(pnodes):
            yield from assign_wires(0, node_map, ps, {}, set(), set())
            return
        v = pnodes[i]
        vdeg = pattern.degree_pair(v)
        vdata = pattern.nodes[v].data
        used = set(node_map.values())
        for n in tnodes:
            if n in used or target.degree_pair(n) != vdeg:
                continue
            ps2 = theory.match_node_data(vdata, target.nodes[n].data, ps)
            if ps2 is None:
                continue
            node_map[v] = n
            yield from assign_nodes(i + 1, node_map, ps2)
            del node_map[v]

    # claim node-to-node wires first: they are the constrained choices,
    # while end-claims at a node can never run out of free ends once the
    # degree check has passed (this ordering only fixes which of several
    # claim-symmetric matches enumerates first, not the match set)
    pwires = sorted(w for w in pattern.wires
                    if pattern.wires[w].src.is_node
                    and pattern.wires[w].tgt.is_node)
    pwires += sorted(w for w in pattern.wires
                     if not (pattern.wires[w].src.is_node
                             and pattern.wires[w].tgt.is_node))

    def assign_wires(j: int, node_map: dict[str, str], ps: PSubst,
                     claims: dict[str, Claim], src_claimed: set[str],
                     tgt_claimed: set[str]) -> Iterator[Match]:
        if j == len(pwires):
            for s in theory.solve_psubst(ps):
                yield Match(instance.name, instance, dict(node_map),
                            dict(claims), s, dict(multiplicity), scope)
            return
        wid = pwires[j]
        w = pattern.wires[wid]

        if w.src.is_node and w.tgt.is_node:
            su = node_map[w.src.id]
            tv = node_map[w.tgt.id]
            for twid in target.out_wires(su):
                tw = target.wires[twid]
                if tw.tgt != Endpoint.node(tv):
                    continue
                if twid in src_claimed or twid in tgt_claimed:
                    continue
                ps2 = theory.match_edge_data(w.data, tw.data, ps)
                if ps2 is None:
                    continue
                claims[twid] = Claim(whole=wid)
                src_claimed.add(twid)
                tgt_claimed.add(twid)
                yield from assign_wires(j + 1, node_map, ps2, claims,
                                        src_claimed, tgt_claimed)
                src_claimed.discard(twid)
                tgt_claimed.discard(twid)
                del claims[twid]
        elif w.src.is_node:
            # pattern wire runs from a node to the boundary: claim the
            # source end of a target wire leaving the node's image
            su = node_map[w.src.id]
            for twid in target.out_wires(su):
                if twid in src_claimed:
                    continue
                ps2 = theory.match_edge_data(w.data, target.wires[twid].data, ps)
                if ps2 is None:
                    continue
                before = claims.get(twid)
                claims[twid] = Claim(producer=wid,
                                     consumer=before.consumer if before else None)
                src_claimed.add(twid)
                yield from assign_wires(j + 1, node_map, ps2, claims,
                                        src_claimed, tgt_claimed)
                src_claimed.discard(twid)
                if before is None:
                    del claims[twid]
                else:
                    claims[twid] = before
        else:
            tv = node_map[w.tgt.id]
            for twid in target.in_wires(tv):
                if twid in tgt_claimed:
                    continue
                ps2 = theory.match_edge_data(w.data, target.wires[twid].data, ps)
                if ps2 is None:
                    continue
                before = claims.get(twid)
                claims[twid] = Claim(producer=before.producer if before else None,
                                     consumer=wid)
                tgt_claimed.add(twid)
                yield from assign_wires(j + 1, node_map, ps2, claims,
                                        src_claimed, tgt_claimed)
                tgt_claimed.discard(twid)
                if before is None:
                    del claims[twid]
                else:
                    claims[twid] = before

    return assign_nodes(0, {}, theory.empty_psubst())


# -- !-box matching --------------------------------------------------------------


def _degree_profile(rule: Rule) -> list[tuple[Optional[str], Any,
                                              tuple[int, dict[str, int]],
                                              tuple[int, dict[str, int]]]]:
    """Per lhs node: (containing box or None, payload, in-degree and
    out-degree as affine functions of the multiplicities).

    The degree of a node copy after instantiation is the count of
    same-box/unboxed incident wires plus, per other box b, n_b times the
    wires crossing from b.
    """
    lhs = rule.lhs
    box_of = {m: b for b in lhs.bboxes for m in lhs.bboxes[b]}
    profile = []
    for v in sorted(lhs.nodes):
        home = box_of.get(v)

        def affine(wire_ids: list[str], other_end_of: dict[str, Endpoint]
                   ) -> tuple[int, dict[str, int]]:
            base = 0
            per_box: dict[str, int] = {}
            for wid in wire_ids:
                other = other_end_of[wid]
                b = box_of.get(other.id)
                if b is None or b == home:
                    base += 1
                else:
                    per_box[b] = per_box.get(b, 0) + 1
            return base, per_box

        ins = affine(lhs.in_wires(v), {w: lhs.wires[w].src for w in lhs.in_wires(v)})
        outs = affine(lhs.out_wires(v), {w: lhs.wires[w].tgt for w in lhs.out_wires(v)})
        profile.append((home, lhs.nodes[v].data, ins, outs))
    return profile


def _feasible(profile: list, m: dict[str, int],
              target_degrees: dict[tuple[int, int], int],
              n_target_nodes: int) -> bool:
    """Necessary conditions for the instance at multiplicity `m` to match:
    enough target nodes overall and per degree pair. Never rejects a
    multiplicity that admits a match."""
    total = 0
    need: dict[tuple[int, int], int] = {}
    for home, data, (in_base, in_per), (out_base, out_per) in profile:
        count = 1 if home is None else m[home]
        if count == 0:
            continue
        total += count
        din = in_base + sum(m[b] * k for b, k in in_per.items())
        dout = out_base + sum(m[b] * k for b, k in out_per.items())
        key = (din, dout)
        need[key] = need.get(key, 0) + count
    if total > n_target_nodes:
        return False
    for key, n in need.items():
        if target_degrees.get(key, 0) < n:
            return False
    return True


def find_bbox_matches(rule: Rule, target: OpenGraph,
                      scope: Optional[frozenset[str]] = None) -> Iterator[Match]:
    """Lazily enumerate matches of a (possibly !-boxed) rule into `target`.

    Repetition counts range over [0, B] per box with
    B = |nodes| + |wires| + 1 of the target (injectivity makes higher
    counts unmatchable), in lexicographic order of the count vector;
    each feasible count is instantiated and matched concretely.
    """
    problems = validate_rule(rule)
    if problems:
        raise MatchError(f"invalid rule {rule.name}: " + "; ".join(problems))
    if target.theory_name != rule.theory_name:
        raise MatchError(
            f"theory mismatch: {rule.theory_name} vs {target.theory_name}")

    labels = sorted(rule.lhs.bboxes)
    if not labels:
        yield from _matches(rule, target, scope, {})
        return

    bound = len(target.nodes) + len(target.wires) + 1
    profile = _degree_profile(rule)
    eligible = [n for n in target.nodes if scope is None or n in scope]
    target_degrees: dict[tuple[int, int], int] = {}
    for n in eligible:
        key = target.degree_pair(n)
        target_degrees[key] = target_degrees.get(key, 0) + 1

    for vector in itertools.product(range(bound + 1), repeat=len(labels)):
        m = dict(zip(labels, vector))
        if not _feasible(profile, m, target_degrees, len(eligible)):
            continue
        instance = _instantiate_unchecked(rule, m)
        yield from _matches(instance, target, scope, m)


# -- match validity ---------------------------------------------------------------


def match_violations(m: Match, target: OpenGraph) -> list[str]:
    """Check every Match invariant against `target`; empty means genuine.

    Used by proof checking to validate stored matches, and by tests to
    assert soundness of the enumeration.
    """
    v: list[str] = []
    lhs = m.instance.lhs
    theory = get_theory(target.theory_name)

    if set(m.node_map) != set(lhs.nodes):
        return [f"node_map domain mismatch: {sorted(m.node_map)}"]
    if len(set(m.node_map.values())) != len(m.node_map):
        v.append("node_map not injective")
    for pv, tv in sorted(m.node_map.items()):
        if tv not in target.nodes:
            v.append(f"node_map image missing: {tv}")
        elif m.scope is not None and tv not in m.scope:
            v.append(f"node image outside scope: {tv}")
    if v:
        return v

    claimed_by: dict[str, tuple[str, str]] = {}
    ends_at: dict[str, set[str]] = {n: set() for n in m.node_map.values()}
    for twid, claim in sorted(m.wire_claims.items()):
        if twid not in target.wires:
            v.append(f"claimed wire missing: {twid}")
            continue
        tw = target.wires[twid]
        if claim.whole is not None:
            if claim.producer is not None or claim.consumer is not None:
                v.append(f"claim {twid}: whole mixed with ends")
            w = lhs.wires.get(claim.whole)
            if w is None or not (w.src.is_node and w.tgt.is_node):
                v.append(f"claim {twid}: bad whole wire {claim.whole}")
            elif (tw.src != Endpoint.node(m.node_map[w.src.id])
                  or tw.tgt != Endpoint.node(m.node_map[w.tgt.id])):
                v.append(f"claim {twid}: endpoint mismatch")
            _note_claim(claimed_by, v, claim.whole, twid, "whole")
            for e, end in ((tw.src, "src"), (tw.tgt, "tgt")):
                if e.is_node and e.id in ends_at:
                    ends_at[e.id].add(f"{twid}:{end}")
        else:
            if claim.producer is None and claim.consumer is None:
                v.append(f"claim {twid}: empty")
            if claim.producer is not None:
                w = lhs.wires.get(claim.producer)
                if w is None or not w.src.is_node or not w.tgt.is_boundary:
                    v.append(f"claim {twid}: bad producer {claim.producer}")
                elif tw.src != Endpoint.node(m.node_map[w.src.id]):
                    v.append(f"claim {twid}: producer endpoint mismatch")
                else:
                    ends_at[tw.src.id].add(f"{twid}:src")
                _note_claim(claimed_by, v, claim.producer, twid, "producer")
            if claim.consumer is not None:
                w = lhs.wires.get(claim.consumer)
                if w is None or not w.src.is_boundary or not w.tgt.is_node:
                    v.append(f"claim {twid}: bad consumer {claim.consumer}")
                elif tw.tgt != Endpoint.node(m.node_map[w.tgt.id]):
                    v.append(f"claim {twid}: consumer endpoint mismatch")
                else:
                    ends_at[tw.tgt.id].add(f"{twid}:tgt")
                _note_claim(claimed_by, v, claim.consumer, twid, "consumer")

    unclaimed = set(lhs.wires) - set(claimed_by)
    for wid in sorted(unclaimed):
        v.append(f"lhs wire unclaimed: {wid}")

    # local completeness: every wire end incident to a matched image is claimed
    for pv, tv in sorted(m.node_map.items()):
        for twid in target.in_wires(tv):
            if f"{twid}:tgt" not in ends_at[tv]:
                v.append(f"dangling end at {tv}: {twid} target end")
        for twid in target.out_wires(tv):
            if f"{twid}:src" not in ends_at[tv]:
                v.append(f"dangling end at {tv}: {twid} source end")
        if (lhs.in_degree(pv) != target.in_degree(tv)
                or lhs.out_degree(pv) != target.out_degree(tv)):
            v.append(f"degree mismatch at {pv} -> {tv}")
    if v:
        return v

    # data compatibility with the recorded substitution
    ps: Optional[PSubst] = theory.empty_psubst()
    for pv, tv in sorted(m.node_map.items()):
        ps = theory.match_node_data(lhs.nodes[pv].data, target.nodes[tv].data, ps)
        if ps is None:
            return [f"node data incompatible at {pv} -> {tv}"]
    for twid, claim in sorted(m.wire_claims.items()):
        for wid in (claim.whole, claim.producer, claim.consumer):
            if wid is None:
                continue
            ps = theory.match_edge_data(lhs.wires[wid].data,
                                        target.wires[twid].data, ps)
            if ps is None:
                return [f"edge data incompatible at {wid} -> {twid}"]
    if m.subst not in list(theory.solve_psubst(ps)):
        v.append("substitution does not solve the accumulated constraints")
    return v


def _note_claim(claimed_by: dict[str, tuple[str, str]], v: list[str],
                lhs_wire: str, twid: str, kind: str) -> None:
    if lhs_wire in claimed_by:
        v.append(f"lhs wire claimed twice: {lhs_wire}")
    else:
        claimed_by[lhs_wire] = (twid, kind)
