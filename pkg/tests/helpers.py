"""Shared test machinery: seeded generators and independent oracles.

The oracles here deliberately avoid the engine's search code paths:
matches are enumerated by filtering the full product of injective node
maps and claim assignments, isomorphism by trying every bijection, and
normal forms by breadth-first exploration of all rule applications.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import replace
from typing import Iterator, Optional

from rewire.graph import (Endpoint, NodeData, OpenGraph, Wire, boundary,
                          iso_check, validate)
from rewire.matcher import Claim, Match, find_bbox_matches
from rewire.rewrite import apply_rewrite
from rewire.rule import Rule, instantiate_rule, validate_rule
from rewire.theory import Lit, Subst, Var, get_theory, register_theory

N = Endpoint.node
B = Endpoint.boundary


# -- generators -----------------------------------------------------------------


def _payload_pool(theory_name: str, ground: bool) -> list:
    if theory_name.startswith("bialg"):
        return ["white", "gray"]
    pool = [Lit("f"), Lit("g")]
    if not ground:
        pool += [Var("x"), Var("y")]
    return pool


def random_graph(rng: random.Random, theory_name: str = "bialg",
                 max_nodes: int = 5, max_wires: int = 8,
                 p_bbox: float = 0.0, ground: bool = True,
                 min_nodes: int = 0) -> OpenGraph:
    """A random valid open graph: nodes, wires (node or boundary ends),
    sometimes circles, and optionally !-boxes (node subsets closed under
    the crossing-boundary invariant)."""
    n = rng.randint(min_nodes, max_nodes)
    pool = _payload_pool(theory_name, ground)
    nodes = {f"v{i}": NodeData(rng.choice(pool),
                               (float(i), float(rng.randint(-2, 2))))
             for i in range(n)}
    wires: dict[str, Wire] = {}
    fresh = itertools.count()

    def end(prefix: str) -> Endpoint:
        if n and rng.random() < 0.72:
            return N(f"v{rng.randrange(n)}")
        return B(f"{prefix}{next(fresh)}")

    for j in range(rng.randint(0, max_wires)):
        wires[f"w{j}"] = Wire(end("i"), end("o"), None)

    circles = tuple(None for _ in range(rng.choice((0, 0, 0, 0, 1, 2))))

    bboxes: dict[str, frozenset[str]] = {}
    if n and rng.random() < p_bbox:
        available = set(nodes)
        for label in ("b", "c")[:rng.randint(1, 2)]:
            chosen = set(rng.sample(sorted(available),
                                    rng.randint(0, min(2, len(available)))))
            available -= chosen
            members = set(chosen)
            for w in wires.values():
                for node_end, other in ((w.src, w.tgt), (w.tgt, w.src)):
                    if (node_end.is_node and node_end.id in chosen
                            and other.is_boundary):
                        members.add(other.id)
            bboxes[label] = frozenset(members)
        if len(bboxes) == 2 and bboxes["b"] & bboxes["c"]:
            del bboxes["c"]

    g = OpenGraph(theory_name, nodes, wires, circles, bboxes)
    assert validate(g) == [], validate(g)
    return g


def random_pattern_side(rng: random.Random, theory_name: str = "bialg",
                        max_nodes: int = 3, max_wires: int = 5) -> OpenGraph:
    """A random graph obeying the rule left-side restrictions: at least
    one node, no circles, no bare wires."""
    n = rng.randint(1, max_nodes)
    pool = _payload_pool(theory_name, ground=False)
    nodes = {f"p{i}": NodeData(rng.choice(pool), (float(i), 0.0))
             for i in range(n)}
    wires: dict[str, Wire] = {}
    fresh = itertools.count()
    for j in range(rng.randint(1, max_wires)):
        kind = rng.choice(("nn", "nb", "bn"))
        u = f"p{rng.randrange(n)}"
        if kind == "nn":
            wires[f"q{j}"] = Wire(N(u), N(f"p{rng.randrange(n)}"), None)
        elif kind == "nb":
            wires[f"q{j}"] = Wire(N(u), B(f"o{next(fresh)}"), None)
        else:
            wires[f"q{j}"] = Wire(B(f"i{next(fresh)}"), N(u), None)
    g = OpenGraph(theory_name, nodes, wires)
    assert validate(g) == []
    return g


def random_rhs(rng: random.Random, theory_name: str,
               ins: list[str], outs: list[str],
               allowed_vars: list[str]) -> OpenGraph:
    """A random right side sharing the given boundary labels."""
    pool = [p for p in _payload_pool(theory_name, ground=True)]
    pool += [Var(v) for v in allowed_vars]
    k = rng.randint(0, 3)
    ins_left = sorted(ins)
    outs_left = sorted(outs)
    rng.shuffle(ins_left)
    rng.shuffle(outs_left)
    if k == 0 and len(ins) != len(outs):
        k = 1
    nodes = {f"r{i}": NodeData(rng.choice(pool), (float(i), 1.0))
             for i in range(k)}
    wires: dict[str, Wire] = {}
    j = itertools.count()
    while ins_left and outs_left and (k == 0 or rng.random() < 0.3):
        wires[f"s{next(j)}"] = Wire(B(ins_left.pop()), B(outs_left.pop()),
                                    None)
    for x in ins_left:
        wires[f"s{next(j)}"] = Wire(B(x), N(f"r{rng.randrange(k)}"), None)
    for y in outs_left:
        wires[f"s{next(j)}"] = Wire(N(f"r{rng.randrange(k)}"), B(y), None)
    if k:
        for _ in range(rng.randint(0, 2)):
            wires[f"s{next(j)}"] = Wire(N(f"r{rng.randrange(k)}"),
                                        N(f"r{rng.randrange(k)}"), None)
    circles = (None,) if rng.random() < 0.15 else ()
    return OpenGraph(theory_name, nodes, wires, circles)


def random_concrete_rule(rng: random.Random, theory_name: str = "bialg",
                         max_nodes: int = 3, max_wires: int = 5) -> Rule:
    lhs = random_pattern_side(rng, theory_name, max_nodes, max_wires)
    theory = get_theory(theory_name)
    lhs_vars = sorted(set().union(
        *(theory.node_data_variables(nd.data) for nd in lhs.nodes.values()))
        ) if lhs.nodes else []
    ins, outs = boundary(lhs)
    rhs = random_rhs(rng, theory_name, sorted(ins), sorted(outs), lhs_vars)
    rule = Rule(f"axioms/gen{rng.randrange(10 ** 9)}", lhs, rhs)
    assert validate_rule(rule) == [], validate_rule(rule)
    return rule


def random_bbox_rule(rng: random.Random, theory_name: str = "bialg") -> Rule:
    """A rule with one or two !-boxes over left-side nodes (closed under
    adjacent boundary points); the right side boxes the same boundary
    labels, as the well-formedness conditions require."""
    base = random_concrete_rule(rng, theory_name)
    lhs, rhs = base.lhs, base.rhs
    labels = ("b", "c")[:rng.randint(1, 2)]
    available = set(lhs.nodes)
    lhs_boxes: dict[str, frozenset[str]] = {}
    rhs_boxes: dict[str, frozenset[str]] = {}
    for label in labels:
        chosen = set(rng.sample(sorted(available),
                                rng.randint(0, min(2, len(available)))))
        available -= chosen
        members = set(chosen)
        for w in lhs.wires.values():
            for node_end, other in ((w.src, w.tgt), (w.tgt, w.src)):
                if (node_end.is_node and node_end.id in chosen
                        and other.is_boundary):
                    members.add(other.id)
        lhs_boxes[label] = frozenset(members)
        rhs_boxes[label] = frozenset(m for m in members
                                     if m not in lhs.nodes)
    if len(labels) == 2 and lhs_boxes["b"] & lhs_boxes["c"]:
        del lhs_boxes["c"]
        del rhs_boxes["c"]
    lhs2 = OpenGraph(lhs.theory_name, lhs.nodes, lhs.wires, lhs.circles,
                     lhs_boxes)
    rhs2 = OpenGraph(rhs.theory_name, rhs.nodes, rhs.wires, rhs.circles,
                     rhs_boxes)
    rule = Rule(base.name, lhs2, rhs2)
    if validate_rule(rule):
        # a boxed lhs boundary label can collide with an rhs bare wire
        # crossing the box border; retry with a fresh draw
        return random_bbox_rule(rng, theory_name)
    return rule


def plant_pattern(rng: random.Random, rule: Rule,
                  context_nodes: int = 3) -> OpenGraph:
    """A target guaranteed to contain a match of `rule`'s left side:
    a renamed copy of it, with boundary wires attached to fresh context,
    plus context elements that do not touch the planted nodes."""
    lhs = rule.lhs
    theory = get_theory(lhs.theory_name)
    assignment: dict[str, str] = {}

    def ground(data):
        for var in sorted(theory.node_data_variables(data)):
            assignment.setdefault(var, rng.choice(["f", "g"]))
        subst = Subst(tuple(sorted(assignment.items())))
        return theory.subst_in_node_data(subst, data)

    nodes = {f"t_{v}": NodeData(ground(nd.data), nd.pos)
             for v, nd in lhs.nodes.items()}
    wires: dict[str, Wire] = {}
    fresh = itertools.count()
    pool = _payload_pool(lhs.theory_name, ground=True)

    context_ids = [f"c{i}" for i in range(rng.randint(0, context_nodes))]
    for c in context_ids:
        nodes[c] = NodeData(rng.choice(pool), (9.0, float(next(fresh))))

    out_stubs: list[str] = []   # planted wires waiting at their target end
    for wid in sorted(lhs.wires):
        w = lhs.wires[wid]
        if w.src.is_node and w.tgt.is_node:
            wires[f"t_{wid}"] = Wire(N(f"t_{w.src.id}"), N(f"t_{w.tgt.id}"),
                                     None)
        elif w.src.is_node:
            out_stubs.append(wid)
        else:
            choice = rng.random()
            if out_stubs and choice < 0.25:
                # fuse with a pending producer stub: one target wire
                # claimed at both ends
                other = out_stubs.pop()
                wires[f"t_{wid}"] = Wire(N(f"t_{lhs.wires[other].src.id}"),
                                         N(f"t_{w.tgt.id}"), None)
            elif context_ids and choice < 0.6:
                wires[f"t_{wid}"] = Wire(N(rng.choice(context_ids)),
                                         N(f"t_{w.tgt.id}"), None)
            else:
                wires[f"t_{wid}"] = Wire(B(f"x{next(fresh)}"),
                                         N(f"t_{w.tgt.id}"), None)
    for wid in out_stubs:
        w = lhs.wires[wid]
        if context_ids and rng.random() < 0.4:
            wires[f"t_{wid}"] = Wire(N(f"t_{w.src.id}"),
                                     N(rng.choice(context_ids)), None)
        else:
            wires[f"t_{wid}"] = Wire(N(f"t_{w.src.id}"),
                                     B(f"y{next(fresh)}"), None)

    # context wiring away from the planted image
    for j in range(rng.randint(0, 3)):
        def cend(prefix: str) -> Endpoint:
            if context_ids and rng.random() < 0.7:
                return N(rng.choice(context_ids))
            return B(f"{prefix}{next(fresh)}")
        wires[f"cw{j}"] = Wire(cend("ci"), cend("co"), None)

    g = OpenGraph(lhs.theory_name, nodes, wires)
    assert validate(g) == [], validate(g)
    return g


def three_mult_chain() -> OpenGraph:
    """Three white multiplications in a chain; normalises in two merges."""
    return OpenGraph(
        "bialg",
        nodes={"A": NodeData("white", (0.0, 1.0)),
               "B": NodeData("white", (1.0, 0.5)),
               "C": NodeData("white", (2.0, 0.0))},
        wires={"wx": Wire(B("x"), N("A")), "wy": Wire(B("y"), N("A")),
               "m1": Wire(N("A"), N("B")), "wz": Wire(B("z"), N("B")),
               "m2": Wire(N("B"), N("C")), "ww": Wire(B("w"), N("C")),
               "wo": Wire(N("C"), B("o"))})


def random_dag_graph(rng: random.Random, max_nodes: int = 12,
                     max_wires: int = 16) -> OpenGraph:
    """A random valid acyclic bialg graph: internal wires only run from
    lower to higher node index, so diagrams stay feedback-free (the class
    on which the bialgebra rules normalise)."""
    n = rng.randint(1, max_nodes)
    nodes = {f"v{i:02d}": NodeData(rng.choice(("white", "gray")),
                                   (float(i), float(rng.randint(-3, 3))))
             for i in range(n)}
    ids = sorted(nodes)
    wires: dict[str, Wire] = {}
    fresh = itertools.count()
    for j in range(rng.randint(0, max_wires)):
        kind = rng.random()
        if n >= 2 and kind < 0.6:
            i1, i2 = sorted(rng.sample(range(n), 2))
            wires[f"w{j}"] = Wire(N(ids[i1]), N(ids[i2]), None)
        elif kind < 0.8:
            wires[f"w{j}"] = Wire(B(f"i{next(fresh)}"),
                                  N(ids[rng.randrange(n)]), None)
        else:
            wires[f"w{j}"] = Wire(N(ids[rng.randrange(n)]),
                                  B(f"o{next(fresh)}"), None)
    g = OpenGraph("bialg", nodes, wires)
    assert validate(g) == []
    return g


# -- match oracle -----------------------------------------------------------------


def brute_force_matches(rule: Rule, target: OpenGraph,
                        scope: Optional[frozenset[str]] = None,
                        multiplicity: Optional[dict[str, int]] = None
                        ) -> list[Match]:
    """Every match of a concrete rule, by filtering the full product of
    injective node maps and per-wire claim candidates through the match
    invariants. Independent of the engine's backtracking search."""
    theory = get_theory(target.theory_name)
    lhs = rule.lhs
    pnodes = sorted(lhs.nodes)
    tnodes = sorted(target.nodes if scope is None
                    else set(target.nodes) & scope)
    pwires = sorted(lhs.wires)
    out: list[Match] = []

    for images in itertools.permutations(tnodes, len(pnodes)):
        node_map = dict(zip(pnodes, images))
        ps = theory.empty_psubst()
        for v in pnodes:
            ps = theory.match_node_data(lhs.nodes[v].data,
                                        target.nodes[node_map[v]].data, ps)
            if ps is None:
                break
        if ps is None:
            continue

        options: list[list[tuple[str, str]]] = []
        for wid in pwires:
            w = lhs.wires[wid]
            opts = []
            for twid in sorted(target.wires):
                tw = target.wires[twid]
                if w.src.is_node and w.tgt.is_node:
                    if (tw.src == N(node_map[w.src.id])
                            and tw.tgt == N(node_map[w.tgt.id])):
                        opts.append((twid, "whole"))
                elif w.src.is_node:
                    if tw.src == N(node_map[w.src.id]):
                        opts.append((twid, "producer"))
                else:
                    if tw.tgt == N(node_map[w.tgt.id]):
                        opts.append((twid, "consumer"))
            options.append(opts)

        for combo in itertools.product(*options):
            ends: set[tuple[str, str]] = set()
            conflict = False
            for twid, slot in combo:
                slot_ends = ({(twid, "src"), (twid, "tgt")}
                             if slot == "whole"
                             else {(twid, "src" if slot == "producer"
                                    else "tgt")})
                if slot_ends & ends:
                    conflict = True
                    break
                ends |= slot_ends
            if conflict:
                continue
            complete = all(
                all((twid, "tgt") in ends for twid in target.in_wires(n))
                and all((twid, "src") in ends
                        for twid in target.out_wires(n))
                for n in node_map.values())
            if not complete:
                continue
            ps2 = ps
            for (twid, slot), wid in zip(combo, pwires):
                ps2 = theory.match_edge_data(lhs.wires[wid].data,
                                             target.wires[twid].data, ps2)
                if ps2 is None:
                    break
            if ps2 is None:
                continue
            claims: dict[str, Claim] = {}
            for (twid, slot), wid in zip(combo, pwires):
                if slot == "whole":
                    claims[twid] = Claim(whole=wid)
                else:
                    prev = claims.get(twid)
                    claims[twid] = Claim(
                        producer=wid if slot == "producer"
                        else (prev.producer if prev else None),
                        consumer=wid if slot == "consumer"
                        else (prev.consumer if prev else None))
            for s in theory.solve_psubst(ps2):
                out.append(Match(rule.name, rule, dict(node_map), claims, s,
                                 dict(multiplicity or {}), scope))
    return out


def brute_force_bbox_matches(rule: Rule, target: OpenGraph,
                             scope: Optional[frozenset[str]] = None
                             ) -> list[Match]:
    """The !-box oracle: instantiate at every repetition vector in
    [0, B]^boxes without any feasibility pruning, then brute-force each
    instance."""
    labels = sorted(rule.lhs.bboxes)
    if not labels:
        return brute_force_matches(rule, target, scope)
    bound = len(target.nodes) + len(target.wires) + 1
    out: list[Match] = []
    for vector in itertools.product(range(bound + 1), repeat=len(labels)):
        m = dict(zip(labels, vector))
        instance = instantiate_rule(rule, m)
        out.extend(brute_force_matches(
            Rule(rule.name, instance.lhs, instance.rhs), target, scope, m))
    return out


def match_set(matches) -> set:
    keys = [m.key() for m in matches]
    assert len(keys) == len(set(keys)), "duplicate matches emitted"
    return set(keys)


# -- isomorphism oracle --------------------------------------------------------------


def iso_exists_brute(g1: OpenGraph, g2: OpenGraph) -> bool:
    """Exhaustive isomorphism search over all node and wire bijections;
    usable up to roughly 4 nodes and 6 wires."""
    if g1.theory_name != g2.theory_name:
        return False
    if (len(g1.nodes) != len(g2.nodes) or len(g1.wires) != len(g2.wires)
            or len(g1.bboxes) != len(g2.bboxes)):
        return False
    if sorted(map(repr, g1.circles)) != sorted(map(repr, g2.circles)):
        return False
    n1, n2 = sorted(g1.nodes), sorted(g2.nodes)
    w1, w2 = sorted(g1.wires), sorted(g2.wires)
    for nperm in itertools.permutations(n2):
        nmap = dict(zip(n1, nperm))
        if any(repr(g1.nodes[a].data) != repr(g2.nodes[nmap[a]].data)
               for a in n1):
            continue
        for wperm in itertools.permutations(w2):
            bmap: dict[str, str] = {}
            ok = True
            for a, b in zip(w1, wperm):
                wa, wb = g1.wires[a], g2.wires[b]
                if repr(wa.data) != repr(wb.data):
                    ok = False
                    break
                for ea, eb in ((wa.src, wb.src), (wa.tgt, wb.tgt)):
                    if ea.is_node != eb.is_node:
                        ok = False
                        break
                    if ea.is_node:
                        if nmap[ea.id] != eb.id:
                            ok = False
                            break
                    elif bmap.setdefault(ea.id, eb.id) != eb.id:
                        ok = False
                        break
                if not ok:
                    break
            if not ok:
                continue
            sets1 = [frozenset(nmap.get(m, bmap.get(m))
                               for m in g1.bboxes[b])
                     for b in sorted(g1.bboxes)]
            sets2 = [frozenset(g2.bboxes[b]) for b in sorted(g2.bboxes)]
            if not sets1:
                return True
            for p in itertools.permutations(range(len(sets2))):
                if all(sets1[i] == sets2[p[i]] for i in range(len(sets1))):
                    return True
    return False


# -- normal-form oracle ----------------------------------------------------------


def graph_signature(g: OpenGraph) -> tuple:
    return (tuple(sorted((repr(nd.data),) + g.degree_pair(v)
                         for v, nd in g.nodes.items())),
            len(g.wires),
            tuple(sorted(map(repr, g.circles))),
            len(boundary(g)[0]), len(boundary(g)[1]))


class IsoClasses:
    """A set of graphs up to isomorphism, bucketed by invariants."""

    def __init__(self) -> None:
        self.buckets: dict[tuple, list[OpenGraph]] = {}
        self.count = 0

    def add(self, g: OpenGraph) -> bool:
        """True if `g` was new."""
        bucket = self.buckets.setdefault(graph_signature(g), [])
        for h in bucket:
            if iso_check(g, h) is not None:
                return False
        bucket.append(g)
        self.count += 1
        return True

    def graphs(self) -> Iterator[OpenGraph]:
        for bucket in self.buckets.values():
            yield from bucket


def bfs_normal_forms(g: OpenGraph, rules: dict[str, Rule],
                     max_states: int = 3000) -> list[OpenGraph]:
    """All normal forms reachable from `g`, by exhaustive application of
    every (rule, match) pair with iso-deduplication of states. Termination
    of the breadth-first exploration itself certifies that every maximal
    rewrite sequence from `g` terminates."""
    seen = IsoClasses()
    seen.add(g)
    frontier = [g]
    normals: list[OpenGraph] = []
    serial = itertools.count(1)
    while frontier:
        state = frontier.pop()
        successors = []
        for name in sorted(rules):
            for m in find_bbox_matches(rules[name], state):
                successors.append(
                    apply_rewrite(state, m, str(next(serial))).result)
        if not successors:
            normals.append(state)
            continue
        for s in successors:
            if seen.add(s):
                frontier.append(s)
                if seen.count > max_states:
                    raise RuntimeError("state budget exceeded")
    return normals


# -- exhaustive small-graph enumeration ----------------------------------------------


def enumerate_bialg_graphs(max_nodes: int = 5,
                           max_wires: int = 4) -> list[OpenGraph]:
    """Every connected acyclic bialg graph with at most `max_nodes` nodes
    and `max_wires` wires, up to isomorphism, plus the three trivial
    disconnected shapes (empty graph, bare wire, circle). Circles never
    interact with the rules, so enumerating them further adds nothing;
    graphs with directed cycles are excluded because the bialgebra rules
    are only normalising on genuine (feedback-free) string diagrams — see
    test_bialg_cyclic_divergence."""
    results = [OpenGraph("bialg"),
               OpenGraph("bialg", wires={"w": Wire(B("i"), B("o"), None)}),
               OpenGraph("bialg", circles=(None,))]
    seen: set[tuple] = set()
    colours = ("gray", "white")

    for n in range(1, max_nodes + 1):
        pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
        for colour_vec in itertools.combinations_with_replacement(colours, n):
            for w_int in range(0 if n == 1 else n - 1, max_wires + 1):
                for internal in itertools.combinations_with_replacement(
                        pairs, w_int):
                    if not _connected(n, internal):
                        continue
                    if not _acyclic(n, internal):
                        continue
                    budget = max_wires - w_int
                    for bins, bouts in _boundary_allocations(n, budget):
                        key = _canonical_key(colour_vec, internal, bins,
                                             bouts)
                        if key in seen:
                            continue
                        seen.add(key)
                        results.append(_build_enumerated(
                            colour_vec, internal, bins, bouts))
    return results


def _acyclic(n: int, internal: tuple[tuple[int, int], ...]) -> bool:
    succs: dict[int, set[int]] = {i: set() for i in range(n)}
    for i, j in internal:
        succs[i].add(j)
    colour = [0] * n

    def visit(i: int) -> bool:
        colour[i] = 1
        for j in succs[i]:
            if colour[j] == 1 or (colour[j] == 0 and not visit(j)):
                return False
        colour[i] = 2
        return True

    return all(colour[i] == 2 or visit(i) for i in range(n))


def _connected(n: int, internal: tuple[tuple[int, int], ...]) -> bool:
    if n <= 1:
        return True
    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in internal:
        parent[find(i)] = find(j)
    return len({find(i) for i in range(n)}) == 1


def _boundary_allocations(n: int, budget: int
                          ) -> Iterator[tuple[tuple[int, ...],
                                              tuple[int, ...]]]:
    per_node = range(0, min(2, budget) + 1)
    for bins in itertools.product(per_node, repeat=n):
        left = budget - sum(bins)
        if left < 0:
            continue
        for bouts in itertools.product(range(0, min(2, left) + 1), repeat=n):
            if sum(bouts) <= left:
                yield bins, bouts


def _canonical_key(colour_vec, internal, bins, bouts) -> tuple:
    n = len(colour_vec)
    best = None
    for perm in itertools.permutations(range(n)):
        key = (tuple(colour_vec[perm[i]] for i in range(n)),
               tuple(sorted((perm.index(i), perm.index(j))
                            for i, j in internal)),
               tuple(bins[perm[i]] for i in range(n)),
               tuple(bouts[perm[i]] for i in range(n)))
        if best is None or key < best:
            best = key
    return best


def _build_enumerated(colour_vec, internal, bins, bouts) -> OpenGraph:
    nodes = {f"v{i}": NodeData(colour_vec[i], (float(i), 0.0))
             for i in range(len(colour_vec))}
    wires: dict[str, Wire] = {}
    for k, (i, j) in enumerate(internal):
        wires[f"w{k}"] = Wire(N(f"v{i}"), N(f"v{j}"), None)
    t = itertools.count()
    for i, count in enumerate(bins):
        for _ in range(count):
            wires[f"bi{next(t)}"] = Wire(B(f"in{next(t)}"), N(f"v{i}"), None)
    for i, count in enumerate(bouts):
        for _ in range(count):
            wires[f"bo{next(t)}"] = Wire(N(f"v{i}"), B(f"out{next(t)}"),
                                         None)
    return OpenGraph("bialg", nodes, wires)


# -- instrumentation -----------------------------------------------------------------


_counting_serial = itertools.count()


def counting_theory(base: str = "bialg") -> tuple[str, dict[str, int]]:
    """Register a clone of a built-in theory whose hooks count their
    invocations; returns (theory name, live counter dict)."""
    spec = get_theory(base)
    counters = {"node": 0, "edge": 0, "solve": 0}

    def node_hook(p, t, ps):
        counters["node"] += 1
        return spec.match_node_data(p, t, ps)

    def edge_hook(p, t, ps):
        counters["edge"] += 1
        return spec.match_edge_data(p, t, ps)

    def solve_hook(ps):
        counters["solve"] += 1
        return spec.solve_psubst(ps)

    name = f"{base}-counting-{next(_counting_serial)}"
    register_theory(replace(spec, name=name, match_node_data=node_hook,
                            match_edge_data=edge_hook,
                            solve_psubst=solve_hook))
    return name, counters


def retag(g: OpenGraph, theory_name: str) -> OpenGraph:
    return OpenGraph(theory_name, g.nodes, g.wires, g.circles, g.bboxes)


def retag_rule(r: Rule, theory_name: str) -> Rule:
    return Rule(r.name, retag(r.lhs, theory_name), retag(r.rhs, theory_name))
