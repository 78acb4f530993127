"""Branching proof histories.

A derivation is a tree of proof steps growing from a root graph. Positions
are step ids, with None standing for the root; *heads* are the positions
open for extension. Extending appends a verified step under a head and
advances that head; branching reopens any existing position as a second
head. A completed head can be exported as a theorem: a rule from the root
graph to the head's graph.

Derivations are immutable values; every operation returns a new one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

from rewire.graph import OpenGraph
from rewire.rewrite import ProofStep, apply_rewrite, check_step
from rewire.rule import Rule
from rewire.matcher import Match, match_violations
from rewire.theory import Subst

Position = Optional[str]  # a step id, or None for the root


class DerivationError(Exception):
    """Raised on unknown positions, stale heads, or invalid steps."""


@dataclass(frozen=True)
class _Entry:
    parent: Position
    step: ProofStep


@dataclass(frozen=True)
class Derivation:
    root: OpenGraph
    steps: Mapping[str, _Entry]
    heads: frozenset[Position]

    def positions(self) -> list[Position]:
        """All positions, root first, then step ids sorted."""
        return [None] + sorted(self.steps)

    def children(self, position: Position) -> list[str]:
        return sorted(s for s, e in self.steps.items() if e.parent == position)

    def fresh_step_id(self) -> str:
        return str(1 + max((int(s) for s in self.steps if s.isdigit()),
                           default=0))


def new_derivation(root: OpenGraph) -> Derivation:
    return Derivation(root, {}, frozenset([None]))


def graph_at(d: Derivation, position: Position) -> OpenGraph:
    """The graph reached at a position: the root, or a step's result."""
    if position is None:
        return d.root
    if position not in d.steps:
        raise DerivationError(f"unknown position: {position}")
    return d.steps[position].step.result


def extend(d: Derivation, head: Position, step: ProofStep) -> Derivation:
    """Append `step` under `head` and advance the head to it.

    The step must replay exactly against the head's graph (rule-name
    resolution is deferred to :func:`replay`, which has the project
    ruleset in hand).
    """
    if head not in d.heads:
        raise DerivationError(f"not a head: {head}")
    if step.step_id in d.steps:
        raise DerivationError(f"duplicate step id: {step.step_id}")
    pre = graph_at(d, head)
    m = Match(step.rule_name, step.instance, step.node_map, step.wire_claims,
              Subst(), step.multiplicity)
    problems = match_violations(m, pre)
    if problems:
        raise DerivationError("invalid step: " + "; ".join(problems))
    if apply_rewrite(pre, m, step.step_id).result != step.result:
        raise DerivationError("invalid step: result mismatch")
    steps = dict(d.steps)
    steps[step.step_id] = _Entry(head, step)
    heads = (d.heads - {head}) | {step.step_id}
    return Derivation(d.root, steps, heads)


def extend_with_match(d: Derivation, head: Position, m: Match
                      ) -> tuple[Derivation, ProofStep]:
    """Apply a match at a head and extend in one go, allocating the id."""
    if head not in d.heads:
        raise DerivationError(f"not a head: {head}")
    step = apply_rewrite(graph_at(d, head), m, d.fresh_step_id())
    return extend(d, head, step), step


def branch(d: Derivation, position: Position) -> Derivation:
    """Reopen a position as a head (idempotent on existing heads)."""
    if position is not None and position not in d.steps:
        raise DerivationError(f"unknown position: {position}")
    return Derivation(d.root, d.steps, d.heads | {position})


def prune(d: Derivation, step_id: str) -> Derivation:
    """Remove a step and its whole subtree; heads inside the subtree are
    replaced by the step's parent."""
    if step_id not in d.steps:
        raise DerivationError(f"unknown position: {step_id}")
    doomed = {step_id}
    grew = True
    while grew:
        grew = False
        for s, e in d.steps.items():
            if e.parent in doomed and s not in doomed:
                doomed.add(s)
                grew = True
    parent = d.steps[step_id].parent
    steps = {s: e for s, e in d.steps.items() if s not in doomed}
    heads = frozenset(h for h in d.heads if h not in doomed)
    if len(heads) < len(d.heads):
        heads = heads | {parent}
    return Derivation(d.root, steps, heads)


def export_theorem(d: Derivation, head: Position, name: str,
                   existing_names: Optional[set[str]] = None) -> Rule:
    """Package the chain from the root to `head` as a reusable rule.

    Boundaries are preserved along every step, so the result always
    passes rule validation.
    """
    if head not in d.heads:
        raise DerivationError(f"not a head: {head}")
    if existing_names and name in existing_names:
        raise DerivationError(f"name exists: {name}")
    return Rule(name, d.root, graph_at(d, head))


def replay(d: Derivation, ruleset: Mapping[str, Rule]) -> Optional[str]:
    """Re-verify every step of the derivation against the project rules.

    Walks parent-before-child in deterministic order; returns a
    description naming the first failing step, or None when the whole
    tree checks out.
    """
    order: list[str] = []
    frontier: list[Position] = [None]
    while frontier:
        position = frontier.pop(0)
        kids = d.children(position)
        order.extend(kids)
        frontier.extend(kids)

    for step_id in order:
        entry = d.steps[step_id]
        if entry.step.step_id != step_id:
            return f"step {step_id}: id mismatch"
        pre = graph_at(d, entry.parent)
        problem = check_step(pre, entry.step, ruleset)
        if problem is not None:
            return f"step {step_id}: {problem}"
    for h in d.heads:
        if h is not None and h not in d.steps:
            return f"head at unknown position: {h}"
    return None
