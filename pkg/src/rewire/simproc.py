"""Simplification procedures: strategy combinators over rewrite rules.

A simproc is a small expression tree — sequence, loop, single-rule and
ruleset reduction, guarded reduction, and metric-gated reduction — whose
evaluation sends a graph to a lazy stream of proof steps. Consumers pull
steps one at a time; stopping (or signalling the optional cancel event
from another thread) performs no further rule applications.

"First match" always means the first element of the deterministic match
enumeration, with rules tried in their listed order.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Callable, Iterator, Mapping, Optional, Union

from rewire.graph import OpenGraph
from rewire.matcher import find_bbox_matches
from rewire.rewrite import ProofStep, apply_rewrite
from rewire.rule import Rule


class SimprocError(Exception):
    """Raised for unknown rules, metrics, predicates or simproc names."""


@dataclass(frozen=True)
class Seq:
    first: Simproc
    second: Simproc


@dataclass(frozen=True)
class Loop:
    body: Simproc


@dataclass(frozen=True)
class Reduce:
    rule: str


@dataclass(frozen=True)
class ReduceAll:
    rules: tuple[str, ...]


@dataclass(frozen=True)
class ReduceWhile:
    pred: Predicate
    rule: str


@dataclass(frozen=True)
class ReduceMetricTo:
    k: int
    metric: str
    rule: str


Simproc = Union[Seq, Loop, Reduce, ReduceAll, ReduceWhile, ReduceMetricTo]


# -- metrics and predicates ------------------------------------------------------

Metric = Callable[[OpenGraph], int]


def _count_colour(colour: str) -> Metric:
    return lambda g: sum(1 for nd in g.nodes.values() if nd.data == colour)


_METRICS: dict[str, Metric] = {
    "node_count": lambda g: len(g.nodes),
    "wire_count": lambda g: len(g.wires),
}


def get_metric(name: str) -> Metric:
    if name in _METRICS:
        return _METRICS[name]
    if name.startswith("count_colour:"):
        return _count_colour(name.split(":", 1)[1])
    raise SimprocError(f"no such metric: {name}")


def metric_names() -> list[str]:
    return sorted(_METRICS) + ["count_colour:<colour>"]


_CMP: dict[str, Callable[[int, int], bool]] = {
    "<": lambda a, b: a < b, "<=": lambda a, b: a <= b,
    "==": lambda a, b: a == b, "!=": lambda a, b: a != b,
    ">=": lambda a, b: a >= b, ">": lambda a, b: a > b,
}


@dataclass(frozen=True)
class MetricCmp:
    """Predicate `metric(g) <op> value`."""

    metric: str
    op: str
    value: int

    def __call__(self, g: OpenGraph) -> bool:
        if self.op not in _CMP:
            raise SimprocError(f"no such comparison: {self.op}")
        return _CMP[self.op](get_metric(self.metric)(g), self.value)


@dataclass(frozen=True)
class HasColour:
    """Predicate: some node carries the given colour payload."""

    colour: str

    def __call__(self, g: OpenGraph) -> bool:
        return any(nd.data == self.colour for nd in g.nodes.values())


Predicate = Union[MetricCmp, HasColour]


# -- evaluation ------------------------------------------------------------------


def _check_refs(s: Simproc, rules: Mapping[str, Rule]) -> None:
    if isinstance(s, Seq):
        _check_refs(s.first, rules)
        _check_refs(s.second, rules)
    elif isinstance(s, Loop):
        _check_refs(s.body, rules)
    elif isinstance(s, Reduce):
        _require_rule(s.rule, rules)
    elif isinstance(s, ReduceAll):
        for r in s.rules:
            _require_rule(r, rules)
    elif isinstance(s, ReduceWhile):
        _require_rule(s.rule, rules)
        if not callable(s.pred):
            raise SimprocError(f"bad predicate: {s.pred!r}")
    elif isinstance(s, ReduceMetricTo):
        _require_rule(s.rule, rules)
        get_metric(s.metric)
    else:
        raise SimprocError(f"not a simproc: {s!r}")


def _require_rule(name: str, rules: Mapping[str, Rule]) -> None:
    if name not in rules:
        raise SimprocError(f"unknown rule: {name}")


class _Eval:
    """One evaluation: tracks the running graph and allocates step ids."""

    def __init__(self, rules: Mapping[str, Rule], graph: OpenGraph,
                 start_id: int, cancel: Optional[threading.Event]) -> None:
        self.rules = rules
        self.graph = graph
        self.next_id = start_id
        self.cancel = cancel

    def cancelled(self) -> bool:
        return self.cancel is not None and self.cancel.is_set()

    def apply(self, rule_name: str, match) -> ProofStep:
        step = apply_rewrite(self.graph, match, str(self.next_id))
        self.next_id += 1
        self.graph = step.result
        return step

    def run(self, s: Simproc) -> Iterator[ProofStep]:
        if isinstance(s, Seq):
            yield from self.run(s.first)
            yield from self.run(s.second)
        elif isinstance(s, Loop):
            while not self.cancelled():
                progressed = False
                for step in self.run(s.body):
                    progressed = True
                    yield step
                if not progressed:
                    return
        elif isinstance(s, Reduce):
            yield from self.reduce_with([s.rule])
        elif isinstance(s, ReduceAll):
            yield from self.reduce_with(list(s.rules))
        elif isinstance(s, ReduceWhile):
            while not self.cancelled() and s.pred(self.graph):
                m = next(find_bbox_matches(self.rules[s.rule], self.graph),
                         None)
                if m is None:
                    return
                yield self.apply(s.rule, m)
        elif isinstance(s, ReduceMetricTo):
            metric = get_metric(s.metric)
            while not self.cancelled() and metric(self.graph) > s.k:
                current = metric(self.graph)
                step = None
                for m in find_bbox_matches(self.rules[s.rule], self.graph):
                    candidate = apply_rewrite(self.graph, m,
                                              str(self.next_id))
                    if metric(candidate.result) < current:
                        step = candidate
                        break
                if step is None:
                    return
                self.next_id += 1
                self.graph = step.result
                yield step

    def reduce_with(self, rule_names: list[str]) -> Iterator[ProofStep]:
        """Repeatedly apply the first match of the first rule that has
        one; stop when no listed rule matches."""
        while not self.cancelled():
            for name in rule_names:
                m = next(find_bbox_matches(self.rules[name], self.graph),
                         None)
                if m is not None:
                    yield self.apply(name, m)
                    break
            else:
                return


def eval_simproc(s: Simproc, g: OpenGraph, rules: Mapping[str, Rule],
                 start_id: int = 1,
                 cancel: Optional[threading.Event] = None
                 ) -> Iterator[ProofStep]:
    """Evaluate a simproc on a graph, yielding proof steps lazily.

    `rules` maps names to project rules; every name the simproc mentions
    must resolve, and unknown metrics are rejected, before the first step
    is produced. Step ids count up from `start_id`. If `cancel` is given,
    setting it ends the stream at the next step boundary.
    """
    _check_refs(s, rules)
    return _Eval(rules, g, start_id, cancel).run(s)


# -- registry --------------------------------------------------------------------


class SimprocRegistry:
    """Named simprocs of one project."""

    def __init__(self) -> None:
        self._procs: dict[str, Simproc] = {}

    def register(self, name: str, s: Simproc) -> None:
        if name in self._procs:
            raise SimprocError(f"simproc already registered: {name}")
        self._procs[name] = s

    def get(self, name: str) -> Simproc:
        if name not in self._procs:
            raise SimprocError(f"no such simproc: {name}")
        return self._procs[name]

    def names(self) -> list[str]:
        return sorted(self._procs)

    def __contains__(self, name: str) -> bool:
        return name in self._procs
