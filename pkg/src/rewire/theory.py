"""Graphical theories: pluggable node/edge data behaviour.

A theory owns the payloads carried by nodes and wires. The engine treats
payloads as black boxes and only touches them through the hooks collected
in a :class:`TheorySpec`: pairwise matching (accumulating constraint state
in a :class:`PSubst`), constraint solving into :class:`Subst` values, and
substitution back into payloads. Two theories ship built in:

* ``bialg`` — node payload is a colour, ``"white"`` or ``"gray"``; wires
  carry unit data (``None``). Matching is payload equality; no variables.
* ``strvar`` — node payload is ``Lit(s)`` or ``Var(x)``; wires carry unit
  data. Pattern variables bind to target literals during matching, with
  conflicting bindings rejected eagerly.

The registry is fixed at import time; user theories register at process
start, before any matching work begins.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Iterator, Mapping, Optional


class TheoryError(Exception):
    """Raised on foreign payloads, unknown theories, or unbound variables."""


@dataclass(frozen=True)
class PSubst:
    """Constraint state accumulated while matching one diagram against
    another. Immutable: hooks return updated copies, so backtracking in
    the match search needs no undo."""

    bindings: tuple[tuple[str, str], ...] = ()

    def get(self, var: str) -> Optional[str]:
        for k, v in self.bindings:
            if k == var:
                return v
        return None

    def bind(self, var: str, value: str) -> Optional[PSubst]:
        """Add a binding; None if it conflicts with an existing one."""
        existing = self.get(var)
        if existing is not None:
            return self if existing == value else None
        return PSubst(self.bindings + ((var, value),))


@dataclass(frozen=True)
class Subst:
    """A solved instantiation: for strvar a total variable binding map,
    for bialg empty."""

    bindings: tuple[tuple[str, str], ...] = ()

    def as_dict(self) -> dict[str, str]:
        return dict(self.bindings)


@dataclass(frozen=True)
class NodeStyle:
    """How the UI and TikZ export draw one kind of node."""

    name: str
    shape: str
    fill: str
    label_template: str = ""


@dataclass(frozen=True)
class TheorySpec:
    """A graphical theory: payload kinds, display styles and the hook
    functions the engine calls during matching and rewriting."""

    name: str
    node_kind: str
    edge_kind: str
    styles: Mapping[str, NodeStyle]

    match_node_data: Callable[[Any, Any, PSubst], Optional[PSubst]]
    match_edge_data: Callable[[Any, Any, PSubst], Optional[PSubst]]
    solve_psubst: Callable[[PSubst], Iterator[Subst]]
    subst_in_node_data: Callable[[Subst, Any], Any]
    subst_in_edge_data: Callable[[Subst, Any], Any]

    # routine functions: serialisation, validity, canonical keys, variables
    encode_node_data: Callable[[Any], Any]
    decode_node_data: Callable[[Any], Any]
    encode_edge_data: Callable[[Any], Any]
    decode_edge_data: Callable[[Any], Any]
    check_node_data: Callable[[Any], bool]
    check_edge_data: Callable[[Any], bool]
    node_data_variables: Callable[[Any], frozenset[str]]
    node_style: Callable[[Any], NodeStyle]
    sample_node_data: tuple[Any, ...] = ()

    def empty_psubst(self) -> PSubst:
        return PSubst()


_REGISTRY: dict[str, TheorySpec] = {}


def register_theory(spec: TheorySpec) -> None:
    if spec.name in _REGISTRY:
        raise TheoryError(f"theory already registered: {spec.name}")
    _REGISTRY[spec.name] = spec


def get_theory(name: str) -> TheorySpec:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise TheoryError(f"unknown theory: {name}") from None


def theory_names() -> list[str]:
    return sorted(_REGISTRY)


# -- bialg: two colours, structural arity --------------------------------------

BIALG_COLOURS = ("white", "gray")


def _bialg_check_node(d: Any) -> bool:
    return d in BIALG_COLOURS


def _bialg_match_node(p: Any, t: Any, ps: PSubst) -> Optional[PSubst]:
    if not _bialg_check_node(p) or not _bialg_check_node(t):
        raise TheoryError(f"bialg: foreign node payload {p!r} / {t!r}")
    return ps if p == t else None


def _unit_match_edge(p: Any, t: Any, ps: PSubst) -> Optional[PSubst]:
    if p is not None or t is not None:
        raise TheoryError(f"unit edge data expected, got {p!r} / {t!r}")
    return ps


def _single_solution(ps: PSubst) -> Iterator[Subst]:
    yield Subst(tuple(sorted(ps.bindings)))


def _identity_subst(_s: Subst, d: Any) -> Any:
    return d


_BIALG_STYLES = {
    "white": NodeStyle("white dot", "circle", "white"),
    "gray": NodeStyle("gray dot", "circle", "gray"),
}

bialg_theory = TheorySpec(
    name="bialg",
    node_kind="colour",
    edge_kind="unit",
    styles=_BIALG_STYLES,
    match_node_data=_bialg_match_node,
    match_edge_data=_unit_match_edge,
    solve_psubst=_single_solution,
    subst_in_node_data=_identity_subst,
    subst_in_edge_data=_identity_subst,
    encode_node_data=lambda d: d,
    decode_node_data=lambda j: j if j in BIALG_COLOURS else _decode_fail("bialg", j),
    encode_edge_data=lambda d: None,
    decode_edge_data=lambda j: None if j is None else _decode_fail("bialg", j),
    check_node_data=_bialg_check_node,
    check_edge_data=lambda d: d is None,
    node_data_variables=lambda d: frozenset(),
    node_style=lambda d: _BIALG_STYLES[d],
    sample_node_data=("white", "gray"),
)


def _decode_fail(theory: str, j: Any) -> Any:
    raise TheoryError(f"{theory}: cannot decode payload {j!r}")


# -- strvar: string literals and variables --------------------------------------


@dataclass(frozen=True)
class Lit:
    value: str


@dataclass(frozen=True)
class Var:
    name: str


def _strvar_check_node(d: Any) -> bool:
    return isinstance(d, (Lit, Var))


def _strvar_match_node(p: Any, t: Any, ps: PSubst) -> Optional[PSubst]:
    if not _strvar_check_node(p) or not _strvar_check_node(t):
        raise TheoryError(f"strvar: foreign node payload {p!r} / {t!r}")
    if isinstance(t, Var):
        raise TheoryError(f"strvar: target not ground: {t!r}")
    if isinstance(p, Lit):
        return ps if p.value == t.value else None
    return ps.bind(p.name, t.value)


def _strvar_subst_node(s: Subst, d: Any) -> Any:
    if isinstance(d, Lit):
        return d
    value = s.as_dict().get(d.name)
    if value is None:
        raise TheoryError(f"strvar: unbound variable {d.name}")
    return Lit(value)


def _strvar_encode(d: Any) -> Any:
    if isinstance(d, Lit):
        return {"lit": d.value}
    return {"var": d.name}


def _strvar_decode(j: Any) -> Any:
    if isinstance(j, dict) and set(j) == {"lit"}:
        return Lit(str(j["lit"]))
    if isinstance(j, dict) and set(j) == {"var"}:
        return Var(str(j["var"]))
    return _decode_fail("strvar", j)


_STRVAR_STYLE = NodeStyle("box", "rectangle", "white", "{value}")

strvar_theory = TheorySpec(
    name="strvar",
    node_kind="lit-or-var",
    edge_kind="unit",
    styles={"box": _STRVAR_STYLE},
    match_node_data=_strvar_match_node,
    match_edge_data=_unit_match_edge,
    solve_psubst=_single_solution,
    subst_in_node_data=_strvar_subst_node,
    subst_in_edge_data=_identity_subst,
    encode_node_data=_strvar_encode,
    decode_node_data=_strvar_decode,
    encode_edge_data=lambda d: None,
    decode_edge_data=lambda j: None if j is None else _decode_fail("strvar", j),
    check_node_data=_strvar_check_node,
    check_edge_data=lambda d: d is None,
    node_data_variables=lambda d: frozenset([d.name]) if isinstance(d, Var)
        else frozenset(),
    node_style=lambda d: _STRVAR_STYLE,
    sample_node_data=(Lit("f"), Lit("g"), Var("x")),
)

register_theory(bialg_theory)
register_theory(strvar_theory)
