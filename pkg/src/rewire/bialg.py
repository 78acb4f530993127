"""Bundled example projects for commutative bialgebras.

Two presentations ship with the engine. The main project uses n-ary
(co)multiplications with five !-box rules: adjacent white multiplications
merge, the 1-ary white node is an identity wire, the two gray (comonoid)
mirror images, and the distribution rule replacing a multiplication
feeding a comultiplication by a complete bipartite graph. This system is
strongly normalising, and `bialg_normalize` runs the naive
reduce-everything strategy to a normal form.

The second project is the binary presentation: associativity and unit of
the monoid, plus the three binary interaction rules (which are exactly
the distribution rule pinned at repetition counts (2,2), (0,2) and
(2,0)). Commutativity needs no rule: nodes are unordered, so the two
sides of the commutativity equation are the same graph.

Rule names keep the conventional "red"/"green" file names for the white
and gray nodes respectively.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Optional

from rewire.derivation import Derivation, export_theorem, extend, \
    new_derivation
from rewire.graph import Endpoint, NodeData, OpenGraph, Wire
from rewire.persist import Project, save_project
from rewire.rule import Rule
from rewire.simproc import ReduceAll, eval_simproc
from rewire.theory import get_theory

N = Endpoint.node
B = Endpoint.boundary

RULE_ORDER = ("axioms/red-merge", "axioms/red-id", "axioms/green-merge",
              "axioms/green-id", "axioms/distribute")


def _g(nodes: dict, wires: dict, bboxes: Optional[dict] = None) -> OpenGraph:
    return OpenGraph(
        "bialg",
        {v: NodeData(colour, pos) for v, (colour, pos) in nodes.items()},
        {wid: Wire(src, tgt) for wid, (src, tgt) in wires.items()},
        (),
        {b: frozenset(m) for b, m in (bboxes or {}).items()})


def red_merge() -> Rule:
    lhs = _g({"w1": ("white", (0.5, 0.0)), "w2": ("white", (-0.5, 0.5))},
             {"bw": (B("b0"), N("w1")), "mw": (N("w2"), N("w1")),
              "cw": (B("c0"), N("w2")), "ow": (N("w1"), B("out"))},
             {"b": {"b0"}, "c": {"c0"}})
    rhs = _g({"w": ("white", (0.0, 0.0))},
             {"bw": (B("b0"), N("w")), "cw": (B("c0"), N("w")),
              "ow": (N("w"), B("out"))},
             {"b": {"b0"}, "c": {"c0"}})
    return Rule("axioms/red-merge", lhs, rhs)


def red_id() -> Rule:
    lhs = _g({"w": ("white", (0.0, 0.0))},
             {"iw": (B("in"), N("w")), "ow": (N("w"), B("out"))})
    rhs = _g({}, {"w0": (B("in"), B("out"))})
    return Rule("axioms/red-id", lhs, rhs)


def green_merge() -> Rule:
    lhs = _g({"g1": ("gray", (-0.5, 0.0)), "g2": ("gray", (0.5, -0.5))},
             {"iw": (B("in"), N("g1")), "bw": (N("g1"), B("b0")),
              "mw": (N("g1"), N("g2")), "cw": (N("g2"), B("c0"))},
             {"b": {"b0"}, "c": {"c0"}})
    rhs = _g({"g": ("gray", (0.0, 0.0))},
             {"iw": (B("in"), N("g")), "bw": (N("g"), B("b0")),
              "cw": (N("g"), B("c0"))},
             {"b": {"b0"}, "c": {"c0"}})
    return Rule("axioms/green-merge", lhs, rhs)


def green_id() -> Rule:
    lhs = _g({"g": ("gray", (0.0, 0.0))},
             {"iw": (B("in"), N("g")), "ow": (N("g"), B("out"))})
    rhs = _g({}, {"w0": (B("in"), B("out"))})
    return Rule("axioms/green-id", lhs, rhs)


def distribute() -> Rule:
    lhs = _g({"w": ("white", (-0.75, 0.0)), "g": ("gray", (0.75, 0.0))},
             {"bw": (B("b0"), N("w")), "mw": (N("w"), N("g")),
              "cw": (N("g"), B("c0"))},
             {"b": {"b0"}, "c": {"c0"}})
    rhs = _g({"gb": ("gray", (-0.75, 0.0)), "wc": ("white", (0.75, 0.0))},
             {"bw": (B("b0"), N("gb")), "mw": (N("gb"), N("wc")),
              "cw": (N("wc"), B("c0"))},
             {"b": {"gb", "b0"}, "c": {"wc", "c0"}})
    return Rule("axioms/distribute", lhs, rhs)


def sample_pair() -> OpenGraph:
    """A binary multiplication feeding a binary comultiplication."""
    return _g({"w": ("white", (-0.75, 0.0)), "g": ("gray", (0.75, 0.0))},
              {"wa": (B("a"), N("w")), "wb": (B("b"), N("w")),
               "wm": (N("w"), N("g")),
               "wc": (N("g"), B("c")), "wd": (N("g"), B("d"))})


def sample_merge() -> OpenGraph:
    """Two adjacent binary white multiplications."""
    return _g({"A": ("white", (-0.75, 0.5)), "B": ("white", (0.5, 0.0))},
              {"wx": (B("x"), N("A")), "wy": (B("y"), N("A")),
               "wm": (N("A"), N("B")), "wz": (B("z"), N("B")),
               "wo": (N("B"), B("o"))})


def sample_ouroboros() -> OpenGraph:
    """A 1-ary multiplication whose output loops back to its input."""
    return _g({"n": ("white", (0.0, 0.0))}, {"loop": (N("n"), N("n"))})


def bialg_ruleset() -> Project:
    """The n-ary bialgebra project: 5 !-box axioms, the naive normaliser
    strategy, and sample graphs."""
    project = Project(name="bialgebra", theory=get_theory("bialg"))
    for rule in (red_merge(), red_id(), green_merge(), green_id(),
                 distribute()):
        project.rules[rule.name] = rule
    project.simprocs.register("basic_simp", ReduceAll(RULE_ORDER))
    project.graphs["pair"] = sample_pair()
    project.graphs["merge-sample"] = sample_merge()
    project.graphs["ouroboros"] = sample_ouroboros()
    return project


# -- the binary presentation -------------------------------------------------------


def assoc() -> Rule:
    lhs = _g({"m1": ("white", (0.5, 0.0)), "m2": ("white", (-0.5, 0.5))},
             {"wa": (B("a"), N("m2")), "wb": (B("b"), N("m2")),
              "wm": (N("m2"), N("m1")), "wc": (B("c"), N("m1")),
              "wo": (N("m1"), B("out"))})
    rhs = _g({"m1": ("white", (-0.5, 0.0)), "m2": ("white", (0.5, 0.5))},
             {"wa": (B("a"), N("m1")), "wb": (B("b"), N("m2")),
              "wc": (B("c"), N("m2")), "wm": (N("m2"), N("m1")),
              "wo": (N("m1"), B("out"))})
    return Rule("axioms/assoc", lhs, rhs)


def unit() -> Rule:
    lhs = _g({"u": ("white", (-0.5, 0.5)), "m": ("white", (0.0, 0.0))},
             {"wa": (B("a"), N("m")), "wu": (N("u"), N("m")),
              "wo": (N("m"), B("out"))})
    rhs = _g({}, {"w0": (B("a"), B("out"))})
    return Rule("axioms/unit", lhs, rhs)


def bialg_binary() -> Rule:
    lhs = _g({"w": ("white", (-0.5, 0.0)), "g": ("gray", (0.5, 0.0))},
             {"wa": (B("a"), N("w")), "wb": (B("b"), N("w")),
              "wm": (N("w"), N("g")),
              "wc": (N("g"), B("c")), "wd": (N("g"), B("d"))})
    rhs = _g({"pa": ("gray", (-0.7, 0.4)), "pb": ("gray", (-0.7, -0.4)),
              "qc": ("white", (0.7, 0.4)), "qd": ("white", (0.7, -0.4))},
             {"wa": (B("a"), N("pa")), "wb": (B("b"), N("pb")),
              "k1": (N("pa"), N("qc")), "k2": (N("pa"), N("qd")),
              "k3": (N("pb"), N("qc")), "k4": (N("pb"), N("qd")),
              "wc": (N("qc"), B("c")), "wd": (N("qd"), B("d"))})
    return Rule("axioms/bialg", lhs, rhs)


def copy_rule() -> Rule:
    lhs = _g({"u": ("white", (-0.5, 0.0)), "g": ("gray", (0.5, 0.0))},
             {"wu": (N("u"), N("g")),
              "wc": (N("g"), B("c")), "wd": (N("g"), B("d"))})
    rhs = _g({"uc": ("white", (0.0, 0.4)), "ud": ("white", (0.0, -0.4))},
             {"wc": (N("uc"), B("c")), "wd": (N("ud"), B("d"))})
    return Rule("axioms/copy", lhs, rhs)


def cocopy_rule() -> Rule:
    lhs = _g({"w": ("white", (-0.5, 0.0)), "e": ("gray", (0.5, 0.0))},
             {"wa": (B("a"), N("w")), "wb": (B("b"), N("w")),
              "we": (N("w"), N("e"))})
    rhs = _g({"ea": ("gray", (0.0, 0.4)), "eb": ("gray", (0.0, -0.4))},
             {"wa": (B("a"), N("ea")), "wb": (B("b"), N("eb"))})
    return Rule("axioms/cocopy", lhs, rhs)


def sample_assoc_context() -> OpenGraph:
    """A five-multiplication tree with one redex for associativity: the
    diagram form of w.((x.(y.e)).z)."""
    return _g({"M0": ("white", (0.0, 0.0)), "M1": ("white", (1.0, 0.8)),
               "M2": ("white", (2.0, 1.6)), "M3": ("white", (3.0, 2.4)),
               "E": ("white", (4.0, 3.2))},
              {"w_iw": (B("iw"), N("M0")), "w_m1": (N("M1"), N("M0")),
               "w_o": (N("M0"), B("o")),
               "w_m2": (N("M2"), N("M1")), "w_iz": (B("iz"), N("M1")),
               "w_ix": (B("ix"), N("M2")), "w_m3": (N("M3"), N("M2")),
               "w_iy": (B("iy"), N("M3")), "w_e": (N("E"), N("M3"))})


def sample_assoc_context_rewritten() -> OpenGraph:
    """The expected result of associating the redex to the right:
    w.(x.((y.e).z))."""
    return _g({"M0": ("white", (0.0, 0.0)), "M3": ("white", (3.0, 2.4)),
               "E": ("white", (4.0, 3.2)), "N1": ("white", (1.0, 0.8)),
               "N2": ("white", (2.0, 1.6))},
              {"w_iw": (B("iw"), N("M0")), "w_n1": (N("N1"), N("M0")),
               "w_o": (N("M0"), B("o")),
               "w_ix": (B("ix"), N("N1")), "w_n2": (N("N2"), N("N1")),
               "w_m3": (N("M3"), N("N2")), "w_iz": (B("iz"), N("N2")),
               "w_iy": (B("iy"), N("M3")), "w_e": (N("E"), N("M3"))})


def sample_bialg_context() -> OpenGraph:
    """A multiplication-comultiplication pair inside a bigger diagram."""
    return _g({"W": ("white", (-1.5, 0.0)), "G": ("gray", (0.0, 0.0)),
               "W2": ("white", (1.5, -0.5))},
              {"wa": (B("a"), N("W")), "wb": (B("b"), N("W")),
               "wm": (N("W"), N("G")),
               "wd": (N("G"), B("d")), "ww2": (N("G"), N("W2")),
               "we": (B("e"), N("W2")), "wo": (N("W2"), B("o"))})


def sample_bialg_context_rewritten() -> OpenGraph:
    """The pair replaced by the complete bipartite graph, context kept."""
    return _g({"pa": ("gray", (-1.5, 0.4)), "pb": ("gray", (-1.5, -0.4)),
               "qc": ("white", (0.0, 0.4)), "qd": ("white", (0.0, -0.4)),
               "W2": ("white", (1.5, -0.5))},
              {"wa": (B("a"), N("pa")), "wb": (B("b"), N("pb")),
               "k1": (N("pa"), N("qc")), "k2": (N("pa"), N("qd")),
               "k3": (N("pb"), N("qc")), "k4": (N("pb"), N("qd")),
               "wd": (N("qc"), B("d")), "ww2": (N("qd"), N("W2")),
               "we": (B("e"), N("W2")), "wo": (N("W2"), B("o"))})


def binary_ruleset() -> Project:
    """The binary bialgebra project: monoid rules plus the three
    interaction rules, and a monoid normaliser."""
    project = Project(name="bialgebra-binary", theory=get_theory("bialg"))
    for rule in (assoc(), unit(), bialg_binary(), copy_rule(),
                 cocopy_rule()):
        project.rules[rule.name] = rule
    # associativity alone loops (its two sides are isomorphic once inputs
    # are unordered), so the only unguarded reduction offered is unit
    # elimination; assoc belongs inside metric-gated strategies
    project.simprocs.register("unit_elim", ReduceAll(("axioms/unit",)))
    project.graphs["assoc-context"] = sample_assoc_context()
    project.graphs["bialg-context"] = sample_bialg_context()
    return project


# -- normalisation ------------------------------------------------------------------


def bialg_normalize(g: OpenGraph,
                    rules: Optional[Mapping[str, Rule]] = None,
                    max_steps: Optional[int] = None) -> Derivation:
    """Reduce `g` with the five n-ary rules until none matches, recording
    every step in a derivation whose single head is the normal form.

    With `max_steps` set, raises RuntimeError when the budget is exceeded
    (the rules are strongly normalising, so this only guards against
    engine bugs)."""
    if rules is None:
        rules = bialg_ruleset().rules
    d = new_derivation(g)
    head = None
    for n, step in enumerate(eval_simproc(ReduceAll(RULE_ORDER), g, rules)):
        if max_steps is not None and n >= max_steps:
            raise RuntimeError(f"normalisation exceeded {max_steps} steps")
        d = extend(d, head, step)
        head = step.step_id
    return d


# -- the shipped example project ------------------------------------------------


def build_example_project(dest: Path | str) -> Project:
    """Write the complete on-disk bialgebra example under `dest`: the five
    axioms, sample graphs, a recorded normalisation of the sample pair,
    and the theorem exported from it."""
    project = bialg_ruleset()
    d = bialg_normalize(project.graphs["pair"])
    project.derivations["pair-normalize"] = d
    head = next(iter(d.heads))
    theorem = export_theorem(d, head, "theorems/pair-normal",
                             existing_names=set(project.rules))
    project.add_theorem(theorem, "pair-normalize")
    save_project(project, Path(dest))
    return project


def example_project_path() -> Path:
    """Location of the bialgebra project bundled with the package."""
    return Path(__file__).resolve().parent / "projects" / "bialgebra"
