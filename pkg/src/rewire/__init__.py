"""rewire: equational reasoning with string diagrams.

Diagrams are open graphs, equations are boundary-sharing rewrite rules
(optionally with !-box repetition patterns), and proofs are branching
chains of rewrite steps built by hand or by simplification strategies.
"""

from rewire.graph import (
    Endpoint, GraphError, Iso, NodeData, OpenGraph, Wire,
    boundary, compose_par, compose_seq, empty_graph, iso_check, validate,
)
from rewire.rule import (
    Rule, RuleError, expand_bbox, instantiate_rule, kill_bbox, validate_rule,
)
from rewire.theory import TheoryError, TheorySpec, get_theory, register_theory
from rewire.matcher import Claim, Match, find_bbox_matches, find_matches
from rewire.rewrite import ProofStep, RewriteError, apply_rewrite, check_step
from rewire.derivation import (
    Derivation, DerivationError, branch, extend, export_theorem, graph_at,
    new_derivation, prune, replay,
)
from rewire.simproc import (
    Loop, Reduce, ReduceAll, ReduceMetricTo, ReduceWhile, Seq, Simproc,
    SimprocError, eval_simproc,
)

__version__ = "0.1.0"
