"""Batch entry point: validation, matching, rewriting, normalisation,
proof checking, TikZ export, and serving.

Exit codes: 0 success, 1 domain failure (violations, unknown names,
failed replay, step budget exceeded), 2 usage errors. All output is
byte-deterministic for identical inputs. The REWIRE_PROJECT environment
variable supplies a default for --project.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional

from rewire.derivation import DerivationError, extend, new_derivation, replay
from rewire.graph import GraphError, validate
from rewire.matcher import MatchError, find_bbox_matches
from rewire.persist import (DecodeError, ProjectError, atomic_write,
                            decode_derivation, decode_graph, decode_match,
                            decode_rule, dumps, encode_derivation,
                            encode_graph, encode_match, export_tikz,
                            load_project)
from rewire.rewrite import RewriteError, apply_rewrite
from rewire.rule import RuleError, validate_rule
from rewire.simproc import SimprocError, eval_simproc
from rewire.theory import TheoryError, get_theory

class CliError(Exception):
    """Domain failure: message printed to stderr, exit code 1."""


_DOMAIN_ERRORS = (CliError, DecodeError, ProjectError, DerivationError,
                  GraphError, MatchError, RewriteError, RuleError,
                  SimprocError, TheoryError)


def _read_json(path: str, what: str):
    p = Path(path)
    if not p.is_file():
        raise CliError(f"no such {what}: {path}")
    try:
        return json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise CliError(f"{path}: not valid JSON: {e}")


def _load_graph_arg(project, spec: str):
    """A --graph argument: a file path, or the name of a project graph."""
    if Path(spec).is_file():
        return decode_graph(_read_json(spec, "graph file"), spec)
    if project is not None and spec in project.graphs:
        return project.graphs[spec]
    raise CliError(f"unknown graph: {spec}")


def _project_arg(args) -> Optional[object]:
    if getattr(args, "project", None) is None:
        return None
    return load_project(args.project)


def _require_project(args):
    project = _project_arg(args)
    if project is None:
        raise CliError("a project is required (--project or REWIRE_PROJECT)")
    return project


def cmd_validate(args) -> int:
    path = args.file
    doc = _read_json(path, "file")
    if path.endswith(".rule"):
        rule = decode_rule(doc, path)
        problems = validate_rule(rule)
    else:
        g = decode_graph(doc, path)
        problems = validate(g)
    for p in problems:
        print(p)
    if problems:
        return 1
    print("ok")
    return 0


def cmd_match(args) -> int:
    project = _require_project(args)
    if args.rule not in project.rules:
        raise CliError(f"unknown rule: {args.rule}")
    target = _load_graph_arg(project, args.graph)
    scope = frozenset(args.scope.split(",")) if args.scope else None
    for m in find_bbox_matches(project.rules[args.rule], target, scope):
        sys.stdout.write(json.dumps(encode_match(m), sort_keys=True) + "\n")
    return 0


def cmd_rewrite(args) -> int:
    project = _project_arg(args)
    target = _load_graph_arg(project, args.graph)
    m = decode_match(_read_json(args.match, "match file"), args.match)
    step = apply_rewrite(target, m, args.step_id)
    sys.stdout.write(dumps(encode_graph(step.result)))
    return 0


def cmd_normalize(args) -> int:
    project = _require_project(args)
    simproc = project.simprocs.get(args.simproc)
    g = _load_graph_arg(project, args.graph)
    d = new_derivation(g)
    head = None
    exceeded = False
    for n, step in enumerate(eval_simproc(simproc, g, project.rules)):
        if n >= args.max_steps:
            exceeded = True
            break
        d = extend(d, head, step)
        head = step.step_id
    if args.derivation:
        atomic_write(args.derivation, dumps(encode_derivation(d)))
    if exceeded:
        print(f"step budget exceeded after {args.max_steps} steps",
              file=sys.stderr)
        return 1
    final = g if head is None else d.steps[head].step.result
    sys.stdout.write(dumps(encode_graph(final)))
    return 0


def cmd_check(args) -> int:
    project = _require_project(args)
    d = decode_derivation(_read_json(args.derivation, "derivation"),
                          args.derivation)
    problem = replay(d, project.rules)
    if problem is not None:
        print(problem)
        return 1
    print(f"ok: {len(d.steps)} steps verified")
    return 0


def cmd_export_tikz(args) -> int:
    project = _project_arg(args)
    g = _load_graph_arg(project, args.graph)
    sys.stdout.write(export_tikz(g, get_theory(g.theory_name)))
    return 0


def cmd_serve(args) -> int:
    from rewire.service import Server, serve_http, serve_stdio

    project = _require_project(args)
    server = Server(project)
    if args.stdio:
        serve_stdio(server)
        return 0
    ui_dir = Path(args.ui) if args.ui else _default_ui_dir()
    serve_http(server, args.port, ui_dir)
    return 0


def _default_ui_dir() -> Optional[Path]:
    candidate = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    return candidate if candidate.is_dir() else None


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rewire",
        description="String diagram rewriting and proof checking.")
    sub = parser.add_subparsers(dest="command", required=True)
    default_project = os.environ.get("REWIRE_PROJECT")

    def with_project(p):
        p.add_argument("--project", default=default_project,
                       help="project directory (default: $REWIRE_PROJECT)")

    p = sub.add_parser("validate", help="validate a .graph or .rule file")
    p.add_argument("file")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("match", help="list matches of a rule as JSON lines")
    with_project(p)
    p.add_argument("--rule", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--scope", help="comma-separated target node ids")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("rewrite", help="apply a stored match to a graph")
    with_project(p)
    p.add_argument("--graph", required=True)
    p.add_argument("--match", required=True, help="match JSON file")
    p.add_argument("--step-id", default="1")
    p.set_defaults(func=cmd_rewrite)

    p = sub.add_parser("normalize", help="run a simproc to exhaustion")
    with_project(p)
    p.add_argument("--simproc", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--max-steps", type=int, default=10000)
    p.add_argument("--derivation", help="write the derivation here")
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("check", help="replay a stored derivation")
    with_project(p)
    p.add_argument("--derivation", required=True)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("export-tikz", help="render a graph as TikZ")
    with_project(p)
    p.add_argument("--graph", required=True)
    p.set_defaults(func=cmd_export_tikz)

    p = sub.add_parser("serve", help="serve the protocol (HTTP or stdio)")
    with_project(p)
    p.add_argument("--port", type=int, default=8085)
    p.add_argument("--stdio", action="store_true",
                   help="speak newline-delimited JSON on stdin/stdout")
    p.add_argument("--ui", help="directory with the UI bundle")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    try:
        return args.func(args)
    except _DOMAIN_ERRORS as e:
        print(str(e), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
