"""On-disk formats: graphs, rules, derivations, simprocs, theory
descriptors, whole projects, and TikZ export.

Everything is JSON with keys emitted in sorted order, so encoding is
canonical: the same entity always produces identical bytes. Decoding
checks schema shape and reference integrity (a wire naming a missing
node is a decode error) but leaves semantic validation to `validate` /
`validate_rule`: a rule file that breaks a well-formedness condition
decodes fine and fails validation afterwards.

A project is a directory:

    project.json          name + graphical theory (+ optional metadata)
    theory.json           optional display descriptor for the theory
    axioms/*.rule         rules named "axioms/<stem>"
    theorems/*.rule       exported theorems, each linking its derivation
    graphs/*.graph        named graphs
    derivations/*.derive  proof histories
    simprocs/*.sp         simproc definitions named by stem
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from rewire.derivation import Derivation, _Entry
from rewire.graph import Endpoint, NodeData, OpenGraph, Wire
from rewire.matcher import Claim, Match
from rewire.rewrite import ProofStep
from rewire.rule import Rule
from rewire.simproc import (HasColour, Loop, MetricCmp, Predicate, Reduce,
                            ReduceAll, ReduceMetricTo, ReduceWhile, Seq,
                            Simproc, SimprocRegistry, get_metric)
from rewire.theory import Subst, TheorySpec, get_theory


class DecodeError(Exception):
    """A malformed document; the message starts with the path to the
    offending element."""

    def __init__(self, path: str, message: str) -> None:
        super().__init__(f"{path}: {message}")
        self.path = path


def _expect(doc: Any, keys: set[str], path: str,
            optional: set[str] = frozenset()) -> None:
    if not isinstance(doc, dict):
        raise DecodeError(path, f"expected object, got {type(doc).__name__}")
    missing = keys - set(doc)
    extra = set(doc) - keys - optional
    if missing:
        raise DecodeError(path, f"missing keys: {sorted(missing)}")
    if extra:
        raise DecodeError(path, f"unknown keys: {sorted(extra)}")


def dumps(doc: Any) -> str:
    """Canonical text form: sorted keys, stable float repr, newline at end."""
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def atomic_write(path: Path | str, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- graphs ---------------------------------------------------------------------


def _encode_endpoint(e: Endpoint) -> dict:
    return {e.kind: e.id}


def _decode_endpoint(doc: Any, path: str) -> Endpoint:
    if not isinstance(doc, dict) or len(doc) != 1:
        raise DecodeError(path, "expected {\"node\": id} or {\"boundary\": id}")
    kind, eid = next(iter(doc.items()))
    if kind not in ("node", "boundary") or not isinstance(eid, str):
        raise DecodeError(path, f"bad endpoint {doc!r}")
    return Endpoint(kind, eid)


def encode_graph(g: OpenGraph) -> dict:
    theory = get_theory(g.theory_name)
    return {
        "theory": g.theory_name,
        "nodes": {v: {"data": theory.encode_node_data(nd.data),
                      "pos": [float(nd.pos[0]), float(nd.pos[1])]}
                  for v, nd in g.nodes.items()},
        "wires": {wid: {"src": _encode_endpoint(w.src),
                        "tgt": _encode_endpoint(w.tgt),
                        "data": theory.encode_edge_data(w.data)}
                  for wid, w in g.wires.items()},
        "circles": sorted(
            (theory.encode_edge_data(c) for c in g.circles),
            key=lambda c: json.dumps(c, sort_keys=True)),
        "bboxes": {b: {"contents": sorted(members)}
                   for b, members in g.bboxes.items()},
    }


def decode_graph(doc: Any, path: str = "graph") -> OpenGraph:
    _expect(doc, {"theory", "nodes", "wires", "circles", "bboxes"}, path)
    theory = get_theory(_str(doc["theory"], f"{path}/theory"))

    nodes: dict[str, NodeData] = {}
    for v, nd in _obj(doc["nodes"], f"{path}/nodes").items():
        npath = f"{path}/nodes/{v}"
        _expect(nd, {"data", "pos"}, npath)
        pos = nd["pos"]
        if (not isinstance(pos, list) or len(pos) != 2
                or not all(isinstance(x, (int, float)) for x in pos)):
            raise DecodeError(f"{npath}/pos", "expected [x, y]")
        nodes[v] = NodeData(_payload(theory.decode_node_data, nd["data"],
                                     f"{npath}/data"),
                            (float(pos[0]), float(pos[1])))

    wires: dict[str, Wire] = {}
    for wid, wd in _obj(doc["wires"], f"{path}/wires").items():
        wpath = f"{path}/wires/{wid}"
        _expect(wd, {"src", "tgt", "data"}, wpath)
        src = _decode_endpoint(wd["src"], f"{wpath}/src")
        tgt = _decode_endpoint(wd["tgt"], f"{wpath}/tgt")
        for ep, side in ((src, "src"), (tgt, "tgt")):
            if ep.is_node and ep.id not in nodes:
                raise DecodeError(f"{wpath}/{side}", f"unknown node {ep.id}")
        wires[wid] = Wire(src, tgt, _payload(theory.decode_edge_data,
                                             wd["data"], f"{wpath}/data"))

    if not isinstance(doc["circles"], list):
        raise DecodeError(f"{path}/circles", "expected array")
    circles = tuple(_payload(theory.decode_edge_data, c,
                             f"{path}/circles/{i}")
                    for i, c in enumerate(doc["circles"]))

    boundary_ids = {w.src.id for w in wires.values() if w.src.is_boundary} \
        | {w.tgt.id for w in wires.values() if w.tgt.is_boundary}
    bboxes: dict[str, frozenset[str]] = {}
    for b, bd in _obj(doc["bboxes"], f"{path}/bboxes").items():
        _expect(bd, {"contents"}, f"{path}/bboxes/{b}")
        members = bd["contents"]
        if not isinstance(members, list):
            raise DecodeError(f"{path}/bboxes/{b}/contents", "expected array")
        for m in members:
            if m not in nodes and m not in boundary_ids:
                raise DecodeError(f"{path}/bboxes/{b}",
                                  f"unknown member {m}")
        bboxes[b] = frozenset(members)

    return OpenGraph(doc["theory"], nodes, wires, circles, bboxes)


def _obj(doc: Any, path: str) -> dict:
    if not isinstance(doc, dict):
        raise DecodeError(path, f"expected object, got {type(doc).__name__}")
    return doc


def _str(doc: Any, path: str) -> str:
    if not isinstance(doc, str):
        raise DecodeError(path, f"expected string, got {type(doc).__name__}")
    return doc


def _payload(decoder, raw: Any, path: str) -> Any:
    try:
        return decoder(raw)
    except Exception as e:
        raise DecodeError(path, str(e)) from None


# -- rules ----------------------------------------------------------------------


def encode_rule(r: Rule, derivation_link: Optional[str] = None) -> dict:
    doc = {"name": r.name,
           "lhs": encode_graph(r.lhs),
           "rhs": encode_graph(r.rhs)}
    if derivation_link is not None:
        doc["derivation"] = derivation_link
    return doc


def decode_rule(doc: Any, path: str = "rule") -> Rule:
    _expect(doc, {"name", "lhs", "rhs"}, path, optional={"derivation"})
    return Rule(_str(doc["name"], f"{path}/name"),
                decode_graph(doc["lhs"], f"{path}/lhs"),
                decode_graph(doc["rhs"], f"{path}/rhs"))


# -- matches and proof steps ------------------------------------------------------


def _encode_claim(c: Claim) -> dict:
    if c.whole is not None:
        return {"whole": c.whole}
    return {"ends": {"producer": c.producer, "consumer": c.consumer}}


def _decode_claim(doc: Any, path: str) -> Claim:
    if isinstance(doc, dict) and set(doc) == {"whole"}:
        return Claim(whole=_str(doc["whole"], f"{path}/whole"))
    if isinstance(doc, dict) and set(doc) == {"ends"}:
        ends = _obj(doc["ends"], f"{path}/ends")
        _expect(ends, {"producer", "consumer"}, f"{path}/ends")
        return Claim(producer=ends["producer"], consumer=ends["consumer"])
    raise DecodeError(path, f"bad claim {doc!r}")


def encode_match(m: Match) -> dict:
    return {
        "rule": m.rule_name,
        "multiplicity": dict(m.multiplicity),
        "node_map": dict(m.node_map),
        "wire_claims": {w: _encode_claim(c) for w, c in m.wire_claims.items()},
        "subst": dict(m.subst.bindings),
        "instance": encode_rule(m.instance),
    }


def decode_match(doc: Any, path: str = "match") -> Match:
    _expect(doc, {"rule", "multiplicity", "node_map", "wire_claims",
                  "subst", "instance"}, path)
    return Match(
        rule_name=_str(doc["rule"], f"{path}/rule"),
        instance=decode_rule(doc["instance"], f"{path}/instance"),
        node_map=dict(_obj(doc["node_map"], f"{path}/node_map")),
        wire_claims={w: _decode_claim(c, f"{path}/wire_claims/{w}")
                     for w, c in _obj(doc["wire_claims"],
                                      f"{path}/wire_claims").items()},
        subst=Subst(tuple(sorted(
            _obj(doc["subst"], f"{path}/subst").items()))),
        multiplicity={b: _int(n, f"{path}/multiplicity/{b}")
                      for b, n in _obj(doc["multiplicity"],
                                       f"{path}/multiplicity").items()},
    )


def _int(doc: Any, path: str) -> int:
    if not isinstance(doc, int) or isinstance(doc, bool):
        raise DecodeError(path, f"expected integer, got {doc!r}")
    return doc


def _encode_step(s: ProofStep) -> dict:
    return {
        "rule": s.rule_name,
        "multiplicity": dict(s.multiplicity),
        "instance": encode_rule(s.instance),
        "match": {"node_map": dict(s.node_map),
                  "wire_claims": {w: _encode_claim(c)
                                  for w, c in s.wire_claims.items()}},
        "result": encode_graph(s.result),
    }


def _decode_step(step_id: str, doc: Any, path: str) -> ProofStep:
    _expect(doc, {"rule", "multiplicity", "instance", "match", "result"},
            path, optional={"parent"})
    match = _obj(doc["match"], f"{path}/match")
    _expect(match, {"node_map", "wire_claims"}, f"{path}/match")
    return ProofStep(
        step_id=step_id,
        rule_name=_str(doc["rule"], f"{path}/rule"),
        instance=decode_rule(doc["instance"], f"{path}/instance"),
        node_map=dict(_obj(match["node_map"], f"{path}/match/node_map")),
        wire_claims={w: _decode_claim(c, f"{path}/match/wire_claims/{w}")
                     for w, c in _obj(match["wire_claims"],
                                      f"{path}/match/wire_claims").items()},
        multiplicity={b: _int(n, f"{path}/multiplicity/{b}")
                      for b, n in _obj(doc["multiplicity"],
                                       f"{path}/multiplicity").items()},
        result=decode_graph(doc["result"], f"{path}/result"),
    )


# -- derivations ------------------------------------------------------------------


def encode_derivation(d: Derivation) -> dict:
    steps = {}
    for step_id, entry in d.steps.items():
        doc = _encode_step(entry.step)
        doc["parent"] = entry.parent
        steps[step_id] = doc
    return {
        "root": encode_graph(d.root),
        "steps": steps,
        "heads": sorted(d.heads, key=lambda h: "" if h is None else h),
    }


def decode_derivation(doc: Any, path: str = "derivation") -> Derivation:
    _expect(doc, {"root", "steps", "heads"}, path)
    root = decode_graph(doc["root"], f"{path}/root")
    steps: dict[str, _Entry] = {}
    raw_steps = _obj(doc["steps"], f"{path}/steps")
    for step_id, sdoc in raw_steps.items():
        spath = f"{path}/steps/{step_id}"
        parent = _obj(sdoc, spath).get("parent")
        if parent is not None and parent not in raw_steps:
            raise DecodeError(f"{spath}/parent", f"unknown step {parent}")
        steps[step_id] = _Entry(parent, _decode_step(step_id, sdoc, spath))
    heads_doc = doc["heads"]
    if not isinstance(heads_doc, list):
        raise DecodeError(f"{path}/heads", "expected array")
    heads = set()
    for h in heads_doc:
        if h is not None and h not in steps:
            raise DecodeError(f"{path}/heads", f"unknown position {h}")
        heads.add(h)
    if not heads:
        raise DecodeError(f"{path}/heads", "a derivation needs a head")
    return Derivation(root, steps, frozenset(heads))


# -- simprocs -------------------------------------------------------------------


def encode_predicate(p: Predicate) -> dict:
    if isinstance(p, MetricCmp):
        return {"metric_cmp": {"metric": p.metric, "op": p.op,
                               "value": p.value}}
    if isinstance(p, HasColour):
        return {"has_colour": {"colour": p.colour}}
    raise DecodeError("predicate", f"not encodable: {p!r}")


def decode_predicate(doc: Any, path: str) -> Predicate:
    if isinstance(doc, dict) and set(doc) == {"metric_cmp"}:
        body = _obj(doc["metric_cmp"], f"{path}/metric_cmp")
        _expect(body, {"metric", "op", "value"}, f"{path}/metric_cmp")
        get_metric(_str(body["metric"], f"{path}/metric_cmp/metric"))
        return MetricCmp(body["metric"], _str(body["op"], path),
                         _int(body["value"], f"{path}/metric_cmp/value"))
    if isinstance(doc, dict) and set(doc) == {"has_colour"}:
        body = _obj(doc["has_colour"], f"{path}/has_colour")
        _expect(body, {"colour"}, f"{path}/has_colour")
        return HasColour(_str(body["colour"], f"{path}/has_colour/colour"))
    raise DecodeError(path, f"bad predicate {doc!r}")


def encode_simproc(s: Simproc) -> dict:
    if isinstance(s, Seq):
        return {"seq": [encode_simproc(s.first), encode_simproc(s.second)]}
    if isinstance(s, Loop):
        return {"loop": encode_simproc(s.body)}
    if isinstance(s, Reduce):
        return {"reduce": {"rule": s.rule}}
    if isinstance(s, ReduceAll):
        return {"reduce_all": {"rules": list(s.rules)}}
    if isinstance(s, ReduceWhile):
        return {"reduce_while": {"pred": encode_predicate(s.pred),
                                 "rule": s.rule}}
    if isinstance(s, ReduceMetricTo):
        return {"reduce_metric_to": {"k": s.k, "metric": s.metric,
                                     "rule": s.rule}}
    raise DecodeError("simproc", f"not encodable: {s!r}")


def decode_simproc(doc: Any, path: str = "simproc") -> Simproc:
    if not isinstance(doc, dict) or len(doc) != 1:
        raise DecodeError(path, "expected a single-constructor object")
    kind, body = next(iter(doc.items()))
    if kind == "seq":
        if not isinstance(body, list) or len(body) != 2:
            raise DecodeError(f"{path}/seq", "expected [first, second]")
        return Seq(decode_simproc(body[0], f"{path}/seq/0"),
                   decode_simproc(body[1], f"{path}/seq/1"))
    if kind == "loop":
        return Loop(decode_simproc(body, f"{path}/loop"))
    if kind == "reduce":
        _expect(body, {"rule"}, f"{path}/reduce")
        return Reduce(_str(body["rule"], f"{path}/reduce/rule"))
    if kind == "reduce_all":
        _expect(body, {"rules"}, f"{path}/reduce_all")
        rules = body["rules"]
        if not isinstance(rules, list):
            raise DecodeError(f"{path}/reduce_all/rules", "expected array")
        return ReduceAll(tuple(_str(r, f"{path}/reduce_all/rules")
                               for r in rules))
    if kind == "reduce_while":
        _expect(body, {"pred", "rule"}, f"{path}/reduce_while")
        return ReduceWhile(
            decode_predicate(body["pred"], f"{path}/reduce_while/pred"),
            _str(body["rule"], f"{path}/reduce_while/rule"))
    if kind == "reduce_metric_to":
        _expect(body, {"k", "metric", "rule"}, f"{path}/reduce_metric_to")
        get_metric(_str(body["metric"], f"{path}/reduce_metric_to/metric"))
        return ReduceMetricTo(_int(body["k"], f"{path}/reduce_metric_to/k"),
                              body["metric"],
                              _str(body["rule"],
                                   f"{path}/reduce_metric_to/rule"))
    raise DecodeError(path, f"unknown constructor: {kind}")


# -- theory descriptors ------------------------------------------------------------


def encode_theory_descriptor(spec: TheorySpec) -> dict:
    return {
        "name": spec.name,
        "node_kind": spec.node_kind,
        "edge_kind": spec.edge_kind,
        "styles": {key: {"name": st.name, "shape": st.shape,
                         "fill": st.fill,
                         "label_template": st.label_template}
                   for key, st in spec.styles.items()},
    }


def decode_theory_descriptor(doc: Any, path: str = "theory") -> TheorySpec:
    """Resolve a descriptor against the registry: the named theory must be
    compiled in and its descriptor must agree with the document."""
    _expect(doc, {"name", "node_kind", "edge_kind", "styles"}, path)
    spec = get_theory(_str(doc["name"], f"{path}/name"))
    if encode_theory_descriptor(spec) != doc:
        raise DecodeError(path, f"descriptor does not match registered "
                                f"theory {spec.name}")
    return spec


# -- generic entry points -----------------------------------------------------------


def encode(kind: str, entity: Any) -> str:
    """Canonical document text for an entity of the given kind."""
    encoders = {"graph": encode_graph, "rule": encode_rule,
                "derivation": encode_derivation, "simproc": encode_simproc,
                "theory": encode_theory_descriptor, "match": encode_match}
    if kind not in encoders:
        raise DecodeError(kind, "unknown document kind")
    return dumps(encoders[kind](entity))


def decode(kind: str, text: str) -> Any:
    decoders = {"graph": decode_graph, "rule": decode_rule,
                "derivation": decode_derivation, "simproc": decode_simproc,
                "theory": decode_theory_descriptor, "match": decode_match}
    if kind not in decoders:
        raise DecodeError(kind, "unknown document kind")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise DecodeError(kind, f"not valid JSON: {e}") from None
    return decoders[kind](doc, kind)


# -- TikZ --------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return f"{x:.4f}"


def export_tikz(g: OpenGraph, theory: TheorySpec) -> str:
    """A deterministic tikzpicture: one node per graph node (styled by the
    theory), one per boundary point (style "none"), one draw per wire,
    all in sorted id order. Boundary points have no stored position, so
    they are placed beside the node their wire attaches to."""
    names: dict[tuple[str, str], str] = {}
    lines = ["\\begin{tikzpicture}", "\\begin{pgfonlayer}{nodelayer}"]

    for i, v in enumerate(sorted(g.nodes)):
        nd = g.nodes[v]
        style = theory.node_style(nd.data)
        label = style.label_template.replace(
            "{value}", _payload_text(nd.data))
        names[("node", v)] = f"n{i}"
        lines.append(f"\\node [style={style.name}] (n{i}) at "
                     f"({_fmt(nd.pos[0])}, {_fmt(nd.pos[1])}) {{{label}}};")

    bpos = _boundary_positions(g)
    for i, b in enumerate(sorted(bpos)):
        x, y = bpos[b]
        names[("boundary", b)] = f"b{i}"
        lines.append(f"\\node [style=none] (b{i}) at "
                     f"({_fmt(x)}, {_fmt(y)}) {{}};")
    lines.append("\\end{pgfonlayer}")
    lines.append("\\begin{pgfonlayer}{edgelayer}")
    for wid in sorted(g.wires):
        w = g.wires[wid]
        src = names[(w.src.kind, w.src.id)]
        tgt = names[(w.tgt.kind, w.tgt.id)]
        lines.append(f"\\draw [style=directed] ({src}) to ({tgt});")
    base_y = min((nd.pos[1] for nd in g.nodes.values()), default=0.0) - 2.0
    for i in range(len(g.circles)):
        lines.append(f"\\draw ({_fmt(1.5 * i)}, {_fmt(base_y)}) "
                     f"circle (0.25);")
    lines.append("\\end{pgfonlayer}")
    lines.append("\\end{tikzpicture}")
    return "\n".join(lines) + "\n"


def _payload_text(data: Any) -> str:
    value = getattr(data, "value", None)
    if value is not None:
        return str(value)
    name = getattr(data, "name", None)
    if name is not None:
        return str(name)
    return "" if data is None else str(data)


def _boundary_positions(g: OpenGraph) -> dict[str, tuple[float, float]]:
    pos: dict[str, tuple[float, float]] = {}
    per_node_rank: dict[tuple[str, str], int] = {}
    bare_rank = 0
    for wid in sorted(g.wires):
        w = g.wires[wid]
        if w.src.is_boundary and w.tgt.is_boundary:
            pos[w.src.id] = (-1.2, 1.0 * bare_rank)
            pos[w.tgt.id] = (1.2, 1.0 * bare_rank)
            bare_rank += 1
            continue
        for ep, other, dx in ((w.src, w.tgt, -1.2), (w.tgt, w.src, 1.2)):
            if ep.is_boundary:
                key = (other.id, "in" if dx < 0 else "out")
                k = per_node_rank.get(key, 0)
                per_node_rank[key] = k + 1
                nd = g.nodes[other.id]
                pos[ep.id] = (nd.pos[0] + dx, nd.pos[1] + 0.4 * k)
    return pos


# -- projects ----------------------------------------------------------------------


class ProjectError(Exception):
    """Raised when a project directory is inconsistent."""


@dataclass
class Project:
    """A loaded project: one graphical theory, its rules (axioms then
    theorems, in file order), simprocs, and named graphs."""

    name: str
    theory: TheorySpec
    rules: dict[str, Rule] = field(default_factory=dict)
    simprocs: SimprocRegistry = field(default_factory=SimprocRegistry)
    graphs: dict[str, OpenGraph] = field(default_factory=dict)
    derivations: dict[str, Derivation] = field(default_factory=dict)
    theorem_links: dict[str, str] = field(default_factory=dict)
    path: Optional[Path] = None

    def add_theorem(self, rule: Rule, derivation_name: str) -> None:
        if rule.name in self.rules:
            raise ProjectError(f"name exists: {rule.name}")
        self.rules[rule.name] = rule
        self.theorem_links[rule.name] = f"derivations/{derivation_name}.derive"


def load_project(path: Path | str) -> Project:
    path = Path(path)
    meta_file = path / "project.json"
    if not meta_file.is_file():
        raise ProjectError(f"not a project (no project.json): {path}")
    meta = json.loads(meta_file.read_text(encoding="utf-8"))
    _expect(meta, {"name", "theory"}, "project.json", optional={"v"})
    project = Project(name=meta["name"], theory=get_theory(meta["theory"]),
                      path=path)

    descriptor = path / "theory.json"
    if descriptor.is_file():
        decode_theory_descriptor(
            json.loads(descriptor.read_text(encoding="utf-8")), "theory.json")

    for kind_dir, suffix in (("axioms", ".rule"), ("theorems", ".rule")):
        for f in sorted((path / kind_dir).glob(f"*{suffix}")):
            doc = json.loads(f.read_text(encoding="utf-8"))
            rule = decode_rule(doc, f"{kind_dir}/{f.name}")
            expected = f"{kind_dir}/{f.stem}"
            if rule.name != expected:
                raise ProjectError(
                    f"{f}: rule name {rule.name!r} != {expected!r}")
            if rule.theory_name != project.theory.name:
                raise ProjectError(f"{f}: wrong theory {rule.theory_name}")
            project.rules[rule.name] = rule
            if kind_dir == "theorems":
                link = doc.get("derivation")
                if link is None:
                    raise ProjectError(f"{f}: theorem lacks derivation link")
                if not (path / link).is_file():
                    raise ProjectError(f"{f}: missing derivation {link}")
                project.theorem_links[rule.name] = link

    for f in sorted((path / "graphs").glob("*.graph")):
        g = decode_graph(json.loads(f.read_text(encoding="utf-8")),
                         f"graphs/{f.name}")
        project.graphs[f.stem] = g

    for f in sorted((path / "derivations").glob("*.derive")):
        d = decode_derivation(json.loads(f.read_text(encoding="utf-8")),
                              f"derivations/{f.name}")
        for entry in d.steps.values():
            if entry.step.rule_name not in project.rules:
                raise ProjectError(
                    f"{f}: unknown rule {entry.step.rule_name}")
        project.derivations[f.stem] = d

    for f in sorted((path / "simprocs").glob("*.sp")):
        s = decode_simproc(json.loads(f.read_text(encoding="utf-8")),
                           f"simprocs/{f.name}")
        _simproc_rule_refs(s, project.rules, f"simprocs/{f.name}")
        project.simprocs.register(f.stem, s)

    return project


def _simproc_rule_refs(s: Simproc, rules: dict[str, Rule], path: str) -> None:
    if isinstance(s, Seq):
        _simproc_rule_refs(s.first, rules, path)
        _simproc_rule_refs(s.second, rules, path)
    elif isinstance(s, Loop):
        _simproc_rule_refs(s.body, rules, path)
    elif isinstance(s, (Reduce, ReduceWhile, ReduceMetricTo)):
        if s.rule not in rules:
            raise ProjectError(f"{path}: unknown rule {s.rule}")
    elif isinstance(s, ReduceAll):
        for r in s.rules:
            if r not in rules:
                raise ProjectError(f"{path}: unknown rule {r}")


def save_project(project: Project, path: Path | str) -> None:
    """Write the whole project under `path` in canonical form."""
    path = Path(path)
    atomic_write(path / "project.json",
                 dumps({"v": 1, "name": project.name,
                        "theory": project.theory.name}))
    atomic_write(path / "theory.json",
                 dumps(encode_theory_descriptor(project.theory)))
    for name, rule in project.rules.items():
        kind_dir, _, stem = name.partition("/")
        if kind_dir not in ("axioms", "theorems") or not stem:
            raise ProjectError(f"rule name not under axioms/ or theorems/: "
                               f"{name}")
        atomic_write(path / kind_dir / f"{stem}.rule",
                     dumps(encode_rule(rule,
                                       project.theorem_links.get(name))))
    for name, g in project.graphs.items():
        atomic_write(path / "graphs" / f"{name}.graph",
                     dumps(encode_graph(g)))
    for name, d in project.derivations.items():
        atomic_write(path / "derivations" / f"{name}.derive",
                     dumps(encode_derivation(d)))
    for name in project.simprocs.names():
        atomic_write(path / "simprocs" / f"{name}.sp",
                     dumps(encode_simproc(project.simprocs.get(name))))
    for sub in ("axioms", "theorems", "graphs", "derivations", "simprocs"):
        (path / sub).mkdir(exist_ok=True)
