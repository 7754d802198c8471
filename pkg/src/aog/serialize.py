"""Grammar, sample, and node-map files.

JSON with a format_version field; unknown keys are rejected so schema
drift fails loudly rather than silently dropping data.  Dumps are
canonical (sorted keys, two-space indent, trailing newline) so repeated
saves of the same object are byte-identical.  Rule order is preserved
as authored: it is the tie-break order for sampling and parsing.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from .domains import DomainBinding, FunctionRef, RelationRef, domain_from_config
from .errors import DomainError, FormatError
from .grammar import (
    AndRule,
    DataSample,
    Grammar,
    OrRule,
    ParseTree,
    TerminalInstance,
    TreeNode,
    validate_grammar,
)
from .normalize import NodeMap

FORMAT_VERSION = 1


def canonical_dumps(payload: Any) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _require_keys(obj: Any, required: set[str], optional: set[str], where: str) -> dict:
    if not isinstance(obj, dict):
        raise FormatError(f"{where}: expected an object, got {type(obj).__name__}")
    missing = required - obj.keys()
    if missing:
        raise FormatError(f"{where}: missing keys {sorted(missing)}")
    unknown = obj.keys() - required - optional
    if unknown:
        raise FormatError(f"{where}: unknown keys {sorted(unknown)}")
    return obj


def _string(value: Any, where: str) -> str:
    if not isinstance(value, str) or not value:
        raise FormatError(f"{where}: expected a non-empty string")
    return value


def _number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise FormatError(f"{where}: expected a number")
    return float(value)


def _config(value: Any, where: str) -> dict:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise FormatError(f"{where}: config must be an object")
    return value


# -------------------------------------------------------------------- grammars


def grammar_to_json_dict(g: Grammar) -> dict:
    nodes = [{"id": n, "kind": "terminal"} for n in sorted(g.terminals)]
    nodes += [{"id": n, "kind": "and"} for n in sorted(g.and_nodes)]
    nodes += [{"id": n, "kind": "or"} for n in sorted(g.or_nodes)]
    return {
        "format_version": FORMAT_VERSION,
        "domain": {"name": g.domain.name, "config": g.domain.config},
        "nodes": sorted(nodes, key=lambda n: n["id"]),
        "start": g.start,
        "and_rules": [
            {
                "head": r.head,
                "children": list(r.children),
                "relation": {"key": r.relation.key, "config": dict(r.relation.config)},
                "function": {"key": r.function.key, "config": dict(r.function.config)},
            }
            for r in g.and_rules
        ],
        "or_rules": [
            {"head": r.head, "child": r.child, "prob": r.prob} for r in g.or_rules
        ],
    }


def grammar_from_json_dict(raw: Any, renormalize: bool = False, check: bool = True) -> Grammar:
    """Rebuild a grammar; check=True also enforces the semantic invariants
    (rule shapes, probability sums), raising FormatError on violations."""
    top = _require_keys(
        raw,
        {"format_version", "domain", "nodes", "start", "and_rules", "or_rules"},
        set(),
        "grammar",
    )
    if top["format_version"] != FORMAT_VERSION:
        raise FormatError(f"unsupported format_version {top['format_version']!r}")
    dom_raw = _require_keys(top["domain"], {"name"}, {"config"}, "domain")
    try:
        domain = domain_from_config(
            _string(dom_raw["name"], "domain.name"), _config(dom_raw.get("config"), "domain")
        )
    except DomainError as exc:
        raise FormatError(str(exc)) from None

    kinds = {"terminal": set(), "and": set(), "or": set()}
    if not isinstance(top["nodes"], list):
        raise FormatError("nodes: expected a list")
    seen: set[str] = set()
    for i, entry in enumerate(top["nodes"]):
        node = _require_keys(entry, {"id", "kind"}, set(), f"nodes[{i}]")
        name = _string(node["id"], f"nodes[{i}].id")
        if name in seen:
            raise FormatError(f"nodes[{i}]: duplicate node id {name!r}")
        seen.add(name)
        kind = node["kind"]
        if kind not in kinds:
            raise FormatError(f"nodes[{i}]: unknown kind {kind!r}")
        kinds[kind].add(name)

    and_rules = []
    if not isinstance(top["and_rules"], list):
        raise FormatError("and_rules: expected a list")
    for i, entry in enumerate(top["and_rules"]):
        where = f"and_rules[{i}]"
        rule = _require_keys(entry, {"head", "children", "relation", "function"}, set(), where)
        children = rule["children"]
        if not isinstance(children, list) or not all(isinstance(c, str) for c in children):
            raise FormatError(f"{where}: children must be a list of node ids")
        rel = _require_keys(rule["relation"], {"key"}, {"config"}, f"{where}.relation")
        fn = _require_keys(rule["function"], {"key"}, {"config"}, f"{where}.function")
        and_rules.append(
            AndRule(
                _string(rule["head"], f"{where}.head"),
                tuple(children),
                RelationRef(
                    _string(rel["key"], f"{where}.relation.key"),
                    _config(rel.get("config"), f"{where}.relation"),
                ),
                FunctionRef(
                    _string(fn["key"], f"{where}.function.key"),
                    _config(fn.get("config"), f"{where}.function"),
                ),
            )
        )

    or_rules = []
    if not isinstance(top["or_rules"], list):
        raise FormatError("or_rules: expected a list")
    for i, entry in enumerate(top["or_rules"]):
        where = f"or_rules[{i}]"
        rule = _require_keys(entry, {"head", "child", "prob"}, set(), where)
        or_rules.append(
            OrRule(
                _string(rule["head"], f"{where}.head"),
                _string(rule["child"], f"{where}.child"),
                _number(rule["prob"], f"{where}.prob"),
            )
        )
    if renormalize:
        totals: dict[str, float] = {}
        for rule in or_rules:
            totals[rule.head] = totals.get(rule.head, 0.0) + rule.prob
        or_rules = [
            OrRule(r.head, r.child, r.prob / totals[r.head]) if totals[r.head] > 0 else r
            for r in or_rules
        ]

    g = Grammar(
        domain=domain,
        terminals=frozenset(kinds["terminal"]),
        and_nodes=frozenset(kinds["and"]),
        or_nodes=frozenset(kinds["or"]),
        start=_string(top["start"], "start"),
        and_rules=tuple(and_rules),
        or_rules=tuple(or_rules),
    )
    if check:
        report = validate_grammar(g)
        if not report.ok:
            raise FormatError(f"grammar is not valid:\n{report}")
    return g


def save_grammar(g: Grammar, path: str | Path) -> None:
    Path(path).write_text(canonical_dumps(grammar_to_json_dict(g)))


def load_grammar(path: str | Path, renormalize: bool = False, check: bool = True) -> Grammar:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from None
    return grammar_from_json_dict(raw, renormalize=renormalize, check=check)


# --------------------------------------------------------------------- samples


def sample_to_json_dict(x: DataSample, domain: DomainBinding) -> dict:
    return {
        "instances": [
            {
                "id": inst.instance_id,
                "terminal": inst.terminal,
                "param": domain.encode_param(inst.param),
            }
            for inst in x.instances
        ]
    }


def sample_from_json_dict(raw: Any, domain: DomainBinding) -> DataSample:
    top = _require_keys(raw, {"instances"}, set(), "sample")
    if not isinstance(top["instances"], list):
        raise FormatError("instances: expected a list")
    instances = []
    for i, entry in enumerate(top["instances"]):
        where = f"instances[{i}]"
        inst = _require_keys(entry, {"id", "terminal", "param"}, set(), where)
        try:
            param = domain.decode_param(inst["param"])
        except DomainError as exc:
            raise FormatError(f"{where}: {exc}") from None
        instances.append(
            TerminalInstance(
                _string(inst["id"], f"{where}.id"),
                _string(inst["terminal"], f"{where}.terminal"),
                param,
            )
        )
    try:
        return DataSample(tuple(instances))
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def save_sample(x: DataSample, domain: DomainBinding, path: str | Path) -> None:
    Path(path).write_text(canonical_dumps(sample_to_json_dict(x, domain)))


def load_sample(path: str | Path, domain: DomainBinding) -> DataSample:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from None
    return sample_from_json_dict(raw, domain)


# -------------------------------------------------------------------- node maps


def save_node_map(node_map: NodeMap, path: str | Path) -> None:
    payload = {"format_version": FORMAT_VERSION, **node_map.to_json_dict()}
    Path(path).write_text(canonical_dumps(payload))


def load_node_map(path: str | Path) -> NodeMap:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from None
    top = _require_keys(
        raw,
        {"format_version", "original_start"},
        {"start_node", "alt_nodes", "bin_nodes", "unit_chains"},
        "node map",
    )
    if top["format_version"] != FORMAT_VERSION:
        raise FormatError(f"unsupported format_version {top['format_version']!r}")
    try:
        return NodeMap.from_json_dict(top)
    except (KeyError, TypeError) as exc:
        raise FormatError(f"node map: {exc}") from None


# ----------------------------------------------------------------------- trees


def tree_to_json_dict(tree: ParseTree, domain: DomainBinding) -> dict:
    def node(t: TreeNode) -> dict:
        out: dict[str, Any] = {"node": t.node, "param": domain.encode_param(t.param)}
        if t.instance is not None:
            out["instance"] = t.instance
        if t.children:
            out["children"] = [node(c) for c in t.children]
        return out

    return {"log_prob": tree.log_prob, "root": node(tree.root)}
