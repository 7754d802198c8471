"""Core And-Or grammar representation.

A grammar is a set of terminal and nonterminal nodes over a parameter
domain.  Every And-node has exactly one And-rule naming an ordered child
list, a relation constraining the children's parameters, and a function
computing the parent parameter from them.  Or-nodes carry probability-
weighted unary rules whose probabilities sum to one.  Data samples are
sets of parameterized terminal instances; parse trees tie instances back
to a derivation.
"""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Iterator

from .domains import DomainBinding, FunctionRef, RelationRef
from .errors import AogError, DepthExceeded, DomainError, InvalidTree

PROB_TOL = 1e-9


class NodeKind(enum.Enum):
    TERMINAL = "terminal"
    AND = "and"
    OR = "or"


@dataclass(frozen=True)
class AndRule:
    """head -> ordered children, constrained by relation, parameterized by function."""

    head: str
    children: tuple[str, ...]
    relation: RelationRef
    function: FunctionRef


@dataclass(frozen=True)
class OrRule:
    """head -> child with selection probability (linear, not log)."""

    head: str
    child: str
    prob: float


@dataclass(frozen=True)
class Grammar:
    domain: DomainBinding
    terminals: frozenset[str]
    and_nodes: frozenset[str]
    or_nodes: frozenset[str]
    start: str
    and_rules: tuple[AndRule, ...]
    or_rules: tuple[OrRule, ...]

    @cached_property
    def nonterminals(self) -> frozenset[str]:
        return self.and_nodes | self.or_nodes

    def kind(self, node: str) -> NodeKind:
        if node in self.terminals:
            return NodeKind.TERMINAL
        if node in self.and_nodes:
            return NodeKind.AND
        if node in self.or_nodes:
            return NodeKind.OR
        raise KeyError(node)

    @cached_property
    def and_rule_of(self) -> dict[str, AndRule]:
        out: dict[str, AndRule] = {}
        for rule in self.and_rules:
            out.setdefault(rule.head, rule)
        return out

    @cached_property
    def or_rules_of(self) -> dict[str, tuple[tuple[int, OrRule], ...]]:
        """Or-rules grouped by head, each with its index in authoring order."""
        grouped: dict[str, list[tuple[int, OrRule]]] = {}
        for idx, rule in enumerate(self.or_rules):
            grouped.setdefault(rule.head, []).append((idx, rule))
        return {head: tuple(rules) for head, rules in grouped.items()}


@dataclass(frozen=True)
class TerminalInstance:
    """One parameterized occurrence of a terminal in a data sample."""

    instance_id: str
    terminal: str
    param: Any


@dataclass(frozen=True)
class DataSample:
    """A set of terminal instances; instance ids must be unique."""

    instances: tuple[TerminalInstance, ...]

    def __post_init__(self) -> None:
        ids = [inst.instance_id for inst in self.instances]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate instance ids in sample")

    def __len__(self) -> int:
        return len(self.instances)

    @cached_property
    def by_id(self) -> dict[str, TerminalInstance]:
        return {inst.instance_id: inst for inst in self.instances}

    @cached_property
    def ids(self) -> frozenset[str]:
        return frozenset(inst.instance_id for inst in self.instances)


@dataclass
class TreeNode:
    node: str
    param: Any
    children: tuple["TreeNode", ...] = ()
    instance: str | None = None  # set on terminal leaves only

    def walk(self) -> Iterator["TreeNode"]:
        yield self
        for child in self.children:
            yield from child.walk()


@dataclass
class ParseTree:
    root: TreeNode
    log_prob: float

    def leaves(self) -> list[TreeNode]:
        return [n for n in self.root.walk() if not n.children]


@dataclass(frozen=True)
class Issue:
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


@dataclass
class ValidationReport:
    issues: list[Issue] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.issues

    def add(self, code: str, message: str) -> None:
        self.issues.append(Issue(code, message))

    def __str__(self) -> str:
        if self.ok:
            return "ok"
        return "\n".join(str(issue) for issue in self.issues)


def validate_grammar(g: Grammar) -> ValidationReport:
    """Structural validation; every defect is reported, nothing raises."""
    report = ValidationReport()
    names = [g.terminals, g.and_nodes, g.or_nodes]
    for i, left in enumerate(names):
        for right in names[i + 1 :]:
            for node in sorted(left & right):
                report.add("node-overlap", f"node {node!r} declared with two kinds")
    known = g.terminals | g.and_nodes | g.or_nodes
    if g.start not in known:
        report.add("start-missing", f"start node {g.start!r} is not declared")
    elif g.start in g.terminals:
        report.add("start-terminal", f"start node {g.start!r} is a terminal")

    seen_and_heads: set[str] = set()
    for rule in g.and_rules:
        if rule.head not in g.and_nodes:
            report.add("and-head", f"And-rule head {rule.head!r} is not an And-node")
        if rule.head in seen_and_heads:
            report.add("and-multiple", f"And-node {rule.head!r} has more than one rule")
        seen_and_heads.add(rule.head)
        if len(rule.children) < 2:
            report.add("and-arity", f"And-rule for {rule.head!r} needs at least 2 children")
        for child in rule.children:
            if child not in known:
                report.add("and-child", f"And-rule for {rule.head!r} uses unknown node {child!r}")
        try:
            g.domain.relation(rule.relation, len(rule.children))
            g.domain.function(rule.function, len(rule.children))
        except AogError as exc:
            report.add("and-binding", f"And-rule for {rule.head!r}: {exc}")
    for node in sorted(g.and_nodes - seen_and_heads):
        report.add("and-missing", f"And-node {node!r} has no rule")

    totals: dict[str, float] = {}
    seen_edges: set[tuple[str, str]] = set()
    for rule in g.or_rules:
        if rule.head not in g.or_nodes:
            report.add("or-head", f"Or-rule head {rule.head!r} is not an Or-node")
        if rule.child not in known:
            report.add("or-child", f"Or-rule for {rule.head!r} uses unknown node {rule.child!r}")
        if not (rule.prob > 0.0) or rule.prob > 1.0 + PROB_TOL:
            report.add("or-prob", f"Or-rule {rule.head!r} -> {rule.child!r} has prob {rule.prob}")
        if (rule.head, rule.child) in seen_edges:
            report.add(
                "or-duplicate", f"duplicate Or-rule {rule.head!r} -> {rule.child!r}"
            )
        seen_edges.add((rule.head, rule.child))
        totals[rule.head] = totals.get(rule.head, 0.0) + rule.prob
    for node in sorted(g.or_nodes):
        total = totals.get(node)
        if total is None:
            report.add("or-missing", f"Or-node {node!r} has no rules")
        elif abs(total - 1.0) > PROB_TOL:
            report.add("or-sum", f"Or-node {node!r} rules sum to {total!r}, not 1")
    return report


# --------------------------------------------------------------------- sampling


def sample(
    g: Grammar,
    seed: int,
    max_depth: int = 64,
    root_param: Any | None = None,
) -> tuple[ParseTree, DataSample]:
    """Draw one derivation from the grammar's distribution.

    The derivation structure is chosen first (Or-rules by cumulative
    probability in authoring order), then parameters are filled in according
    to the domain's strategy.  Raises DepthExceeded when expansion passes
    max_depth and DomainError when the domain cannot realize a parameter
    assignment for the sampled structure.
    """
    rng = random.Random(seed)
    log_prob = 0.0

    def expand(node: str, depth: int) -> TreeNode:
        nonlocal log_prob
        if depth > max_depth:
            raise DepthExceeded(f"sampling exceeded depth {max_depth} at node {node!r}")
        kind = g.kind(node)
        if kind is NodeKind.TERMINAL:
            return TreeNode(node, None)
        if kind is NodeKind.AND:
            rule = g.and_rule_of[node]
            children = tuple(expand(child, depth + 1) for child in rule.children)
            return TreeNode(node, None, children)
        rules = g.or_rules_of.get(node, ())
        if not rules:
            raise ValueError(f"Or-node {node!r} has no rules")
        pick = rng.random()
        acc = 0.0
        chosen = rules[-1][1]
        for _, rule in rules:
            acc += rule.prob
            if pick < acc:
                chosen = rule
                break
        log_prob += math.log(chosen.prob)
        return TreeNode(node, None, (expand(chosen.child, depth + 1),))

    root = expand(g.start, 0)

    if g.domain.strategy == "leaf_order":
        if g.domain.leaf_param is None:
            raise DomainError(f"domain {g.domain.name!r} has no leaf parameterization")
        counter = 0

        def fill_up(tree: TreeNode) -> Any:
            nonlocal counter
            kind = g.kind(tree.node)
            if kind is NodeKind.TERMINAL:
                tree.param = g.domain.leaf_param(counter)
                counter += 1
            elif kind is NodeKind.OR:
                tree.param = fill_up(tree.children[0])
            else:
                params = tuple(fill_up(child) for child in tree.children)
                rule = g.and_rule_of[tree.node]
                if not g.domain.relation(rule.relation, len(params))(*params):
                    raise DomainError(
                        f"sampled children of {tree.node!r} violate {rule.relation.key!r}"
                    )
                tree.param = g.domain.function(rule.function, len(params))(*params)
            return tree.param

        fill_up(root)
    else:
        if root_param is None:
            if g.domain.root_default is None:
                raise DomainError(f"domain {g.domain.name!r} has no default root parameter")
            root_param = g.domain.root_default()

        def fill_down(tree: TreeNode, param: Any) -> None:
            tree.param = param
            kind = g.kind(tree.node)
            if kind is NodeKind.OR:
                fill_down(tree.children[0], param)
            elif kind is NodeKind.AND:
                rule = g.and_rule_of[tree.node]
                assert g.domain.realize_children is not None
                child_params = g.domain.realize_children(
                    rule.relation, rule.function, param, len(rule.children)
                )
                for child, child_param in zip(tree.children, child_params):
                    fill_down(child, child_param)

        fill_down(root, root_param)

    instances = []
    for leaf in (n for n in root.walk() if g.kind(n.node) is NodeKind.TERMINAL):
        leaf.instance = f"t{len(instances)}"
        instances.append(TerminalInstance(leaf.instance, leaf.node, leaf.param))
    return ParseTree(root, log_prob), DataSample(tuple(instances))


# ----------------------------------------------------------- tree verification


def tree_probability(g: Grammar, tree: ParseTree) -> float:
    """Log probability of a parse tree, verifying it against the grammar.

    Checks node kinds, rule membership, relation satisfaction, function
    consistency of parameters, and leaf instance uniqueness.  Raises
    InvalidTree on any mismatch.
    """
    if tree.root.node != g.start:
        raise InvalidTree(f"root is {tree.root.node!r}, expected start {g.start!r}")
    seen_instances: set[str] = set()
    or_rule_prob: dict[tuple[str, str], float] = {}
    for rule in g.or_rules:
        key = (rule.head, rule.child)
        # on (invalid) duplicate edges keep the most probable reading
        if key not in or_rule_prob or rule.prob > or_rule_prob[key]:
            or_rule_prob[key] = rule.prob

    def check(node: TreeNode) -> float:
        try:
            kind = g.kind(node.node)
        except KeyError:
            raise InvalidTree(f"unknown node {node.node!r}") from None
        if kind is NodeKind.TERMINAL:
            if node.children:
                raise InvalidTree(f"terminal {node.node!r} has children")
            if node.instance is None or node.instance in seen_instances:
                raise InvalidTree(f"terminal {node.node!r} lacks a fresh instance id")
            seen_instances.add(node.instance)
            return 0.0
        if kind is NodeKind.AND:
            rule = g.and_rule_of.get(node.node)
            if rule is None or tuple(c.node for c in node.children) != rule.children:
                raise InvalidTree(f"And-node {node.node!r} children do not match its rule")
            total = sum(check(child) for child in node.children)
            params = tuple(child.param for child in node.children)
            if not g.domain.relation(rule.relation, len(params))(*params):
                raise InvalidTree(f"children of {node.node!r} violate {rule.relation.key!r}")
            expected = g.domain.function(rule.function, len(params))(*params)
            if node.param != expected:
                raise InvalidTree(
                    f"{node.node!r} parameter {node.param!r} differs from computed {expected!r}"
                )
            return total
        if len(node.children) != 1:
            raise InvalidTree(f"Or-node {node.node!r} must have exactly one child")
        child = node.children[0]
        prob = or_rule_prob.get((node.node, child.node))
        if prob is None:
            raise InvalidTree(f"no Or-rule {node.node!r} -> {child.node!r}")
        if child.param != node.param:
            raise InvalidTree(f"Or-node {node.node!r} parameter differs from its child")
        return math.log(prob) + check(child)

    return check(tree.root)


def tree_sample(g: Grammar, tree: ParseTree) -> DataSample:
    """Collect the terminal instances at a tree's leaves."""
    instances = []
    for node in tree.root.walk():
        if node.node in g.terminals:
            if node.instance is None:
                raise InvalidTree(f"terminal {node.node!r} has no instance id")
            instances.append(TerminalInstance(node.instance, node.node, node.param))
    return DataSample(tuple(instances))
