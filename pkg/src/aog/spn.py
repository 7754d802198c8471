"""Sum-product network frontend.

Accepts complete, decomposable SPNs over binary variables and compiles
them onto the null parameter domain: product nodes become And-nodes,
sum nodes become Or-nodes, indicator leaves become shared terminals
(one per variable and polarity).  Sum weights need not be normalized;
each Or-rule gets weight * child-mass / node-mass, so the compiled
grammar's distribution equals the network's distribution after dividing
by its partition constant, which is returned alongside.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Union

from .domains import FunctionRef, RelationRef, null_domain
from .errors import FormatError, InvalidSpn
from .grammar import (
    AndRule,
    DataSample,
    Grammar,
    OrRule,
    TerminalInstance,
    ValidationReport,
)


@dataclass(frozen=True)
class SumNode:
    children: tuple[str, ...]
    weights: tuple[float, ...]


@dataclass(frozen=True)
class ProductNode:
    children: tuple[str, ...]


@dataclass(frozen=True)
class IndicatorNode:
    var: int
    positive: bool


SpnNode = Union[SumNode, ProductNode, IndicatorNode]


@dataclass
class Spn:
    nodes: dict[str, SpnNode]
    root: str

    @cached_property
    def variables(self) -> tuple[int, ...]:
        return tuple(
            sorted({n.var for n in self.nodes.values() if isinstance(n, IndicatorNode)})
        )


def parse_spn_listing(text: str) -> Spn:
    """Parse lines `id ind var +|-`, `id sum child w ...`, `id prod child ...`.

    The root is the unique node no other node references.
    """
    nodes: dict[str, SpnNode] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) < 3:
            raise FormatError(f"line {lineno}: too few fields")
        name, kind, rest = parts[0], parts[1], parts[2:]
        if name in nodes:
            raise FormatError(f"line {lineno}: duplicate node {name!r}")
        if kind == "ind":
            if len(rest) != 2 or rest[1] not in ("+", "-"):
                raise FormatError(f"line {lineno}: expected `ind var +|-`")
            try:
                var = int(rest[0])
            except ValueError:
                raise FormatError(f"line {lineno}: bad variable {rest[0]!r}") from None
            nodes[name] = IndicatorNode(var, rest[1] == "+")
        elif kind == "sum":
            if len(rest) % 2 != 0:
                raise FormatError(f"line {lineno}: sum needs child/weight pairs")
            children = tuple(rest[0::2])
            try:
                weights = tuple(float(w) for w in rest[1::2])
            except ValueError:
                raise FormatError(f"line {lineno}: bad weight") from None
            nodes[name] = SumNode(children, weights)
        elif kind == "prod":
            nodes[name] = ProductNode(tuple(rest))
        else:
            raise FormatError(f"line {lineno}: unknown node kind {kind!r}")
    if not nodes:
        raise FormatError("no nodes found")
    referenced = {
        child
        for node in nodes.values()
        if isinstance(node, (SumNode, ProductNode))
        for child in node.children
    }
    roots = [name for name in nodes if name not in referenced]
    if len(roots) != 1:
        raise FormatError(f"expected exactly one root, found {sorted(roots)}")
    return Spn(nodes, roots[0])


def format_spn_listing(s: Spn) -> str:
    lines = []
    for name, node in s.nodes.items():
        if isinstance(node, IndicatorNode):
            lines.append(f"{name} ind {node.var} {'+' if node.positive else '-'}")
        elif isinstance(node, SumNode):
            pairs = " ".join(f"{c} {w!r}" for c, w in zip(node.children, node.weights))
            lines.append(f"{name} sum {pairs}")
        else:
            lines.append(f"{name} prod {' '.join(node.children)}")
    return "\n".join(lines) + "\n"


def spn_scopes(s: Spn) -> dict[str, frozenset[int]]:
    """Variable scope of every node; raises InvalidSpn on cycles or misses."""
    scopes: dict[str, frozenset[int]] = {}
    visiting: set[str] = set()

    def scope(name: str) -> frozenset[int]:
        if name in scopes:
            return scopes[name]
        if name in visiting:
            raise InvalidSpn(f"cycle through node {name!r}")
        node = s.nodes.get(name)
        if node is None:
            raise InvalidSpn(f"undefined node {name!r}")
        visiting.add(name)
        if isinstance(node, IndicatorNode):
            result = frozenset((node.var,))
        else:
            parts = [scope(child) for child in node.children]
            result = frozenset().union(*parts) if parts else frozenset()
        visiting.discard(name)
        scopes[name] = result
        return result

    scope(s.root)
    for name in s.nodes:
        scope(name)
    return scopes


def validate_spn(s: Spn) -> ValidationReport:
    """Check structure, completeness of sums, decomposability of products."""
    report = ValidationReport()
    try:
        scopes = spn_scopes(s)
    except InvalidSpn as exc:
        report.add("structure", str(exc))
        return report
    for name, node in s.nodes.items():
        if isinstance(node, IndicatorNode):
            continue
        if not node.children:
            report.add("children", f"node {name!r} has no children")
            continue
        if isinstance(node, SumNode):
            if len(node.children) != len(node.weights):
                report.add("weights", f"sum {name!r} weight count mismatch")
                continue
            if any(not (w > 0.0) for w in node.weights):
                report.add("weights", f"sum {name!r} has a non-positive weight")
            first = scopes[node.children[0]]
            for child in node.children[1:]:
                if scopes[child] != first:
                    report.add("complete", f"sum {name!r} children differ in scope")
                    break
        else:
            seen: set[int] = set()
            for child in node.children:
                if scopes[child] & seen:
                    report.add("decomposable", f"product {name!r} children share scope")
                    break
                seen |= scopes[child]
    return report


def evaluate(s: Spn, assignment: Mapping[int, int]) -> float:
    """Value of the network on a complete assignment (linear scale)."""
    memo: dict[str, float] = {}

    def value(name: str) -> float:
        if name in memo:
            return memo[name]
        node = s.nodes[name]
        if isinstance(node, IndicatorNode):
            bit = assignment.get(node.var)
            if bit is None:
                raise ValueError(f"assignment misses variable {node.var}")
            out = 1.0 if bool(bit) == node.positive else 0.0
        elif isinstance(node, SumNode):
            out = sum(w * value(c) for c, w in zip(node.children, node.weights))
        else:
            out = 1.0
            for child in node.children:
                out *= value(child)
        memo[name] = out
        return out

    return value(s.root)


def partition(s: Spn) -> float:
    """Network mass: every indicator clamped to 1."""
    memo: dict[str, float] = {}

    def value(name: str) -> float:
        if name in memo:
            return memo[name]
        node = s.nodes[name]
        if isinstance(node, IndicatorNode):
            out = 1.0
        elif isinstance(node, SumNode):
            out = sum(w * value(c) for c, w in zip(node.children, node.weights))
        else:
            out = 1.0
            for child in node.children:
                out *= value(child)
        memo[name] = out
        return out

    return value(s.root)


@dataclass
class SpnAog:
    grammar: Grammar
    partition: float
    # (variable, bit) -> terminal name
    literals: dict[tuple[int, int], str] = field(default_factory=dict)


def spn_to_aog(s: Spn) -> SpnAog:
    """Compile a complete, decomposable SPN to a grammar on the null domain."""
    report = validate_spn(s)
    if not report.ok:
        raise InvalidSpn(str(report))
    scopes = spn_scopes(s)
    if not scopes[s.root]:
        raise InvalidSpn("root scope is empty")

    masses: dict[str, float] = {}

    def mass(name: str) -> float:
        if name in masses:
            return masses[name]
        node = s.nodes[name]
        if isinstance(node, IndicatorNode):
            out = 1.0
        elif isinstance(node, SumNode):
            out = sum(w * mass(c) for c, w in zip(node.children, node.weights))
        else:
            out = 1.0
            for child in node.children:
                out *= mass(child)
        masses[name] = out
        return out

    mass(s.root)

    taken = set(s.nodes)
    literals: dict[tuple[int, int], str] = {}
    for var in sorted(scopes[s.root]):
        for bit, tag in ((1, f"x{var}"), (0, f"x{var}_neg")):
            name = tag
            bump = 2
            while name in taken:
                name = f"{tag}{bump}"
                bump += 1
            taken.add(name)
            literals[(var, bit)] = name

    # node -> grammar node it compiles to, contracting single-child products
    mapped: dict[str, str] = {}

    def target(name: str) -> str:
        if name in mapped:
            return mapped[name]
        node = s.nodes[name]
        if isinstance(node, IndicatorNode):
            out = literals[(node.var, 1 if node.positive else 0)]
        elif isinstance(node, ProductNode) and len(node.children) == 1:
            out = target(node.children[0])
        else:
            out = name
        mapped[name] = out
        return out

    and_nodes: set[str] = set()
    or_nodes: set[str] = set()
    and_rules: list[AndRule] = []
    or_rules: list[OrRule] = []
    terminals = frozenset(literals.values())

    for name, node in s.nodes.items():
        if target(name) != name:
            continue
        if isinstance(node, SumNode):
            or_nodes.add(name)
            merged: dict[str, float] = {}
            for child, weight in zip(node.children, node.weights):
                prob = weight * mass(child) / mass(name)
                child_node = target(child)
                merged[child_node] = merged.get(child_node, 0.0) + prob
            for child_node, prob in merged.items():
                or_rules.append(OrRule(name, child_node, prob))
        elif isinstance(node, ProductNode):
            and_nodes.add(name)
            and_rules.append(
                AndRule(
                    name,
                    tuple(target(c) for c in node.children),
                    RelationRef("true"),
                    FunctionRef("null"),
                )
            )

    start = target(s.root)
    if start in terminals:
        wrapper = "S"
        bump = 2
        while wrapper in taken or wrapper in terminals:
            wrapper = f"S{bump}"
            bump += 1
        or_nodes.add(wrapper)
        or_rules.append(OrRule(wrapper, start, 1.0))
        start = wrapper

    grammar = Grammar(
        domain=null_domain(),
        terminals=terminals,
        and_nodes=frozenset(and_nodes),
        or_nodes=frozenset(or_nodes),
        start=start,
        and_rules=tuple(and_rules),
        or_rules=tuple(or_rules),
    )
    return SpnAog(grammar, masses[s.root], literals)


def assignment_sample(conv: SpnAog, assignment: Mapping[int, int]) -> DataSample:
    """One terminal instance per variable, per the assignment's polarity."""
    instances = []
    for var, bit in sorted(assignment.items()):
        terminal = conv.literals.get((var, 1 if bit else 0))
        if terminal is None:
            raise ValueError(f"variable {var} is not part of the compiled network")
        instances.append(TerminalInstance(f"v{var}", terminal, None))
    return DataSample(tuple(instances))
