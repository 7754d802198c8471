"""3SAT frontend.

A formula becomes a grammar over the null domain whose language, on the
sample carrying one marker instance per clause, is non-empty exactly
when the formula is satisfiable: each variable is an Or-node choosing a
polarity, each chosen literal is an And-node over the clauses it
appears in, and each clause gate chooses between emitting the clause
marker and staying silent.

The silent option is an empty derivation, which the grammar model
itself cannot express, so construction happens on an internal
representation that allows empty children and is then conditioned on
producing at least one marker: every node's rules are reweighted by its
children's non-empty mass, and binary And-nodes with nullable children
become choices between both-children, left-only and right-only
variants.  The rewrite preserves the set of non-empty derivations, so
parse existence is untouched; derivation scores are those of the
conditioned grammar.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .domains import FunctionRef, RelationRef, null_domain
from .errors import FormatError, UnsupportedGrammar
from .grammar import (
    AndRule,
    DataSample,
    Grammar,
    OrRule,
    TerminalInstance,
)

_EPS = "#eps"


@dataclass
class Cnf3Sat:
    """CNF with at most 3 distinct literals per clause; variables are 1..n_vars."""

    n_vars: int
    clauses: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if self.n_vars < 1:
            raise ValueError("need at least one variable")
        normalized = []
        for idx, clause in enumerate(self.clauses, 1):
            for lit in clause:
                if not isinstance(lit, int) or lit == 0 or abs(lit) > self.n_vars:
                    raise ValueError(f"clause {idx}: bad literal {lit!r}")
            distinct = tuple(sorted(set(clause), key=lambda l: (abs(l), l < 0)))
            if len(distinct) > 3:
                raise ValueError(f"clause {idx} has {len(distinct)} distinct literals")
            normalized.append(distinct)
        self.clauses = tuple(normalized)


def parse_dimacs(text: str) -> Cnf3Sat:
    """Read DIMACS CNF; clauses may span lines and end at 0."""
    n_vars = None
    declared = None
    tokens: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf" or n_vars is not None:
                raise FormatError(f"line {lineno}: bad problem line")
            try:
                n_vars, declared = int(parts[2]), int(parts[3])
            except ValueError:
                raise FormatError(f"line {lineno}: bad problem line") from None
            continue
        if n_vars is None:
            raise FormatError(f"line {lineno}: clause before problem line")
        try:
            tokens.extend(int(tok) for tok in line.split())
        except ValueError:
            raise FormatError(f"line {lineno}: non-integer token") from None
    if n_vars is None:
        raise FormatError("missing problem line")
    clauses: list[tuple[int, ...]] = []
    current: list[int] = []
    for tok in tokens:
        if tok == 0:
            clauses.append(tuple(current))
            current = []
        else:
            current.append(tok)
    if current:
        raise FormatError("last clause is not terminated by 0")
    if len(clauses) != declared:
        raise FormatError(f"declared {declared} clauses, found {len(clauses)}")
    try:
        return Cnf3Sat(n_vars, tuple(clauses))
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def format_dimacs(f: Cnf3Sat) -> str:
    lines = [f"p cnf {f.n_vars} {len(f.clauses)}"]
    for clause in f.clauses:
        lines.append(" ".join(str(lit) for lit in clause) + " 0")
    return "\n".join(lines) + "\n"


def assignment_satisfies(f: Cnf3Sat, assignment: dict[int, bool]) -> bool:
    return all(
        any(assignment[abs(lit)] == (lit > 0) for lit in clause) for clause in f.clauses
    )


def brute_force_satisfiable(f: Cnf3Sat) -> bool:
    """Truth-table check; the reference the conversion is tested against."""
    variables = list(range(1, f.n_vars + 1))
    for bits in itertools.product((False, True), repeat=f.n_vars):
        if assignment_satisfies(f, dict(zip(variables, bits))):
            return True
    return False


def sat_to_aog(f: Cnf3Sat) -> tuple[Grammar, DataSample]:
    """Compile a formula; the returned sample has one instance per clause.

    The sample parses under the grammar iff the formula is satisfiable.
    """
    if not f.clauses:
        raise ValueError("formula has no clauses")
    k = len(f.clauses)

    kinds: dict[str, str] = {}
    and_children: dict[str, list[str]] = {}
    or_edges: dict[str, list[tuple[str, float]]] = {}

    for j in range(1, k + 1):
        kinds[f"c{j}"] = "terminal"
    for j in range(1, k + 1):
        gate = f"b{j}"
        kinds[gate] = "or"
        or_edges[gate] = [(f"c{j}", 0.5), (_EPS, 0.5)]
    occurs: dict[int, list[int]] = {}
    for j, clause in enumerate(f.clauses, 1):
        for lit in clause:
            occurs.setdefault(lit, []).append(j)
    for i in range(1, f.n_vars + 1):
        for suffix, lit in (("+", i), ("-", -i)):
            node = f"v{i}{suffix}"
            kinds[node] = "and"
            and_children[node] = [f"b{j}" for j in occurs.get(lit, [])]
        kinds[f"v{i}"] = "or"
        or_edges[f"v{i}"] = [(f"v{i}+", 0.5), (f"v{i}-", 0.5)]
    kinds["S"] = "and"
    and_children["S"] = [f"v{i}" for i in range(1, f.n_vars + 1)]

    # binarize before eliminating silence, to keep the rewrite polynomial
    for head, children in list(and_children.items()):
        if len(children) <= 2:
            continue
        prev = children[0]
        for m, child in enumerate(children[1:-1], 1):
            node = f"{head}#b{m}"
            kinds[node] = "and"
            and_children[node] = [prev, child]
            prev = node
        and_children[head] = [prev, children[-1]]

    eps_mass: dict[str, float] = {_EPS: 1.0}

    def p_eps(node: str) -> float:
        cached = eps_mass.get(node)
        if cached is not None:
            return cached
        kind = kinds[node]
        if kind == "terminal":
            out = 0.0
        elif kind == "and":
            out = 1.0
            for child in and_children[node]:
                out *= p_eps(child)
        else:
            out = sum(p * p_eps(child) for child, p in or_edges[node])
        eps_mass[node] = out
        return out

    def live(node: str) -> bool:
        return node != _EPS and p_eps(node) < 1.0

    if not live("S"):
        raise UnsupportedGrammar("no clause marker can ever be produced")

    true_rel = RelationRef("true")
    null_fn = FunctionRef("null")
    terminals = frozenset(f"c{j}" for j in range(1, k + 1))
    and_nodes: set[str] = set()
    or_nodes: set[str] = set()
    and_rules: list[AndRule] = []
    or_rules: list[OrRule] = []

    for node, kind in kinds.items():
        if kind == "terminal" or not live(node):
            continue
        if kind == "or":
            or_nodes.add(node)
            for child, p in or_edges[node]:
                if child == _EPS or not live(child):
                    continue
                or_rules.append(OrRule(node, child, p * (1 - p_eps(child)) / (1 - p_eps(node))))
            continue
        children = and_children[node]
        if len(children) == 1:
            or_nodes.add(node)
            or_rules.append(OrRule(node, children[0], 1.0))
            continue
        left, right = children
        eps_left, eps_right = p_eps(left), p_eps(right)
        if eps_left == 0.0 and eps_right == 0.0:
            and_nodes.add(node)
            and_rules.append(AndRule(node, (left, right), true_rel, null_fn))
            continue
        # one side may stay silent: condition on at least one speaking
        or_nodes.add(node)
        denom = 1.0 - eps_left * eps_right
        both = (1.0 - eps_left) * (1.0 - eps_right) / denom
        left_only = (1.0 - eps_left) * eps_right / denom
        right_only = eps_left * (1.0 - eps_right) / denom
        if both > 0.0:
            pair = f"{node}#pair"
            and_nodes.add(pair)
            and_rules.append(AndRule(pair, (left, right), true_rel, null_fn))
            or_rules.append(OrRule(node, pair, both))
        if left_only > 0.0:
            or_rules.append(OrRule(node, left, left_only))
        if right_only > 0.0:
            or_rules.append(OrRule(node, right, right_only))

    grammar = Grammar(
        domain=null_domain(),
        terminals=terminals,
        and_nodes=frozenset(and_nodes),
        or_nodes=frozenset(or_nodes),
        start="S",
        and_rules=tuple(and_rules),
        or_rules=tuple(or_rules),
    )
    sample = DataSample(
        tuple(TerminalInstance(f"i{j}", f"c{j}", None) for j in range(1, k + 1))
    )
    return grammar, sample
