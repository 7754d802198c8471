"""Exact parsing.

build_table runs the bottom-up dynamic program over composition sizes:
a chart entry is keyed by (size, Or-node, parameter, terminal-instance
set), seeded from single instances and combined pairwise through the
And-rules of a normal-form grammar.  Viterbi mode keeps the best
derivation score per entry, marginal mode sums them.  enumerate_parses
is a deliberately naive top-down enumerator over general grammars that
serves as an independent reference.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Any, Iterator

from .domains import param_order_key
from .errors import BudgetExceeded, DepthExceeded, MissingEntry, NotInNormalForm
from .grammar import DataSample, Grammar, NodeKind, ParseTree, TreeNode
from .normalize import gcnf_violations

NEG_INF = float("-inf")


def log_add(a: float, b: float) -> float:
    if a == NEG_INF:
        return b
    if b == NEG_INF:
        return a
    if a < b:
        a, b = b, a
    return a + math.log1p(math.exp(b - a))


@dataclass(frozen=True, slots=True)
class CompositionKey:
    size: int
    or_node: str
    param: Any
    terminals: frozenset[str]


def _key_order(key: CompositionKey):
    return (key.size, key.or_node, param_order_key(key.param), sorted(key.terminals))


@dataclass(frozen=True, slots=True)
class Backpointer:
    """How an entry was last improved: an Or-rule over either a terminal
    instance (size 1) or an And-rule applied to two smaller entries.

    left and right are internal chart keys (size, or_node, param, bitmask
    of instance indices); resolve them through CompositionTable.public_key.
    """

    or_rule: int
    and_rule: int | None = None
    left: tuple | None = None
    right: tuple | None = None
    instance: str | None = None


@dataclass(slots=True)
class Entry:
    score: float
    back: Backpointer | None  # absent in marginal tables


@dataclass
class ParserBudget:
    max_entries: int = 10_000_000
    max_seconds: float | None = None


@dataclass
class CompositionStats:
    """Size of the chart, per composition size."""

    sample_size: int
    per_size_compositions: list[int]  # distinct terminal-instance sets, index = size
    per_size_entries: list[int]  # chart entries, index = size
    elapsed_seconds: float

    @property
    def table_entries(self) -> int:
        return sum(self.per_size_entries)

    @property
    def total_compositions(self) -> int:
        return sum(self.per_size_compositions)

    @property
    def c_max(self) -> int:
        return max(self.per_size_compositions, default=0)

    @property
    def worst_case_compositions(self) -> int:
        n = self.sample_size
        return math.comb(n, n // 2) if n else 0


@dataclass
class CompositionTable:
    grammar: Grammar
    sample: DataSample
    mode: str
    # strata[size][or_node] maps (param, instance bitmask) to entries; the
    # bit for instance i of the sample is 1 << i
    strata: list[dict[str, dict[tuple, Entry]]]
    stats: CompositionStats

    def _mask(self, terminals: frozenset[str]) -> int:
        mask = 0
        order = {inst.instance_id: i for i, inst in enumerate(self.sample.instances)}
        for instance_id in terminals:
            bit = order.get(instance_id)
            if bit is None:
                raise MissingEntry(f"instance {instance_id!r} is not in the sample")
            mask |= 1 << bit
        return mask

    def public_key(self, ikey: tuple) -> CompositionKey:
        """Expand an internal (size, or_node, param, mask) key."""
        size, or_node, param, mask = ikey
        ids = self.sample.ids
        names = frozenset(
            inst.instance_id
            for i, inst in enumerate(self.sample.instances)
            if mask & (1 << i)
        )
        assert names <= ids
        return CompositionKey(size, or_node, param, names)

    def lookup(self, key: CompositionKey) -> Entry:
        if not 0 <= key.size < len(self.strata):
            raise MissingEntry(f"no chart entry for {key}")
        ikey = (key.param, self._mask(key.terminals))
        entry = self.strata[key.size].get(key.or_node, {}).get(ikey)
        if entry is None:
            raise MissingEntry(f"no chart entry for {key}")
        return entry

    def entries(self) -> Iterator[tuple[CompositionKey, Entry]]:
        for size, stratum in enumerate(self.strata):
            for or_node, bucket in stratum.items():
                for (param, mask), entry in bucket.items():
                    yield self.public_key((size, or_node, param, mask)), entry

    def root_entries(self) -> list[tuple[CompositionKey, Entry]]:
        n = len(self.sample)
        out = []
        if n < len(self.strata):
            for (param, mask), entry in self.strata[n].get(self.grammar.start, {}).items():
                out.append((self.public_key((n, self.grammar.start, param, mask)), entry))
        return sorted(out, key=lambda kv: _key_order(kv[0]))


@dataclass
class ParseResult:
    mode: str
    score: float  # log probability; -inf when the sample has no parse
    tree: ParseTree | None
    stats: CompositionStats


def build_table(
    g: Grammar,
    x: DataSample,
    mode: str = "viterbi",
    budget: ParserBudget | None = None,
) -> CompositionTable:
    """Fill the composition chart bottom-up over sub-sample sizes."""
    if mode not in ("viterbi", "marginal"):
        raise ValueError(f"unknown parse mode {mode!r}")
    violations = gcnf_violations(g)
    if violations:
        raise NotInNormalForm("; ".join(violations))
    if len(x) == 0:
        raise ValueError("cannot parse an empty sample")
    for inst in x.instances:
        if inst.terminal not in g.terminals:
            raise ValueError(f"sample uses unknown terminal {inst.terminal!r}")
    budget = budget or ParserBudget()
    started = time.monotonic()

    # child node -> [(rule index, log prob, head)]
    or_by_child: dict[str, list[tuple[int, float, str]]] = {}
    for idx, rule in enumerate(g.or_rules):
        or_by_child.setdefault(rule.child, []).append((idx, math.log(rule.prob), rule.head))
    # (left child, right child) -> [(rule index, head, relation, function)]
    and_index: dict[tuple[str, str], list[tuple[int, str, Any, Any]]] = {}
    for idx, rule in enumerate(g.and_rules):
        entry = (
            idx,
            rule.head,
            g.domain.relation(rule.relation, 2),
            g.domain.function(rule.function, 2),
        )
        and_index.setdefault((rule.children[0], rule.children[1]), []).append(entry)

    n = len(x)
    strata: list[dict[str, dict[tuple, Entry]]] = [{} for _ in range(n + 1)]
    entry_count = 0
    max_entries = budget.max_entries
    viterbi = mode == "viterbi"

    def back_order(back: Backpointer):
        if back.instance is not None:
            return (0, back.or_rule, back.instance)
        ls, ln, lp, lm = back.left
        rs, rn, rp, rm = back.right
        return (
            1,
            back.and_rule,
            (ls, ln, param_order_key(lp), lm),
            (rs, rn, param_order_key(rp), rm),
            back.or_rule,
        )

    for index, inst in enumerate(x.instances):
        bit = 1 << index
        for or_idx, logp, head in or_by_child.get(inst.terminal, ()):
            bucket = strata[1].setdefault(head, {})
            ikey = (inst.param, bit)
            cur = bucket.get(ikey)
            if cur is None:
                entry_count += 1
                back = Backpointer(or_rule=or_idx, instance=inst.instance_id) if viterbi else None
                bucket[ikey] = Entry(logp, back)
            elif viterbi:
                back = Backpointer(or_rule=or_idx, instance=inst.instance_id)
                if logp > cur.score or (
                    logp == cur.score and back_order(back) < back_order(cur.back)
                ):
                    cur.score = logp
                    cur.back = back
            else:
                cur.score = log_add(cur.score, logp)
    if entry_count > max_entries:
        raise BudgetExceeded(f"chart exceeded {max_entries} entries")

    for i in range(2, n + 1):
        if budget.max_seconds is not None and time.monotonic() - started > budget.max_seconds:
            raise BudgetExceeded(f"parse exceeded {budget.max_seconds} seconds")
        stratum_i = strata[i]
        for j in range(1, i):
            left_nodes = strata[j]
            right_nodes = strata[i - j]
            if not left_nodes or not right_nodes:
                continue
            for (left_child, right_child), rules in and_index.items():
                lefts = left_nodes.get(left_child)
                rights = right_nodes.get(right_child)
                if not lefts or not rights:
                    continue
                for (lparam, lmask), lentry in lefts.items():
                    lscore = lentry.score
                    for (rparam, rmask), rentry in rights.items():
                        if lmask & rmask:
                            continue
                        pair_score = lscore + rentry.score
                        umask = lmask | rmask
                        for and_idx, head, rel, fn in rules:
                            if not rel(lparam, rparam):
                                continue
                            parent_param = fn(lparam, rparam)
                            for or_idx, logp, or_head in or_by_child.get(head, ()):
                                bucket = stratum_i.setdefault(or_head, {})
                                ikey = (parent_param, umask)
                                cur = bucket.get(ikey)
                                score = logp + pair_score
                                if cur is None:
                                    entry_count += 1
                                    if entry_count > max_entries:
                                        raise BudgetExceeded(
                                            f"chart exceeded {max_entries} entries"
                                        )
                                    back = (
                                        Backpointer(
                                            or_rule=or_idx,
                                            and_rule=and_idx,
                                            left=(j, left_child, lparam, lmask),
                                            right=(i - j, right_child, rparam, rmask),
                                        )
                                        if viterbi
                                        else None
                                    )
                                    bucket[ikey] = Entry(score, back)
                                elif viterbi:
                                    if score >= cur.score:
                                        back = Backpointer(
                                            or_rule=or_idx,
                                            and_rule=and_idx,
                                            left=(j, left_child, lparam, lmask),
                                            right=(i - j, right_child, rparam, rmask),
                                        )
                                        if score > cur.score or back_order(back) < back_order(
                                            cur.back
                                        ):
                                            cur.score = score
                                            cur.back = back
                                else:
                                    cur.score = log_add(cur.score, score)

    per_size_comps = []
    per_size_entries = []
    for stratum in strata:
        comps = set()
        count = 0
        for bucket in stratum.values():
            count += len(bucket)
            for _, mask in bucket:
                comps.add(mask)
        per_size_comps.append(len(comps))
        per_size_entries.append(count)
    stats = CompositionStats(
        sample_size=n,
        per_size_compositions=per_size_comps,
        per_size_entries=per_size_entries,
        elapsed_seconds=time.monotonic() - started,
    )
    return CompositionTable(g, x, mode, strata, stats)


def backtrack(table: CompositionTable, root: CompositionKey) -> ParseTree:
    """Reconstruct the derivation recorded at a chart entry (viterbi tables)."""
    if table.mode != "viterbi":
        raise ValueError("backtrack needs a viterbi table")
    g = table.grammar

    def build(ikey: tuple) -> TreeNode:
        size, or_node, param, mask = ikey
        entry = table.strata[size][or_node][(param, mask)]
        back = entry.back
        or_rule = g.or_rules[back.or_rule]
        if back.instance is not None:
            inst = table.sample.by_id[back.instance]
            leaf = TreeNode(inst.terminal, inst.param, instance=back.instance)
            return TreeNode(or_rule.head, param, (leaf,))
        and_rule = g.and_rules[back.and_rule]
        subtree = TreeNode(and_rule.head, param, (build(back.left), build(back.right)))
        return TreeNode(or_rule.head, param, (subtree,))

    root_entry = table.lookup(root)  # raises MissingEntry for unknown keys
    iroot = (root.size, root.or_node, root.param, table._mask(root.terminals))
    return ParseTree(build(iroot), root_entry.score)


def parse(
    g: Grammar,
    x: DataSample,
    mode: str = "viterbi",
    budget: ParserBudget | None = None,
) -> ParseResult:
    """Parse a sample: viterbi returns the best tree, marginal the total mass."""
    table = build_table(g, x, mode, budget)
    roots = table.root_entries()
    if not roots:
        return ParseResult(mode, NEG_INF, None, table.stats)
    if mode == "marginal":
        score = NEG_INF
        for _, entry in roots:
            score = log_add(score, entry.score)
        return ParseResult(mode, score, None, table.stats)
    best_key, best_entry = roots[0]
    for key, entry in roots[1:]:
        if entry.score > best_entry.score:
            best_key, best_entry = key, entry
    tree = backtrack(table, best_key)
    return ParseResult(mode, best_entry.score, tree, table.stats)


# -------------------------------------------------------------------- reference


def enumerate_parses(g: Grammar, x: DataSample) -> list[tuple[ParseTree, float]]:
    """Enumerate every parse tree of the sample by brute-force expansion.

    Works on any valid grammar, normal form or not.  Exponential in general;
    meant as an oracle for small inputs.  Recursion is bounded by threading
    the remaining instance budget through And splits, so recursive grammars
    terminate; a choice cycle that consumes nothing (an Or loop, infinitely
    many trees) raises DepthExceeded.
    """
    full = x.ids
    memo: dict[tuple[str, int], Any] = {}
    PENDING = object()

    def derive(node: str, budget: int) -> list[tuple[frozenset, Any, TreeNode, float]]:
        # all derivations rooted at node covering 1..budget disjoint instances
        if budget < 1:
            return []
        key = (node, budget)
        cached = memo.get(key)
        if cached is PENDING:
            raise DepthExceeded(f"choice cycle at {node!r} yields unboundedly many parses")
        if cached is not None:
            return cached
        memo[key] = PENDING
        kind = g.kind(node)
        if kind is NodeKind.TERMINAL:
            out = [
                (
                    frozenset((inst.instance_id,)),
                    inst.param,
                    TreeNode(node, inst.param, instance=inst.instance_id),
                    0.0,
                )
                for inst in x.instances
                if inst.terminal == node
            ]
        elif kind is NodeKind.OR:
            out = []
            for _, rule in g.or_rules_of.get(node, ()):
                logp = math.log(rule.prob)
                for ids, param, subtree, lp in derive(rule.child, budget):
                    out.append((ids, param, TreeNode(node, param, (subtree,)), lp + logp))
        else:
            rule = g.and_rule_of[node]
            n = len(rule.children)
            rel = g.domain.relation(rule.relation, n)
            fn = g.domain.function(rule.function, n)
            out = []
            if budget >= n:
                # each sibling keeps at least one instance for itself
                child_derivs = [derive(child, budget - n + 1) for child in rule.children]
                for combo in itertools.product(*child_derivs):
                    ids: frozenset = frozenset()
                    total = 0
                    for part_ids, _, _, _ in combo:
                        ids |= part_ids
                        total += len(part_ids)
                    if len(ids) != total or total > budget:
                        continue
                    params = tuple(part[1] for part in combo)
                    if not rel(*params):
                        continue
                    param = fn(*params)
                    lp = sum(part[3] for part in combo)
                    out.append(
                        (ids, param, TreeNode(node, param, tuple(p[2] for p in combo)), lp)
                    )
        memo[key] = out
        return out

    results = []
    for ids, _, tree, lp in derive(g.start, len(full)):
        if ids == full:
            results.append((ParseTree(tree, lp), lp))
    return results
