"""Chart parser against the brute-force enumeration reference."""

import math
import random

import pytest

from aog import (
    BudgetExceeded,
    CompositionKey,
    DataSample,
    MissingEntry,
    NotInNormalForm,
    ParserBudget,
    TerminalInstance,
    backtrack,
    build_table,
    enumerate_parses,
    parse,
    parse_scfg,
    project_parse,
    scfg_to_aog,
    string_sample,
    to_gcnf,
    tree_probability,
    tree_sample,
    validate_grammar,
)
from helpers import NEG_INF, logsumexp, random_aog

AMBIGUOUS = parse_scfg(
    """
    X -> X X [0.4]
    X -> a [0.6]
    """
)


def test_parse_requires_normal_form(line_drawing):
    x = DataSample((TerminalInstance("d0", "dot", (0, 0)),))
    with pytest.raises(NotInNormalForm):
        parse(line_drawing, x)


def test_parse_rejects_unknown_terminals(line_drawing):
    gcnf, _ = to_gcnf(line_drawing)
    with pytest.raises(ValueError):
        parse(gcnf, DataSample((TerminalInstance("z", "blot", (0, 0)),)))


def test_single_dot_parses(line_drawing):
    gcnf, _ = to_gcnf(line_drawing)
    result = parse(gcnf, DataSample((TerminalInstance("d0", "dot", (0, 0)),)))
    assert result.score == pytest.approx(math.log(0.2))
    assert result.tree is not None


def test_viterbi_and_marginal_on_ambiguous_string():
    # X -> X X | a over "aaa": two binary bracketings
    g = scfg_to_aog(AMBIGUOUS)
    gcnf, _ = to_gcnf(g)
    x = string_sample(["a", "a", "a"])
    per_tree = 0.4 * 0.4 * 0.6**3
    viterbi = parse(gcnf, x, "viterbi")
    marginal = parse(gcnf, x, "marginal")
    assert viterbi.score == pytest.approx(math.log(per_tree))
    assert marginal.score == pytest.approx(math.log(2 * per_tree))
    trees = enumerate_parses(g, x)
    assert len(trees) == 2
    assert logsumexp([lp for _, lp in trees]) == pytest.approx(marginal.score)


def test_no_parse_returns_neg_infinity(line_drawing):
    gcnf, _ = to_gcnf(line_drawing)
    # two dots that sit diagonally never form a figure
    x = DataSample(
        (
            TerminalInstance("d0", "dot", (0, 0)),
            TerminalInstance("d1", "dot", (1, 1)),
        )
    )
    for mode in ("viterbi", "marginal"):
        result = parse(gcnf, x, mode)
        assert result.score == NEG_INF
        assert result.tree is None
    assert enumerate_parses(line_drawing, x) == []


def test_viterbi_tree_is_valid_and_scores_itself(line_drawing):
    gcnf, node_map = to_gcnf(line_drawing)
    x = DataSample(
        (
            TerminalInstance("d0", "dot", (4, 2)),
            TerminalInstance("d1", "dot", (5, 2)),
            TerminalInstance("d2", "dot", (6, 2)),
        )
    )
    result = parse(gcnf, x, "viterbi")
    assert result.score == pytest.approx(math.log(0.5))
    projected = project_parse(result.tree, node_map, line_drawing)
    assert projected.log_prob == pytest.approx(result.score)
    assert tree_sample(line_drawing, projected).ids == x.ids


def test_permutation_of_instances_does_not_change_scores(line_drawing):
    gcnf, _ = to_gcnf(line_drawing)
    instances = (
        TerminalInstance("d0", "dot", (4, 2)),
        TerminalInstance("d1", "dot", (5, 2)),
        TerminalInstance("d2", "dot", (6, 2)),
    )
    straight = parse(gcnf, DataSample(instances), "marginal").score
    shuffled = parse(gcnf, DataSample(instances[::-1]), "marginal").score
    assert straight == pytest.approx(shuffled, abs=1e-12)


def test_budget_entries_enforced():
    g = scfg_to_aog(AMBIGUOUS)
    gcnf, _ = to_gcnf(g)
    x = string_sample(["a"] * 6)
    with pytest.raises(BudgetExceeded):
        parse(gcnf, x, budget=ParserBudget(max_entries=3))


def test_backtrack_requires_viterbi_table():
    g = scfg_to_aog(AMBIGUOUS)
    gcnf, _ = to_gcnf(g)
    x = string_sample(["a", "a"])
    table = build_table(gcnf, x, "marginal")
    with pytest.raises(ValueError):
        backtrack(table, table.root_entries()[0][0])
    table = build_table(gcnf, x, "viterbi")
    with pytest.raises(MissingEntry):
        backtrack(table, CompositionKey(1, "X", (9, 10), frozenset({"w9"})))


def test_stats_count_string_compositions():
    g = scfg_to_aog(AMBIGUOUS)
    gcnf, _ = to_gcnf(g)
    m = 5
    result = parse(gcnf, string_sample(["a"] * m), "viterbi")
    counts = result.stats.per_size_compositions
    # every span of every size is realized: exactly m - i + 1 substrings
    assert counts[0] == 0
    for i in range(1, m + 1):
        assert counts[i] == m - i + 1
    assert result.stats.c_max == m
    assert result.stats.worst_case_compositions == math.comb(m, m // 2)


def test_reruns_are_bit_identical(line_drawing):
    gcnf, _ = to_gcnf(line_drawing)
    x = DataSample(
        (
            TerminalInstance("d0", "dot", (0, 0)),
            TerminalInstance("d1", "dot", (0, 1)),
        )
    )
    scores = {parse(gcnf, x, "marginal").score for _ in range(3)}
    assert len(scores) == 1


def test_viterbi_ties_break_deterministically():
    # two equally probable derivations of the same sample
    g = scfg_to_aog(
        parse_scfg(
            """
            S -> A B [0.5]
            S -> B A [0.5]
            A -> a [1.0]
            B -> a [1.0]
            """
        )
    )
    gcnf, node_map = to_gcnf(g)
    x = string_sample(["a", "a"])
    first = parse(gcnf, x, "viterbi")
    for _ in range(3):
        again = parse(gcnf, x, "viterbi")
        t1 = project_parse(first.tree, node_map, g)
        t2 = project_parse(again.tree, node_map, g)
        assert t1.root.children[0].node == t2.root.children[0].node


@pytest.mark.parametrize("trial", range(60))
def test_random_grammars_match_enumeration(trial):
    rng = random.Random(1000 + trial)
    g = random_aog(rng)
    assert validate_grammar(g).ok
    gcnf, node_map = to_gcnf(g)
    from aog import sample as draw

    x = None
    for seed in range(12):
        tree, candidate = draw(g, seed=seed * 97 + trial)
        if 1 <= len(candidate) <= 6:
            x = candidate
            break
    if x is None:
        pytest.skip("grammar only produced large samples")
    trees = enumerate_parses(g, x)
    assert trees, "a drawn sample must parse under its own grammar"
    best = max(lp for _, lp in trees)
    total = logsumexp([lp for _, lp in trees])
    viterbi = parse(gcnf, x, "viterbi")
    marginal = parse(gcnf, x, "marginal")
    assert viterbi.score == pytest.approx(best, rel=1e-9, abs=1e-9)
    assert marginal.score == pytest.approx(total, rel=1e-9, abs=1e-9)
    projected = project_parse(viterbi.tree, node_map, g)
    assert projected.log_prob == pytest.approx(best, rel=1e-9, abs=1e-9)
    assert tree_sample(g, projected).ids == x.ids


@pytest.mark.parametrize("trial", range(30))
def test_unit_chain_grammars_preserve_marginal(trial):
    # parallel choice chains collapse into one normal-form rule: the marginal
    # is preserved exactly, viterbi scores the merged chain class, and the
    # projected tree is still a valid tree of the original grammar
    rng = random.Random(2000 + trial)
    g = random_aog(rng, allow_or_chains=True)
    gcnf, node_map = to_gcnf(g)
    from aog import sample as draw

    x = None
    for seed in range(12):
        _, candidate = draw(g, seed=seed * 53 + trial)
        if 1 <= len(candidate) <= 6:
            x = candidate
            break
    if x is None:
        pytest.skip("grammar only produced large samples")
    trees = enumerate_parses(g, x)
    assert trees
    best = max(lp for _, lp in trees)
    total = logsumexp([lp for _, lp in trees])
    viterbi = parse(gcnf, x, "viterbi")
    marginal = parse(gcnf, x, "marginal")
    assert marginal.score == pytest.approx(total, rel=1e-9, abs=1e-9)
    merged = any(len(chains) > 1 for chains in node_map.unit_chains.values())
    if merged:
        assert best - 1e-9 <= viterbi.score <= total + 1e-9
    else:
        assert viterbi.score == pytest.approx(best, rel=1e-9, abs=1e-9)
    projected = project_parse(viterbi.tree, node_map, g)
    assert projected.log_prob <= best + 1e-9
    assert tree_sample(g, projected).ids == x.ids


@pytest.mark.parametrize("trial", range(20))
def test_random_grammars_agree_on_mutated_samples(trial):
    # mutations may break parseability; engine and reference must agree either way
    rng = random.Random(5000 + trial)
    g = random_aog(rng)
    gcnf, _ = to_gcnf(g)
    from aog import sample as draw

    x = None
    for seed in range(12):
        _, candidate = draw(g, seed=seed * 31 + trial)
        if 1 <= len(candidate) <= 5:
            x = candidate
            break
    if x is None:
        pytest.skip("grammar only produced large samples")
    instances = list(x.instances)
    if len(instances) > 1 and rng.random() < 0.5:
        instances = instances[:-1]  # drop one instance
    else:
        extra = instances[0]
        instances.append(TerminalInstance("extra", extra.terminal, extra.param))
    mutated = DataSample(tuple(instances))
    trees = enumerate_parses(g, mutated)
    marginal = parse(gcnf, mutated, "marginal")
    if trees:
        assert marginal.score == pytest.approx(
            logsumexp([lp for _, lp in trees]), rel=1e-9, abs=1e-9
        )
    else:
        assert marginal.score == NEG_INF
