"""Command-line interface.

Subcommands: validate, sample, parse, normalize, convert (scfg/spn/sat
frontends), emit (fol/slp).  stdout carries machine-readable output
only (JSON, JSON lines, or emitted logic text); diagnostics go to
stderr via logging, with verbosity from the AOG_LOG environment
variable (error, warn, info, debug).

Exit codes: 0 success (for parse: a parse was found), 1 no parse or
sampling failure, 2 validation or conversion rejected the input, 3 a
file was malformed, 4 the parser budget was exhausted.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .errors import (
    AogError,
    BudgetExceeded,
    DepthExceeded,
    DomainError,
    FormatError,
    InvalidSpn,
    UnsupportedGrammar,
)
from .grammar import Grammar, ParseTree, TreeNode, sample as draw_sample, validate_grammar
from .logic_export import emit_fol, emit_slp
from .normalize import gcnf_violations, project_parse, to_gcnf
from .parsing import NEG_INF, ParserBudget, parse
from .sat import parse_dimacs, sat_to_aog
from .scfg import parse_scfg, scfg_to_aog, validate_scfg
from .serialize import (
    canonical_dumps,
    load_grammar,
    load_sample,
    sample_to_json_dict,
    save_grammar,
    save_node_map,
    save_sample,
    tree_to_json_dict,
)
from .spn import parse_spn_listing, spn_to_aog, validate_spn

log = logging.getLogger("aog")

_LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}


def _configure_logging() -> None:
    level = _LOG_LEVELS.get(os.environ.get("AOG_LOG", "warn").lower(), logging.WARNING)
    logging.basicConfig(
        stream=sys.stderr, level=level, format="%(levelname)s %(name)s: %(message)s"
    )


def _emit(payload: dict) -> None:
    sys.stdout.write(canonical_dumps(payload))


def _issues(report) -> list[dict]:
    return [{"code": i.code, "message": i.message} for i in report.issues]


def tree_to_dot(tree: ParseTree) -> str:
    lines = ["digraph parse {", "  node [shape=box];"]
    counter = 0

    def visit(node: TreeNode) -> str:
        nonlocal counter
        name = f"n{counter}"
        counter += 1
        label = node.node
        if node.param is not None:
            label += f"\\n{node.param}"
        if node.instance is not None:
            label += f"\\n@{node.instance}"
        lines.append(f'  {name} [label="{label}"];')
        for child in node.children:
            lines.append(f"  {name} -> {visit(child)};")
        return name

    visit(tree.root)
    lines.append("}")
    return "\n".join(lines) + "\n"


def _grammar_audit(g: Grammar) -> dict:
    return {
        "terminals": len(g.terminals),
        "and_nodes": len(g.and_nodes),
        "or_nodes": len(g.or_nodes),
        "and_rules": len(g.and_rules),
        "or_rules": len(g.or_rules),
        "domain": g.domain.name,
    }


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        g = load_grammar(args.grammar, renormalize=args.renormalize, check=False)
    except (FormatError, OSError) as exc:
        _emit({"valid": False, "error": str(exc)})
        return 3
    report = validate_grammar(g)
    _emit({"valid": report.ok, "issues": _issues(report)})
    return 0 if report.ok else 2


def cmd_parse(args: argparse.Namespace) -> int:
    try:
        g = load_grammar(args.grammar, renormalize=args.renormalize, check=False)
        x = load_sample(args.sample, g.domain)
    except (FormatError, OSError) as exc:
        _emit({"error": str(exc)})
        return 3
    report = validate_grammar(g)
    if not report.ok:
        _emit({"error": "invalid grammar", "issues": _issues(report)})
        return 2
    unknown = sorted({i.terminal for i in x.instances} - set(g.terminals))
    if unknown:
        _emit({"error": f"sample uses unknown terminals {unknown}"})
        return 2

    normalized = bool(gcnf_violations(g))
    node_map = None
    target = g
    if normalized:
        log.info("grammar is not in normal form; normalizing for parsing")
        target, node_map = to_gcnf(g)
    budget = ParserBudget(max_entries=args.budget_entries, max_seconds=args.budget_seconds)
    try:
        result = parse(target, x, mode=args.mode, budget=budget)
    except BudgetExceeded as exc:
        _emit({"error": str(exc)})
        return 4
    found = result.score != NEG_INF
    out = {
        "mode": result.mode,
        "found": found,
        "log_prob": result.score if found else None,
        "normalized": normalized,
    }
    if result.tree is not None:
        tree = result.tree
        if node_map is not None:
            tree = project_parse(tree, node_map, g)
        out["tree"] = tree_to_json_dict(tree, g.domain)
        if args.dot:
            Path(args.dot).write_text(tree_to_dot(tree))
    if args.stats:
        stats = result.stats
        out["stats"] = {
            "sample_size": stats.sample_size,
            "per_size_compositions": stats.per_size_compositions,
            "per_size_entries": stats.per_size_entries,
            "table_entries": stats.table_entries,
            "total_compositions": stats.total_compositions,
            "c_max": stats.c_max,
            "worst_case_compositions": stats.worst_case_compositions,
            "elapsed_seconds": stats.elapsed_seconds,
        }
    _emit(out)
    return 0 if found else 1


def cmd_sample(args: argparse.Namespace) -> int:
    try:
        g = load_grammar(args.grammar, renormalize=args.renormalize, check=False)
    except (FormatError, OSError) as exc:
        _emit({"error": str(exc)})
        return 3
    report = validate_grammar(g)
    if not report.ok:
        _emit({"error": "invalid grammar", "issues": _issues(report)})
        return 2
    for i in range(args.count):
        seed = args.seed + i
        try:
            tree, x = draw_sample(g, seed=seed, max_depth=args.max_depth)
        except (DepthExceeded, DomainError) as exc:
            _emit({"seed": seed, "error": str(exc)})
            return 1
        record = {
            "seed": seed,
            "log_prob": tree.log_prob,
            "sample": sample_to_json_dict(x, g.domain),
            "tree": tree_to_json_dict(tree, g.domain),
        }
        sys.stdout.write(json.dumps(record, sort_keys=True) + "\n")
    return 0


def cmd_normalize(args: argparse.Namespace) -> int:
    try:
        g = load_grammar(args.grammar, renormalize=args.renormalize, check=False)
    except (FormatError, OSError) as exc:
        _emit({"error": str(exc)})
        return 3
    report = validate_grammar(g)
    if not report.ok:
        _emit({"error": "invalid grammar", "issues": _issues(report)})
        return 2
    try:
        gcnf, node_map = to_gcnf(g)
    except AogError as exc:
        _emit({"error": str(exc)})
        return 2
    save_grammar(gcnf, args.output)
    if args.map:
        save_node_map(node_map, args.map)
    _emit({"input": _grammar_audit(g), "output": _grammar_audit(gcnf)})
    return 0


def cmd_convert(args: argparse.Namespace) -> int:
    try:
        text = Path(args.input).read_text()
    except OSError as exc:
        _emit({"error": str(exc)})
        return 3
    try:
        if args.kind == "scfg":
            source = parse_scfg(text)
            report = validate_scfg(source)
            if not report.ok:
                _emit({"error": "invalid grammar", "issues": _issues(report)})
                return 2
            g = scfg_to_aog(source)
            audit = {"kind": "scfg", "source_rules": len(source.rules)}
        elif args.kind == "spn":
            network = parse_spn_listing(text)
            report = validate_spn(network)
            if not report.ok:
                _emit({"error": "invalid network", "issues": _issues(report)})
                return 2
            conv = spn_to_aog(network)
            g = conv.grammar
            audit = {
                "kind": "spn",
                "source_nodes": len(network.nodes),
                "partition": conv.partition,
            }
        else:
            formula = parse_dimacs(text)
            g, x = sat_to_aog(formula)
            sample_path = args.sample_out or f"{args.output}.sample.json"
            save_sample(x, g.domain, sample_path)
            audit = {
                "kind": "sat",
                "variables": formula.n_vars,
                "clauses": len(formula.clauses),
                "sample": str(sample_path),
            }
    except (FormatError, InvalidSpn, UnsupportedGrammar, ValueError) as exc:
        _emit({"error": str(exc)})
        return 2
    save_grammar(g, args.output)
    audit["grammar"] = _grammar_audit(g)
    _emit(audit)
    return 0


def cmd_emit(args: argparse.Namespace) -> int:
    try:
        g = load_grammar(args.grammar, renormalize=args.renormalize, check=False)
    except (FormatError, OSError) as exc:
        _emit({"error": str(exc)})
        return 3
    report = validate_grammar(g)
    if not report.ok:
        _emit({"error": "invalid grammar", "issues": _issues(report)})
        return 2
    doc = emit_fol(g) if args.dialect == "fol" else emit_slp(g)
    if args.output:
        Path(args.output).write_text(doc.text)
        _emit({"dialect": doc.dialect, "lines": len(doc.lines), "path": str(args.output)})
    else:
        sys.stdout.write(doc.text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aog", description="And-Or grammar toolkit: validate, sample, parse, convert, emit."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_renormalize(p: argparse.ArgumentParser) -> None:
        p.add_argument(
            "--renormalize",
            action="store_true",
            help="rescale each Or-node's probabilities to sum to 1 on load",
        )

    p = sub.add_parser("validate", help="check a grammar file")
    p.add_argument("grammar")
    add_renormalize(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("parse", help="parse a sample file against a grammar")
    p.add_argument("grammar")
    p.add_argument("sample")
    p.add_argument("--mode", choices=("viterbi", "marginal"), default="viterbi")
    p.add_argument("--stats", action="store_true", help="include chart statistics")
    p.add_argument("--dot", metavar="FILE", help="write the parse tree as graphviz")
    p.add_argument("--budget-entries", type=int, default=10_000_000)
    p.add_argument("--budget-seconds", type=float, default=None)
    add_renormalize(p)
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("sample", help="draw samples from a grammar")
    p.add_argument("grammar")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--max-depth", type=int, default=64)
    add_renormalize(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("normalize", help="convert a grammar to binary normal form")
    p.add_argument("grammar")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--map", metavar="FILE", help="write the node map for tree projection")
    add_renormalize(p)
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("convert", help="compile scfg/spn/sat input to a grammar file")
    p.add_argument("kind", choices=("scfg", "spn", "sat"))
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--sample-out", help="where sat writes the clause-marker sample")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("emit", help="render a grammar as probabilistic logic")
    p.add_argument("dialect", choices=("fol", "slp"))
    p.add_argument("grammar")
    p.add_argument("-o", "--output")
    add_renormalize(p)
    p.set_defaults(func=cmd_emit)

    return parser


def main(argv=None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
