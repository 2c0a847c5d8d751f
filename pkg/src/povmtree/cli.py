"""Command-line front end.

Exit codes: 0 success, 1 not realizable, 2 invalid input, 3 verification
failure.  Results go to stdout, diagnostics to stderr.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import demos
from . import fileformats as ff
from . import numerics as nx
from .compiler import compile_tree, embed_povm, embed_state
from .errors import InvalidInput, NotRealizable, PovmTreeError
from .realizability import check_condition, find_commuting_projector
from .simulator import exact_distribution, sample_histogram
from .verifier import verify_tree

EXIT_OK = 0
EXIT_NOT_REALIZABLE = 1
EXIT_INVALID = 2
EXIT_VERIFY_FAILED = 3


def _print_rows(header, rows) -> None:
    print("\t".join(header))
    for row in rows:
        print("\t".join(str(x) for x in row))


def _load_povm(path, tol):
    return ff.povm_from_dict(ff.read_json(path), tol=tol)


def _match_state(tree, state):
    if tree.skip_stage1 and state.dim == tree.dim - 1:
        return embed_state(state)
    return state


def _match_povm(tree, povm):
    if tree.skip_stage1 and povm.dim == tree.dim - 1:
        return embed_povm(povm)[0]
    return povm


def cmd_check(args) -> int:
    povm = _load_povm(args.povm, args.tol)
    verdict = find_commuting_projector(povm)
    print(f"commutant_dimension\t{verdict.commutant_dimension}")
    if not verdict.realizable:
        print("NOT_REALIZABLE")
        return EXIT_NOT_REALIZABLE
    print("REALIZABLE")
    print(f"projector_rank\t{verdict.projector.rank}")
    print(f"projector\t{json.dumps(ff.encode_matrix(verdict.projector.matrix))}")
    return EXIT_OK


def cmd_compile(args) -> int:
    povm = _load_povm(args.povm, args.tol)
    if args.embed:
        povm, projector = embed_povm(povm)
        skip = True
    elif args.projector:
        projector = ff.projector_from_dict(ff.read_json(args.projector))
        if not check_condition(povm, projector):
            print("projector does not commute with the POVM or has trivial rank", file=sys.stderr)
            return EXIT_NOT_REALIZABLE
        skip = False
    else:
        verdict = find_commuting_projector(povm)
        if not verdict.realizable:
            print("NOT_REALIZABLE (try --embed)", file=sys.stderr)
            return EXIT_NOT_REALIZABLE
        projector, skip = verdict.projector, False
    tree = compile_tree(povm, projector, skip_stage1=skip, reorder=not args.no_reorder, tol=args.tol)
    ff.write_json(args.output, ff.tree_to_dict(tree, with_operators=args.with_operators))
    nodes = sum(1 for _ in tree.nodes())
    _print_rows(["dim", "outcomes", "nodes", "depth", "skip_stage1", "output"],
                [[tree.dim, tree.m, nodes, tree.depth(), tree.skip_stage1, args.output]])
    return EXIT_OK


def cmd_simulate(args) -> int:
    tree = ff.tree_from_dict(ff.read_json(args.tree))
    state = _match_state(tree, ff.state_from_dict(ff.read_json(args.state)))
    dist = exact_distribution(tree, state)
    _print_rows(["outcome", "label", "probability"],
                [[k + 1, lbl, repr(float(p))] for k, (lbl, p)
                 in enumerate(zip(dist.labels, dist.probabilities))])
    return EXIT_OK


def cmd_sample(args) -> int:
    tree = ff.tree_from_dict(ff.read_json(args.tree))
    state = _match_state(tree, ff.state_from_dict(ff.read_json(args.state)))
    counts = sample_histogram(tree, state, args.shots, args.seed, workers=args.workers)
    _print_rows(["outcome", "label", "count"],
                [[k + 1, lbl, int(c)] for k, (lbl, c) in enumerate(zip(tree.labels, counts))])
    return EXIT_OK


def cmd_verify(args) -> int:
    tree = ff.tree_from_dict(ff.read_json(args.tree))
    povm = _match_povm(tree, _load_povm(args.povm, args.tol))
    report = verify_tree(tree, povm)
    print(json.dumps(report.to_dict(), indent=2))
    print("PASS" if report.pass_ else "FAIL")
    return EXIT_OK if report.pass_ else EXIT_VERIFY_FAILED


def cmd_demo(args) -> int:
    out = {"qutrit": demos.demo_qutrit, "ud": demos.demo_ud, "trine": demos.demo_trine}[args.name]()
    if args.name == "qutrit":
        _print_rows(["outcome", "probability", "expected"],
                    [[k + 1, repr(p), repr(e)] for k, (p, e)
                     in enumerate(zip(out["distribution"], out["expected"]))])
    print(json.dumps(out, indent=2, default=_json_default))
    print("PASS" if out["pass"] else "FAIL")
    return EXIT_OK if out["pass"] else EXIT_VERIFY_FAILED


def _json_default(x):
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    raise TypeError(f"cannot serialize {type(x)}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="povmtree",
        description="Realize POVMs as trees of projective measurements.")
    parser.add_argument("--tol", type=float, default=nx.RANK_TOL,
                        help="relative rank/positivity threshold (default %(default)g)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="decide realizability and print a commuting projector")
    p.add_argument("povm")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("compile", help="compile a POVM into a measurement tree")
    p.add_argument("povm")
    p.add_argument("--projector", help="JSON file with the commuting projector to use")
    p.add_argument("--no-reorder", action="store_true",
                   help="keep the given element order instead of choosing the last element")
    p.add_argument("--embed", action="store_true",
                   help="add one dimension so any POVM becomes realizable")
    p.add_argument("--with-operators", action="store_true",
                   help="store accumulated operators on every node")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("simulate", help="exact outcome distribution of a tree on a state")
    p.add_argument("tree")
    p.add_argument("state")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sample", help="seeded Monte Carlo shots")
    p.add_argument("tree")
    p.add_argument("state")
    p.add_argument("--shots", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("verify", help="check a tree against its source POVM")
    p.add_argument("tree")
    p.add_argument("povm")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("demo", help="run a built-in example")
    p.add_argument("name", choices=["qutrit", "ud", "trine"])
    p.set_defaults(func=cmd_demo)
    return parser


def run_command(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    try:
        return args.func(args)
    except NotRealizable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_REALIZABLE
    except (InvalidInput, PovmTreeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
