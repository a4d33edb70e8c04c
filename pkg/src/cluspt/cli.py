"""Command line entry point: ``cluspt solve|gen|oracle|validate``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .bench import InvariantViolation, run_campaign, write_report
from .engine import EngineConfig
from .instance import InstanceError, generate_instance, load_instance, validate_instance, write_instance
from .oracle import OracleInfeasible, OracleSizeError, oracle_fixed_roots, oracle_optimum
from .solution import InfeasibleTask
from .uss import TaskGenome

EXIT_OK, EXIT_USAGE, EXIT_INSTANCE, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cluspt", description="Clustered shortest-path tree solver and benchmark harness")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    solve = sub.add_parser("solve", help="run the multitask solver on one batch of instances")
    solve.add_argument("--instance", action="append", required=True, help="instance file (repeat for K tasks)")
    solve.add_argument("--pop", type=int, default=100)
    solve.add_argument("--gens", type=int, default=500)
    solve.add_argument("--rmp", type=float, default=0.5)
    solve.add_argument("--mut-rate", type=float, default=0.05)
    solve.add_argument("--parents", type=int, default=2)
    solve.add_argument("--runs", type=int, default=30)
    solve.add_argument("--seed", type=int, default=0)
    solve.add_argument("--out", required=True, help="per-run CSV path")
    solve.add_argument("--json")
    solve.add_argument("--trace", help="directory for per-generation best-cost CSVs")
    solve.add_argument("--no-memo", action="store_true", help="recompute every intra-cluster tree")
    solve.add_argument("--workers", type=int, default=1, help="threads for offspring evaluation")

    gen = sub.add_parser("gen", help="generate a random Euclidean clustered instance")
    gen.add_argument("--vertices", type=int, required=True)
    gen.add_argument("--clusters", type=int, required=True)
    gen.add_argument("--density", type=float, default=1.0)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--name")
    gen.add_argument("--out", required=True)

    orc = sub.add_parser("oracle", help="exact optimum of a tiny instance")
    orc.add_argument("--instance", required=True)
    orc.add_argument("--fixed-roots", help="comma-separated local roots, one per cluster")

    val = sub.add_parser("validate", help="check an instance file")
    val.add_argument("--instance", required=True)
    return parser


def _load(path: str):
    try:
        return load_instance(path)
    except OSError as exc:
        raise InstanceError(f"{path}: {exc.strerror or exc}") from exc
    except InstanceError as exc:
        raise InstanceError(f"{path}: {exc}") from exc


def cmd_solve(args) -> int:
    tasks = [_load(p) for p in args.instance]
    try:
        config = EngineConfig(
            pop_size=args.pop, generations=args.gens, rmp=args.rmp, mut_rate=args.mut_rate,
            parents_k=args.parents, master_seed=args.seed, memo_enabled=not args.no_memo,
            workers=args.workers,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if args.runs < 1:
        raise UsageError("--runs must be >= 1")
    report = run_campaign(tasks, config, runs=args.runs)
    write_report(report, args.out, args.json, args.trace)
    for a in report.aggregates():
        print(f"{a.instance}: BF={a.bf:.6g} Avg={a.avg:.6g} Time={a.time_ms:.1f}ms over {a.runs} runs")
    return EXIT_OK


def cmd_gen(args) -> int:
    graph = generate_instance(args.vertices, args.clusters, args.density, args.seed, name=args.name)
    Path(args.out).write_text(write_instance(graph))
    return EXIT_OK


def cmd_oracle(args) -> int:
    task = _load(args.instance)
    report = validate_instance(task)
    if not report.ok:
        raise InstanceError(str(report))
    if args.fixed_roots:
        try:
            roots = tuple(int(tok) for tok in args.fixed_roots.split(","))
        except ValueError as exc:
            raise UsageError(f"bad --fixed-roots: {exc}") from exc
        if len(roots) != task.num_clusters:
            raise UsageError(f"--fixed-roots needs {task.num_clusters} vertices")
        result = oracle_fixed_roots(TaskGenome(0, roots), task)
    else:
        result = oracle_optimum(task)
    print(f"optimal_cost {result.optimal_cost!r}")
    print(f"roots {','.join(map(str, result.optimal_tree.roots.roots))}")
    print(f"enumerated {result.enumeration_count}")
    for u, v, w in result.optimal_tree.edges:
        print(f"edge {u} {v} {w!r}")
    return EXIT_OK


def cmd_validate(args) -> int:
    task = _load(args.instance)
    report = validate_instance(task)
    print(report)
    return EXIT_OK if report.ok else EXIT_INSTANCE


COMMANDS = {"solve": cmd_solve, "gen": cmd_gen, "oracle": cmd_oracle, "validate": cmd_validate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"cluspt: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OracleSizeError, OracleInfeasible, InfeasibleTask, InstanceError) as exc:
        print(f"cluspt: {exc}", file=sys.stderr)
        return EXIT_INSTANCE
    except InvariantViolation as exc:
        print(f"cluspt: invariant violated: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except ValueError as exc:
        print(f"cluspt: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
