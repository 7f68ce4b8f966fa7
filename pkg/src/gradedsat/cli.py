"""Command line: ``gradedsat solve FILE``, ``gradedsat gen``, ``gradedsat convert FILE``.

Exit codes: 10 SAT, 20 UNSAT, 1 parse or usage error, 2 resource limit,
3 disagreement with the ``--oracle`` cross-check.
"""
from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .formula import (
    ParseError,
    has_graded,
    has_legacy,
    modernize,
    numbers,
    parse,
    to_nnf,
    to_text,
    uses_inverse,
)
from .gen import Profile, generate
from .kripke import dump_model
from .verdict import Limits, ResourceLimitExceeded

EXIT_SAT, EXIT_UNSAT = 10, 20
EXIT_USAGE, EXIT_RESOURCE, EXIT_ORACLE = 1, 2, 3

ENGINES = ("optimized", "standard", "incorrect", "inverse")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gradedsat", description="Satisfiability for graded modal logic.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="decide one formula")
    s.add_argument("file", help="formula file, or - for stdin")
    s.add_argument("--engine", choices=ENGINES, help="default: inverse if the input uses inv/cap, else optimized")
    s.add_argument("--model", action="store_true", help="print a model after SAT")
    s.add_argument("--stats", action="store_true", help="print key=value statistics")
    s.add_argument("--max-steps", type=int, default=Limits.max_steps)
    s.add_argument("--max-depth", type=int, default=Limits.max_depth)
    s.add_argument("--max-constraints", type=int, default=Limits.max_constraints)
    s.add_argument("--oracle", action="store_true", help="cross-check with the standard engine")

    g = sub.add_parser("gen", help="print seeded random formulas, one per line")
    g.add_argument("--seed", type=int, default=1)
    g.add_argument("--count", type=int, default=1)
    g.add_argument("--max-size", type=int, default=Profile.max_size)
    g.add_argument("--max-n", type=int, default=Profile.max_n)
    g.add_argument("--atoms", default=",".join(Profile.atoms))
    g.add_argument("--relations", default=",".join(Profile.relations))
    g.add_argument("--inverse", action="store_true")
    g.add_argument("--intersection", action="store_true")
    g.add_argument("--legacy", action="store_true")

    c = sub.add_parser("convert", help="print the graded NNF of a formula")
    c.add_argument("file")
    return p


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _solve(engine: str, phi, limits: Limits, want_model: bool):
    if engine == "optimized":
        from .optimized import solve_grk

        return solve_grk(phi, limits, model=want_model)
    if engine == "inverse":
        from .inverse import solve_grkri

        return solve_grkri(phi, limits, model=want_model)
    if engine == "standard":
        from .standard import solve_standard

        return solve_standard(phi, limits, model=want_model)
    from .incorrect import solve_incorrect

    return solve_incorrect(phi, limits)


def _prepare(args, text: str):
    f = parse(text)
    engine = args.engine or ("inverse" if uses_inverse(f) else "optimized")
    if engine == "incorrect":
        if has_graded(f):
            raise UsageError("the incorrect engine only reads dia/box formulas")
    elif has_legacy(f):
        raise UsageError("dia/box input: run 'gradedsat convert' first or use --engine incorrect")
    if engine in ("optimized", "standard") and uses_inverse(f):
        raise UsageError(f"the {engine} engine has no inverse relations or intersections")
    return engine, to_nnf(f)


def cmd_solve(args) -> int:
    from .standard import ORACLE_MAX_N

    try:
        engine, phi = _prepare(args, _read(args.file))
    except (ParseError, UsageError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    limits = Limits(args.max_steps, args.max_depth, args.max_constraints)
    if engine == "standard" and max(numbers(phi), default=0) > ORACLE_MAX_N:
        print(
            f"warning: numbers above {ORACLE_MAX_N}; the standard engine keeps every successor",
            file=sys.stderr,
        )
    try:
        verdict = _solve(engine, phi, limits, args.model)
    except ResourceLimitExceeded as e:
        print("UNKNOWN")
        print(f"resource limit: {e.reason}", file=sys.stderr)
        return EXIT_RESOURCE
    out = [verdict.status]
    if args.model and verdict.model is not None:
        out.append(dump_model(verdict.model, verdict.root))
    if args.stats:
        out.extend(verdict.stats.lines(verdict.status, with_restarts=engine == "inverse"))
    print("\n".join(out))
    if args.oracle:
        code = _oracle(engine, phi, limits, verdict.sat)
        if code:
            return code
    return EXIT_SAT if verdict.sat else EXIT_UNSAT


def _oracle(engine: str, phi, limits: Limits, sat: bool) -> Optional[int]:
    from .standard import ORACLE_MAX_N, solve_standard

    if engine in ("standard", "incorrect") or uses_inverse(phi):
        print("warning: no oracle for this engine/input; cross-check skipped", file=sys.stderr)
        return None
    if max(numbers(phi), default=0) > ORACLE_MAX_N:
        print(f"warning: numbers above {ORACLE_MAX_N}; cross-check skipped", file=sys.stderr)
        return None
    try:
        expect = solve_standard(phi, limits, model=False).sat
    except ResourceLimitExceeded as e:
        print(f"warning: oracle gave up ({e.reason})", file=sys.stderr)
        return None
    if expect != sat:
        print(f"error: oracle disagrees (standard says {'SAT' if expect else 'UNSAT'})", file=sys.stderr)
        return EXIT_ORACLE
    return None


def cmd_gen(args) -> int:
    try:
        profile = Profile(
            max_size=args.max_size,
            max_n=args.max_n,
            atoms=tuple(a for a in args.atoms.split(",") if a),
            relations=tuple(r for r in args.relations.split(",") if r),
            allow_inverse=args.inverse,
            allow_intersection=args.intersection,
            allow_legacy=args.legacy,
        )
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    for seed in range(args.seed, args.seed + args.count):
        print(to_text(generate(seed, profile)))
    return 0


def cmd_convert(args) -> int:
    try:
        f = parse(_read(args.file))
    except (ParseError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    print(to_text(to_nnf(modernize(f))))
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"solve": cmd_solve, "gen": cmd_gen, "convert": cmd_convert}[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
