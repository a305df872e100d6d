"""Command line front end: solve, benchmark generation, self-check.

Output follows SAT competition conventions: "s" verdict lines, "v" model
lines, exit codes 10 (sat), 20 (unsat), 0 (unknown), 1 (usage or I/O
errors).
"""

from __future__ import annotations

import argparse
import json
import sys

from .ercl import DipConfig
from .formula import DimacsError, parse_dimacs, write_dimacs
from .gen import gen_tseitin_grid, gen_tseitin_regular, gen_xorified_kxor
from .proof import ProofWriter, check_proof
from .search import SAT, UNSAT, Solver, SolverConfig, luby
from .tvd import enumerate_tvds


class _Parser(argparse.ArgumentParser):
    """argparse variant exiting 1 on bad usage, per our exit-code contract."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write("%s: error: %s\n" % (self.prog, message))
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dipsat", description="CDCL SAT solver with DIP clause learning")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    ps = sub.add_parser("solve", help="solve a DIMACS CNF file")
    ps.add_argument("file", help="input CNF in DIMACS format")
    ps.add_argument("--dip", choices=["off", "on"], default="on")
    ps.add_argument(
        "--dip-choice",
        choices=["closest", "middle", "random", "heuristic"],
        default="middle",
    )
    ps.add_argument("--dip-min-occ", type=int, default=20, metavar="N")
    ps.add_argument("--dip-clauses", type=int, choices=[1, 2], default=2)
    ps.add_argument("--dip-filter", choices=["occ", "glue", "act"], default="occ")
    ps.add_argument("--ext-del-interval", type=int, default=1000, metavar="N")
    ps.add_argument("--ext-del-frac", type=int, default=50, metavar="PCT")
    ps.add_argument("--disable-window", type=int, default=100000, metavar="N")
    ps.add_argument("--disable-threshold", type=float, default=3.0, metavar="PCT")
    ps.add_argument("--seed", type=int, default=0)
    ps.add_argument("--conflict-limit", type=int, metavar="N")
    ps.add_argument("--time-limit", type=float, metavar="SECONDS")
    ps.add_argument("--proof", metavar="PATH", help="write a DRAT proof here")
    ps.add_argument("--stats", action="store_true", help="print run statistics as JSON")
    ps.add_argument(
        "--preset",
        choices=["baseline"],
        help="baseline = DIP on, middle choice, occ(20) filter, two clauses",
    )

    pg = sub.add_parser("gen", help="generate benchmark formulas")
    fam = pg.add_subparsers(dest="family", required=True, parser_class=_Parser)

    g = fam.add_parser("tseitin-grid", help="grid parity formula, one charged vertex")
    g.add_argument("--rows", type=int, required=True)
    g.add_argument("--cols", type=int, required=True)
    g.add_argument("--even", action="store_true", help="no charge: satisfiable twin")
    g.add_argument("-o", "--output", metavar="PATH")

    g = fam.add_parser("tseitin-regular", help="parity formula on a random regular graph")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--d", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--even", action="store_true", help="even total charge: satisfiable")
    g.add_argument(
        "--charges",
        choices=["single", "random"],
        default="single",
        help="charge layout across vertices",
    )
    g.add_argument("-o", "--output", metavar="PATH")

    g = fam.add_parser("kxor", help="random k-XOR, xorified")
    g.add_argument("--n", type=int, required=True, help="variables before xorification")
    g.add_argument("--nclauses", type=int, help="XOR constraints (default: n)")
    g.add_argument("--k", type=int, default=3)
    g.add_argument("--xorify", type=int, default=2, metavar="M", help="fresh vars per var")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument(
        "--ensure-unsat",
        action="store_true",
        help="bump the seed until the XOR system is inconsistent",
    )
    g.add_argument("-o", "--output", metavar="PATH")

    sub.add_parser("selfcheck", help="run quick internal consistency checks")
    return p


def _dip_config(args) -> DipConfig:
    if args.preset == "baseline":
        return DipConfig(seed=args.seed)
    return DipConfig(
        enabled=args.dip == "on",
        choice=args.dip_choice,
        min_occ=args.dip_min_occ,
        clauses=args.dip_clauses,
        filter=args.dip_filter,
        ext_delete_interval=args.ext_del_interval,
        ext_delete_fraction=args.ext_del_frac,
        disable_window=args.disable_window,
        disable_threshold=args.disable_threshold,
        seed=args.seed,
    )


def cmd_solve(args) -> int:
    try:
        with open(args.file, "rb") as f:
            formula = parse_dimacs(f.read())
    except OSError as e:
        sys.stderr.write("dipsat: cannot read %s: %s\n" % (args.file, e.strerror))
        return 1
    except DimacsError as e:
        sys.stderr.write("dipsat: %s: %s\n" % (args.file, e))
        return 1

    try:
        cfg = SolverConfig(
            seed=args.seed,
            conflict_limit=args.conflict_limit,
            time_limit=args.time_limit,
            dip=_dip_config(args),
        )
    except ValueError as e:
        sys.stderr.write("dipsat: %s\n" % e)
        return 1

    proof_file = None
    writer = None
    if args.proof:
        try:
            proof_file = open(args.proof, "w")
        except OSError as e:
            sys.stderr.write("dipsat: cannot write %s: %s\n" % (args.proof, e.strerror))
            return 1
        writer = ProofWriter(proof_file)

    try:
        solver = Solver(formula, config=cfg, proof=writer)
        status = solver.solve()
    finally:
        if proof_file is not None:
            proof_file.close()

    print("s %s" % status)
    if status == SAT:
        vals = solver.model
        for i in range(0, len(vals), 25):
            print("v " + " ".join(str(n) for n in vals[i : i + 25]), end="")
            print(" 0" if i + 25 >= len(vals) else "")
        if not vals:
            print("v 0")
    if args.stats:
        print(json.dumps(solver.stats.as_dict()))
    if status == SAT:
        return 10
    if status == UNSAT:
        return 20
    return 0


def cmd_gen(args) -> int:
    try:
        if args.family == "tseitin-grid":
            charge = None if args.even else (0, 0)
            formula = gen_tseitin_grid(args.rows, args.cols, charge_vertex=charge)
        elif args.family == "tseitin-regular":
            formula = gen_tseitin_regular(
                args.n,
                args.d,
                seed=args.seed,
                parity=0 if args.even else 1,
                charges=args.charges,
            )
        else:
            formula = gen_xorified_kxor(
                args.n,
                nclauses=args.nclauses,
                k=args.k,
                m=args.xorify,
                seed=args.seed,
                ensure_unsat=args.ensure_unsat,
            )
    except ValueError as e:
        sys.stderr.write("dipsat: %s\n" % e)
        return 1

    text = write_dimacs(formula)
    if args.output:
        try:
            with open(args.output, "w") as f:
                f.write(text)
        except OSError as e:
            sys.stderr.write("dipsat: cannot write %s: %s\n" % (args.output, e.strerror))
            return 1
    else:
        sys.stdout.write(text)
    return 0


def cmd_selfcheck(_args) -> int:
    failures = []

    def check(name, cond):
        if cond:
            print("ok: %s" % name)
        else:
            print("FAILED: %s" % name)
            failures.append(name)

    check("luby prefix", [luby(i) for i in range(1, 8)] == [1, 1, 2, 1, 1, 2, 4])

    f = parse_dimacs("p cnf 1 2\n1 0\n-1 0\n")
    w = ProofWriter()
    status = Solver(f, proof=w).solve()
    check("unit contradiction is UNSAT", status == UNSAT)
    check("its proof is accepted", check_proof(f, w.events))

    f = parse_dimacs("p cnf 3 3\n1 2 0\n-1 3 0\n-2 -3 0\n")
    check("small satisfiable instance", Solver(f).solve() == SAT)

    g = gen_tseitin_grid(3, 3)
    check("3x3 grid shape", g.num_vars == 12 and g.num_clauses == 32)

    _, tvds = enumerate_tvds(4, [[1, 2], [3], [3], []])
    check("diamond has its one dominator pair", sorted(tvds.pairs()) == [(1, 2)])

    print("%d checks failed" % len(failures) if failures else "all checks passed")
    return 1 if failures else 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.cmd == "solve":
        return cmd_solve(args)
    if args.cmd == "gen":
        return cmd_gen(args)
    return cmd_selfcheck(args)


if __name__ == "__main__":
    sys.exit(main())
