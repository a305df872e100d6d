"""CDCL SAT solver with dual implication point clause learning."""

from .ercl import DipConfig
from .formula import Clause, CnfFormula, DimacsError, parse_dimacs, write_dimacs
from .gen import gen_kxor, gen_tseitin_grid, gen_tseitin_regular, gen_xorified_kxor
from .proof import ProofWriter, check_proof, parse_proof, trim_proof
from .search import (
    SAT,
    UNKNOWN,
    UNSAT,
    Solver,
    SolverConfig,
    SolverStats,
    solve_formula,
)
from .tvd import enumerate_tvds, find_two_disjoint_paths

__version__ = "0.1.0"

__all__ = [
    "Clause",
    "CnfFormula",
    "DimacsError",
    "DipConfig",
    "ProofWriter",
    "SAT",
    "Solver",
    "SolverConfig",
    "SolverStats",
    "UNKNOWN",
    "UNSAT",
    "check_proof",
    "enumerate_tvds",
    "find_two_disjoint_paths",
    "gen_kxor",
    "gen_tseitin_grid",
    "gen_tseitin_regular",
    "gen_xorified_kxor",
    "parse_dimacs",
    "parse_proof",
    "solve_formula",
    "trim_proof",
    "write_dimacs",
    "__version__",
]
