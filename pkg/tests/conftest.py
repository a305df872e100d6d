"""Shared fixtures: the worked examples and a scripted conflict driver."""

import pytest

from dipsat.ercl import DipConfig
from dipsat.formula import lit_from_dimacs, parse_dimacs
from dipsat.search import Solver, SolverConfig

# Chain of implications with a 9-node top level and five dominator pairs.
# Variables 1-13 form the implication chain, 14-19 the earlier-level context.
EX_CHAIN = """\
p cnf 19 13
14 -1 2 0
-1 -3 0
15 -1 4 0
-16 -2 3 -4 5 0
14 -5 -6 0
-5 7 0
6 -7 8 0
-16 -17 -5 -9 0
-17 9 -10 0
-18 19 -8 9 11 0
-11 -12 0
10 -11 13 0
12 -13 0
"""

# Decision groups reproducing the chain's conflict: context first, then x1.
EX_CHAIN_SCRIPT = [[16, 17, -19], [-14, 18, -15], [1]]

# Diamond-shaped instance whose only dominator pair is {x2, x5}.  Under a
# propagation order where x5 lands after x6 and x7, stopping analysis at
# two current-level literals lands on a non-cut instead.
EX_DIAMOND = """\
p cnf 7 7
-1 2 0
-1 3 0
-1 4 0
-3 -4 5 0
-2 6 0
-2 7 0
-5 -6 -7 0
"""


def drive_to_conflict(formula, groups, config=None):
    """Apply decision groups until propagation fails.

    Returns (solver, conflict).  Each group opens one level; its first
    literal is the decision, the rest are enqueued alongside it.
    """
    if config is None:
        config = SolverConfig(dip=DipConfig(enabled=False))
    s = Solver(formula, config)
    conflict = None
    for group in groups:
        s.new_level()
        for ext in group:
            s.enqueue(lit_from_dimacs(ext), None)
        conflict = s.propagate()
        if conflict is not None:
            break
    assert conflict is not None, "script ended without a conflict"
    return s, conflict


@pytest.fixture
def ex_chain():
    return parse_dimacs(EX_CHAIN)


@pytest.fixture
def ex_chain_conflict(ex_chain):
    return drive_to_conflict(ex_chain, EX_CHAIN_SCRIPT)


@pytest.fixture
def ex_diamond():
    return parse_dimacs(EX_DIAMOND)


@pytest.fixture
def ex_diamond_conflict(ex_diamond):
    return drive_to_conflict(ex_diamond, [[1]])
