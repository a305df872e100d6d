"""Benchmark generators: Tseitin parity formulas and xorified random k-XOR.

Every generator is a pure function of its parameters; the same seed gives
the same formula, byte for byte once serialized.
"""

from __future__ import annotations

import itertools
import random

from .formula import Clause, CnfFormula, lit_from_dimacs

__all__ = [
    "XorConstraint",
    "ChargedGraph",
    "xor_to_clauses",
    "grid_graph",
    "gen_tseitin_grid",
    "random_regular_graph",
    "gen_tseitin_regular",
    "gen_kxor",
    "xorify",
    "gen_xorified_kxor",
    "gf2_consistent",
]


class XorConstraint:
    """x_{i1} ^ ... ^ x_{ik} = parity, over 1-based variable indices."""

    __slots__ = ("vars", "parity")

    def __init__(self, vars, parity):
        self.vars = list(vars)
        self.parity = parity & 1

    def __repr__(self):
        return "XorConstraint(%r, %d)" % (self.vars, self.parity)


class ChargedGraph:
    """Undirected simple graph with one charge bit per vertex.

    Edge i (0-based) maps to DIMACS variable i+1.  The Tseitin formula of
    the graph asserts, per vertex, that the incident edge variables sum to
    the vertex charge mod 2; it is unsatisfiable iff the total charge is odd.
    """

    __slots__ = ("n", "edges", "charges")

    def __init__(self, n, edges, charges=None):
        self.n = n
        self.edges = list(edges)
        self.charges = list(charges) if charges is not None else [0] * n

    def total_charge(self) -> int:
        return sum(self.charges) & 1

    def constraints(self) -> list[XorConstraint]:
        inc = [[] for _ in range(self.n)]
        for i, (u, v) in enumerate(self.edges):
            inc[u].append(i + 1)
            inc[v].append(i + 1)
        return [XorConstraint(inc[v], self.charges[v]) for v in range(self.n)]

    def to_formula(self) -> CnfFormula:
        f = CnfFormula(len(self.edges))
        for con in self.constraints():
            for cl in xor_to_clauses(con):
                f.add_clause(cl)
        return f


def xor_to_clauses(con: XorConstraint) -> list[Clause]:
    """CNF-ize one XOR by enumerating its falsifying assignments.

    Produces exactly 2^(k-1) clauses, one forbidding each assignment of the
    wrong parity, in lexicographic assignment order (all-false first).
    """
    out = []
    for bits in itertools.product((False, True), repeat=len(con.vars)):
        if sum(bits) & 1 == con.parity:
            continue
        out.append(
            Clause(
                lit_from_dimacs(-v if b else v)
                for v, b in zip(con.vars, bits)
            )
        )
    return out


def grid_graph(rows: int, cols: int) -> ChargedGraph:
    """Grid with row-major vertices; per vertex row, horizontal edges first."""
    edges = []
    for r in range(rows):
        base = r * cols
        for c in range(cols - 1):
            edges.append((base + c, base + c + 1))
        if r + 1 < rows:
            for c in range(cols):
                edges.append((base + c, base + c + cols))
    return ChargedGraph(rows * cols, edges)


def gen_tseitin_grid(rows: int, cols: int, charge_vertex=(0, 0)) -> CnfFormula:
    """Grid Tseitin formula; one charged vertex (or none, for the SAT twin)."""
    if rows < 2 or cols < 2:
        raise ValueError("grid needs rows, cols >= 2")
    g = grid_graph(rows, cols)
    if charge_vertex is not None:
        r, c = charge_vertex
        if not (0 <= r < rows and 0 <= c < cols):
            raise ValueError("charge vertex out of range")
        g.charges[r * cols + c] = 1
    return g.to_formula()


def random_regular_graph(n: int, d: int, rng: random.Random, max_tries=2000):
    """Random simple d-regular graph by the pairing model with rejection."""
    if n * d % 2 or d >= n or d < 1:
        raise ValueError("no simple %d-regular graph on %d vertices" % (d, n))
    for _ in range(max_tries):
        stubs = [v for v in range(n) for _ in range(d)]
        rng.shuffle(stubs)
        seen = set()
        ok = True
        for i in range(0, len(stubs), 2):
            u, v = stubs[i], stubs[i + 1]
            if u == v or (min(u, v), max(u, v)) in seen:
                ok = False
                break
            seen.add((min(u, v), max(u, v)))
        if ok:
            return sorted(seen)
    raise ValueError("pairing model kept colliding; graph too constrained")


def gen_tseitin_regular(
    n: int, d: int, seed: int = 0, parity: int = 1, charges: str = "single"
) -> CnfFormula:
    """Tseitin formula over a random d-regular graph.

    parity fixes the total charge (1 = unsatisfiable).  charges picks the
    layout: "single" puts everything on vertex 0, "random" spreads random
    bits with the requested total parity.
    """
    rng = random.Random(seed)
    g = ChargedGraph(n, random_regular_graph(n, d, rng))
    if charges == "single":
        g.charges[0] = parity & 1
    elif charges == "random":
        bits = [rng.randrange(2) for _ in range(n)]
        bits[-1] ^= (sum(bits) ^ parity) & 1
        g.charges = bits
    else:
        raise ValueError("charges must be 'single' or 'random'")
    return g.to_formula()


def gen_kxor(nvars: int, nclauses: int, k: int, rng: random.Random):
    """nclauses random k-XOR constraints: distinct sorted vars, random parity."""
    if k > nvars:
        raise ValueError("k exceeds variable count")
    return [
        XorConstraint(sorted(rng.sample(range(1, nvars + 1), k)), rng.randrange(2))
        for _ in range(nclauses)
    ]


def xorify(constraints, nvars: int, m: int):
    """Replace variable i by the XOR of m fresh variables (i-1)*m+1 .. i*m.

    Returns (new constraints, new variable count).  m=1 is the identity.
    """
    out = []
    for con in constraints:
        vs = []
        for v in con.vars:
            vs.extend(range((v - 1) * m + 1, v * m + 1))
        out.append(XorConstraint(vs, con.parity))
    return out, nvars * m


def gen_xorified_kxor(
    nvars: int,
    nclauses: int | None = None,
    k: int = 3,
    m: int = 2,
    seed: int = 0,
    ensure_unsat: bool = False,
) -> CnfFormula:
    """Random k-XOR formula, hardened by xorification with m fresh vars each.

    ensure_unsat bumps the seed until the underlying linear system is
    inconsistent over GF(2), which survives xorification.
    """
    if nclauses is None:
        nclauses = nvars
    s = seed
    while True:
        cons = gen_kxor(nvars, nclauses, k, random.Random(s))
        if not ensure_unsat or not gf2_consistent(cons, nvars):
            break
        s += 1
    xcons, nv = xorify(cons, nvars, m)
    f = CnfFormula(nv)
    for con in xcons:
        for cl in xor_to_clauses(con):
            f.add_clause(cl)
    return f


def gf2_consistent(constraints, nvars: int) -> bool:
    """Incremental Gaussian elimination over GF(2) bitmasks."""
    pivots = {}
    for con in constraints:
        mask = 0
        for v in con.vars:
            mask ^= 1 << v
        rhs = con.parity & 1
        while mask:
            top = mask.bit_length()
            if top not in pivots:
                pivots[top] = (mask, rhs)
                break
            pm, pr = pivots[top]
            mask ^= pm
            rhs ^= pr
        if not mask and rhs:
            return False
    return True
