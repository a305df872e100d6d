"""Propositional core: packed literals, clauses, CNF formulas, DIMACS I/O.

Internally a variable is a dense 0-based int and a literal packs variable and
polarity into a single int: ``var * 2`` for the positive literal and
``var * 2 + 1`` for the negative one.  Negation is ``lit ^ 1``, the variable
is ``lit >> 1``.  All external input and output speaks 1-based signed DIMACS.
"""

from __future__ import annotations

import warnings

__all__ = [
    "mk_lit",
    "lit_var",
    "lit_neg",
    "lit_is_neg",
    "lit_from_dimacs",
    "lit_to_dimacs",
    "Clause",
    "CnfFormula",
    "clause_from_dimacs",
    "DimacsError",
    "parse_dimacs",
    "write_dimacs",
]


# Assignment values shared by the solver modules.
UNDEF, TRUE, FALSE = 0, 1, 2


def mk_lit(var: int, negative: bool = False) -> int:
    """Build the packed literal for a 0-based variable."""
    return var * 2 + (1 if negative else 0)


def lit_var(lit: int) -> int:
    return lit >> 1


def lit_neg(lit: int) -> int:
    return lit ^ 1


def lit_is_neg(lit: int) -> bool:
    return bool(lit & 1)


def lit_from_dimacs(n: int) -> int:
    """Signed 1-based DIMACS literal to packed form."""
    if n == 0:
        raise ValueError("0 is a clause terminator, not a literal")
    v = abs(n) - 1
    return v * 2 + (1 if n < 0 else 0)


def lit_to_dimacs(lit: int) -> int:
    """Packed literal to signed 1-based DIMACS form."""
    v = (lit >> 1) + 1
    return -v if lit & 1 else v


class Clause:
    """A disjunction of packed literals.

    Duplicate literals are dropped at construction (first occurrence wins);
    a clause containing both a literal and its negation is rejected with
    ValueError.  ``lbd`` is 0 until computed, ``activity`` starts at 0.
    """

    __slots__ = ("lits", "learnt", "lbd", "activity", "is_def", "deleted")

    def __init__(self, lits, learnt: bool = False, lbd: int = 0, is_def: bool = False):
        seen = set()
        out = []
        for l in lits:
            if l in seen:
                continue
            if l ^ 1 in seen:
                raise ValueError(
                    "tautological clause: contains both %d and %d" % (l ^ 1, l)
                )
            seen.add(l)
            out.append(l)
        self.lits = out
        self.learnt = learnt
        self.lbd = lbd
        self.activity = 0.0
        self.is_def = is_def
        self.deleted = False

    def __len__(self) -> int:
        return len(self.lits)

    def __iter__(self):
        return iter(self.lits)

    def to_dimacs(self) -> list[int]:
        return [lit_to_dimacs(l) for l in self.lits]

    def __repr__(self) -> str:
        return "Clause(%s)" % " ".join(str(x) for x in self.to_dimacs())


def clause_from_dimacs(nums, **kw) -> Clause:
    """Build a Clause from signed 1-based DIMACS ints."""
    return Clause([lit_from_dimacs(n) for n in nums], **kw)


class CnfFormula:
    """A CNF formula: a variable count and a clause list."""

    def __init__(self, num_vars: int = 0, clauses=None):
        self.num_vars = num_vars
        self.clauses: list[Clause] = list(clauses) if clauses is not None else []

    @property
    def num_clauses(self) -> int:
        return len(self.clauses)

    def add_clause(self, clause: Clause) -> None:
        for l in clause.lits:
            if (l >> 1) >= self.num_vars:
                self.num_vars = (l >> 1) + 1
        self.clauses.append(clause)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CnfFormula):
            return NotImplemented
        return self.num_vars == other.num_vars and [c.lits for c in self.clauses] == [
            c.lits for c in other.clauses
        ]

    def __repr__(self) -> str:
        return "CnfFormula(num_vars=%d, num_clauses=%d)" % (
            self.num_vars,
            self.num_clauses,
        )


class DimacsError(ValueError):
    """Structural error in a DIMACS stream; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else "line %d: %s" % (line, message))
        self.line = line


def parse_dimacs(text) -> CnfFormula:
    """Parse a DIMACS CNF byte or text stream.

    Comments and blank lines are skipped, clauses may span lines.  A clause
    count mismatch is tolerated with a warning; the variable count is raised
    if a clause mentions a larger index.  Tautological input clauses are
    dropped with a warning.  Structural corruption (missing or malformed
    header, non-integer tokens) raises DimacsError with the line number.
    """
    if isinstance(text, (bytes, bytearray)):
        text = text.decode("ascii", errors="replace")
    num_vars = None
    declared = None
    clauses: list[Clause] = []
    cur: list[int] = []
    parsed = 0
    max_var = 0
    last_line = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        last_line = lineno
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("%"):
            break
        if line.startswith("p"):
            if num_vars is not None:
                raise DimacsError("duplicate header", lineno)
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise DimacsError("malformed header %r" % line, lineno)
            try:
                num_vars = int(parts[2])
                declared = int(parts[3])
            except ValueError:
                raise DimacsError("malformed header %r" % line, lineno) from None
            if num_vars < 0 or declared < 0:
                raise DimacsError("negative count in header", lineno)
            continue
        if num_vars is None:
            raise DimacsError("clause data before header", lineno)
        for tok in line.split():
            try:
                n = int(tok)
            except ValueError:
                raise DimacsError("non-integer token %r" % tok, lineno) from None
            if n == 0:
                parsed += 1
                try:
                    clauses.append(Clause(cur))
                except ValueError:
                    warnings.warn(
                        "dropping tautological clause ending at line %d" % lineno
                    )
                cur = []
            else:
                if abs(n) > max_var:
                    max_var = abs(n)
                cur.append(lit_from_dimacs(n))
    if num_vars is None:
        raise DimacsError("missing header", last_line or None)
    if cur:
        warnings.warn("unterminated final clause")
        parsed += 1
        try:
            clauses.append(Clause(cur))
        except ValueError:
            warnings.warn("dropping tautological clause at end of input")
    if declared is not None and parsed != declared:
        warnings.warn(
            "header declares %d clauses but %d were parsed" % (declared, parsed)
        )
    if max_var > num_vars:
        num_vars = max_var
    return CnfFormula(num_vars, clauses)


def write_dimacs(formula: CnfFormula) -> str:
    """Serialize a formula to DIMACS text; parse(write(f)) round-trips."""
    lines = ["p cnf %d %d" % (formula.num_vars, formula.num_clauses)]
    for c in formula.clauses:
        lines.append(" ".join(str(n) for n in c.to_dimacs()) + " 0")
    return "\n".join(lines) + "\n"
