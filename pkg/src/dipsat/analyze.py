"""Conflict analysis: 1UIP lemma derivation, LBD, and conflict-graph extraction.

The solver object passed in here exposes trail, per-var level/reason/position
arrays, the seen scratch buffer, and the activity bump hooks.  Nothing in this
module mutates assignments.
"""

from __future__ import annotations

__all__ = [
    "LearnedClause",
    "TvdProblem",
    "analyze_1uip",
    "compute_lbd",
    "lbd_estimate",
    "extract_top_level_graph",
]


class LearnedClause:
    """A 1UIP lemma: asserting literal first, plus backjump metadata.

    level_vars counts the current-level variables met during analysis,
    which is the conflict cone's size without its sink.
    """

    __slots__ = ("lits", "lbd", "backjump_level", "uip_pos", "level_vars")

    def __init__(self, lits, lbd, backjump_level, uip_pos, level_vars=0):
        self.lits = lits
        self.lbd = lbd
        self.backjump_level = backjump_level
        self.uip_pos = uip_pos
        self.level_vars = level_vars

    @property
    def asserting_lit(self):
        return self.lits[0]


class TvdProblem:
    """Conflict graph of the top decision level, from the first UIP to ⊥.

    Nodes are 0..n-1 in trail order: node 0 is the first UIP, node n-1 the
    conflict sink (lits[n-1] is -1).  Only literals with a path to the sink
    are kept.  succs lists are ascending; side_inputs[k] holds the true
    previous-level literals among node k's antecedents (empty for node 0,
    whose antecedents lie outside the graph); trail_pos[k] is the absolute
    trail index (len(trail) for the sink).

    Most problems are discarded before anyone looks at a side input, so the
    side lists are materialized from the reason clauses on first access.
    That read is only valid while the trail that produced the problem is
    intact, in particular before the backjump.
    """

    __slots__ = (
        "n", "succs", "lits", "trail_pos",
        "_sides", "_solver", "_conflict", "_level",
    )

    def __init__(
        self, n, succs, lits, side_inputs, trail_pos, solver=None, conflict=None
    ):
        self.n = n
        self.succs = succs
        self.lits = lits
        self.trail_pos = trail_pos
        self._sides = side_inputs
        self._solver = solver
        self._conflict = conflict
        self._level = 0 if solver is None else solver.decision_level

    @property
    def s(self) -> int:
        return 0

    @property
    def t(self) -> int:
        return self.n - 1

    @property
    def side_inputs(self):
        sides = self._sides
        if sides is None:
            sides = self._collect_sides()
            self._sides = sides
        return sides

    def _collect_sides(self):
        vlevel = self._solver.var_level
        reasons = self._solver.var_reason
        cur = self._level
        sides = [[] for _ in range(self.n)]
        row = sides[self.n - 1]
        for q in self._conflict.lits:
            if 0 < vlevel[q >> 1] < cur:
                row.append(q ^ 1)
        lits = self.lits
        for k in range(1, self.n - 1):
            row = sides[k]
            for q in reasons[lits[k] >> 1].lits[1:]:
                if 0 < vlevel[q >> 1] < cur:
                    row.append(q ^ 1)
        return sides


def analyze_1uip(solver, conflict) -> LearnedClause:
    """Derive the first-UIP lemma by reverse-trail resolution.

    Walks seen literals backward through the trail, expanding reasons until a
    single current-level literal remains.  Level-0 literals are dropped from
    the lemma.  Variable activities are bumped for every literal touched,
    clause activities for every learnt clause resolved with.
    """
    trail = solver.trail
    vlevel = solver.var_level
    reasons = solver.var_reason
    cur = solver.decision_level
    seen = solver.seen
    to_clear = solver.seen_to_clear
    bump_var = solver.bump_var_activity
    bump_clause = solver.bump_clause_activity

    out = []
    counter = 0
    nlevel = 0
    idx = len(trail) - 1
    p = -1
    c = conflict
    while True:
        if c.learnt:
            bump_clause(c)
        lits = c.lits
        for j in range(0 if p < 0 else 1, len(lits)):
            q = lits[j]
            v = q >> 1
            if seen[v]:
                continue
            lv = vlevel[v]
            if lv == 0:
                continue
            seen[v] = 1
            to_clear.append(v)
            bump_var(v)
            if lv == cur:
                counter += 1
                nlevel += 1
            else:
                out.append(q)
        while not seen[trail[idx] >> 1]:
            idx -= 1
        p = trail[idx]
        idx -= 1
        counter -= 1
        if counter == 0:
            break
        c = reasons[p >> 1]
        if c is None:
            raise RuntimeError(
                "conflict analysis hit a reasonless non-decision literal; "
                "scripted assumptions must not feed the conflict level"
            )
    lits = [p ^ 1] + out
    for v in to_clear:
        seen[v] = 0
    del to_clear[:]

    bj = 0
    if len(lits) > 1:
        mi = 1
        for j in range(2, len(lits)):
            if vlevel[lits[j] >> 1] > vlevel[lits[mi] >> 1]:
                mi = j
        lits[1], lits[mi] = lits[mi], lits[1]
        bj = vlevel[lits[1] >> 1]
    return LearnedClause(
        lits, compute_lbd(solver, lits), bj, solver.var_pos[p >> 1], nlevel
    )


def compute_lbd(solver, lits) -> int:
    """Distinct decision levels among the (all assigned) literals."""
    vlevel = solver.var_level
    levels = set()
    for l in lits:
        v = l >> 1
        assert solver.value_of_var(v) != 0, "compute_lbd on unassigned literal"
        levels.add(vlevel[v])
    return len(levels)


def lbd_estimate(solver, lits) -> int:
    """LBD variant tolerating unassigned literals.

    Counts distinct levels of the assigned literals, plus one per unassigned
    literal (each will land on some level of its own in the worst case).
    Used to tag DIP clauses whose extension literal has no value yet.
    """
    vlevel = solver.var_level
    levels = set()
    free = 0
    for l in lits:
        v = l >> 1
        if solver.value_of_var(v) == 0:
            free += 1
        else:
            levels.add(vlevel[v])
    return len(levels) + free


def extract_top_level_graph(
    solver, conflict, uip_pos: int, level_vars=None
) -> TvdProblem:
    """Build the first-UIP-to-⊥ conflict graph of the current level.

    One backward trail sweep marks the current-level literals from which ⊥
    is reachable.  Knowing the cone size up front (analyze_1uip counts it,
    pass LearnedClause.level_vars) pins every node id before the sweep
    reaches it, so literals, positions and successor rows land directly in
    their final trail-order slots.  The per-variable out-edge buckets
    double as the mark set: a node's targets are all discovered before the
    node itself and arrive in descending id order, so one reverse per row
    sorts it.  Current-level antecedents always sit at or after the first
    UIP (it dominates the conflict), so the sweep must drain the buckets
    down to exactly the UIP's, which is asserted.
    """
    trail = solver.trail
    vlevel = solver.var_level
    reasons = solver.var_reason
    cur = solver.decision_level
    end = len(trail)
    if level_vars is None:
        level_vars = _cone_size(solver, conflict, uip_pos)

    n = level_vars + 1
    t = level_vars
    lits = [-1] * n
    pos = [0] * n
    pos[t] = end
    succs = [None] * n
    succs[t] = []
    outs = {}
    for q in conflict.lits:
        w = q >> 1
        if vlevel[w] == cur:
            outs[w] = [t]

    nid = t
    for i in range(end - 1, uip_pos, -1):
        l = trail[i]
        v = l >> 1
        row = outs.pop(v, None)
        if row is None:
            continue
        nid -= 1
        lits[nid] = l
        pos[nid] = i
        row.reverse()
        succs[nid] = row
        rl = reasons[v].lits
        for j in range(1, len(rl)):
            w = rl[j] >> 1
            if vlevel[w] == cur:
                r = outs.get(w)
                if r is None:
                    outs[w] = [nid]
                else:
                    r.append(nid)

    u0 = trail[uip_pos]
    row = outs.pop(u0 >> 1, None)
    assert (
        row is not None and not outs and nid == 1
    ), "cone does not end at the first UIP"
    row.reverse()
    succs[0] = row
    lits[0] = u0
    pos[0] = uip_pos
    return TvdProblem(n, succs, lits, None, pos, solver, conflict)


def _cone_size(solver, conflict, uip_pos):
    """Count the cone's variables when the caller has no analysis tally."""
    trail = solver.trail
    vlevel = solver.var_level
    reasons = solver.var_reason
    cur = solver.decision_level
    mark = set()
    for q in conflict.lits:
        w = q >> 1
        if vlevel[w] == cur:
            mark.add(w)
    for i in range(len(trail) - 1, uip_pos, -1):
        v = trail[i] >> 1
        if v not in mark:
            continue
        for q in reasons[v].lits[1:]:
            w = q >> 1
            if vlevel[w] == cur:
                mark.add(w)
    return len(mark)
