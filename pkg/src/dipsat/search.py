"""CDCL search: watched-literal propagation, VSIDS, restarts, learning.

The solver is a plain class whose internals (trail, propagate, enqueue,
decide) are usable directly, which is how the fine-grained tests drive it
to a specific conflict.  DIP learning hooks in through an ErclEngine when
enabled; everything else is a standard clause-learning loop.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

from .analyze import analyze_1uip, compute_lbd, extract_top_level_graph
from .ercl import DipConfig, ErclEngine
from .formula import FALSE, TRUE, UNDEF, Clause, lit_from_dimacs, lit_to_dimacs

SAT = "SATISFIABLE"
UNSAT = "UNSATISFIABLE"
UNKNOWN = "UNKNOWN"

VAR_RESCALE = 1e100
CLA_RESCALE = 1e20


class ScriptError(RuntimeError):
    """A forced decision script referenced an unusable literal."""


def luby(i: int) -> int:
    """The reluctant-doubling sequence 1 1 2 1 1 2 4 ..., 1-based."""
    while True:
        k = i.bit_length()
        if i == (1 << k) - 1:
            return 1 << (k - 1)
        i -= (1 << (k - 1)) - 1


@dataclass
class SolverConfig:
    """Search parameters; defaults are the shipped baseline."""

    var_decay: float = 0.95
    clause_decay: float = 0.999
    luby_base: int = 100
    reduce_first: int = 2000
    reduce_inc: int = 300
    seed: int = 0
    conflict_limit: int | None = None
    time_limit: float | None = None
    dip: DipConfig = field(default_factory=DipConfig)
    decision_script: list | None = None

    def __post_init__(self):
        if not 0.0 < self.var_decay < 1.0:
            raise ValueError("var_decay must lie in (0, 1)")
        if not 0.0 < self.clause_decay < 1.0:
            raise ValueError("clause_decay must lie in (0, 1)")
        if self.luby_base < 1 or self.reduce_first < 1 or self.reduce_inc < 0:
            raise ValueError("restart and reduce intervals must be positive")


@dataclass
class SolverStats:
    conflicts: int = 0
    decisions: int = 0
    propagations: int = 0
    restarts: int = 0
    conflicts_with_dip: int = 0
    dips_introduced: int = 0
    ext_vars_live: int = 0
    ext_vars_deleted: int = 0
    ext_delete_rounds: int = 0
    ext_decisions: int = 0
    proof_adds: int = 0
    dip_disabled_at: int | None = None
    dip_time: float = 0.0
    dip_time_fraction: float = 0.0
    solve_time: float = 0.0

    def as_dict(self):
        return asdict(self)


class VarOrderHeap:
    """Indexed max-heap on variable activity; ties go to the lower index."""

    def __init__(self, activity):
        self.act = activity
        self.heap = []
        self.pos = []

    def _before(self, u, v):
        au, av = self.act[u], self.act[v]
        return au > av or (au == av and u < v)

    def _sift_up(self, i):
        h, pos = self.heap, self.pos
        v = h[i]
        while i:
            p = (i - 1) >> 1
            if not self._before(v, h[p]):
                break
            h[i] = h[p]
            pos[h[i]] = i
            i = p
        h[i] = v
        pos[v] = i

    def _sift_down(self, i):
        h, pos = self.heap, self.pos
        n = len(h)
        v = h[i]
        while True:
            c = 2 * i + 1
            if c >= n:
                break
            if c + 1 < n and self._before(h[c + 1], h[c]):
                c += 1
            if not self._before(h[c], v):
                break
            h[i] = h[c]
            pos[h[i]] = i
            i = c
        h[i] = v
        pos[v] = i

    def grow(self, n):
        while len(self.pos) < n:
            self.pos.append(-1)

    def __contains__(self, v):
        return self.pos[v] >= 0

    def insert(self, v):
        if self.pos[v] < 0:
            self.heap.append(v)
            self.pos[v] = len(self.heap) - 1
            self._sift_up(self.pos[v])

    def update(self, v):
        if self.pos[v] >= 0:
            self._sift_up(self.pos[v])

    def pop(self):
        h, pos = self.heap, self.pos
        v = h[0]
        last = h.pop()
        pos[v] = -1
        if h:
            h[0] = last
            pos[last] = 0
            self._sift_down(0)
        return v

    def __len__(self):
        return len(self.heap)


class Solver:
    """A CDCL solver over packed literals (var*2, +1 for negative)."""

    def __init__(self, formula=None, config: SolverConfig | None = None, proof=None):
        self.config = config if config is not None else SolverConfig()
        self.proof = proof
        self.stats = SolverStats()
        self.formula = formula

        self.num_vars = 0
        self.num_active = 0
        self.val = bytearray()  # per literal: UNDEF/TRUE/FALSE
        self.var_level = []
        self.var_reason = []
        self.var_pos = []
        self.activity = []
        self.polarity = bytearray()  # negation bit of the saved phase
        self.retired = bytearray()
        self.is_ext = bytearray()
        self.seen = bytearray()
        self.seen_to_clear = []
        self.watches = []

        self.trail = []
        self.trail_lim = []
        self.pending = []  # assigned literals whose watcher lists are unvisited

        self.clauses = []
        self.learnts = []

        self.heap = VarOrderHeap(self.activity)
        self.var_inc = 1.0
        self.cla_inc = 1.0
        self._var_decay_inv = 1.0 / self.config.var_decay
        self._cla_decay_inv = 1.0 / self.config.clause_decay

        self.ok = True
        self._empty_original = False
        self.status = None
        self.model = None

        self._next_reduce = self.config.reduce_first
        self._reduce_count = 0

        dip = self.config.dip
        self.ercl = (
            ErclEngine(self, dip, fallback_seed=self.config.seed)
            if dip.enabled
            else None
        )

        if formula is not None:
            for _ in range(formula.num_vars):
                self.new_var()
            for c in formula.clauses:
                self.add_original_clause(list(c.lits))

    # -- variables and values

    @property
    def decision_level(self) -> int:
        return len(self.trail_lim)

    def new_var(self, is_extension: bool = False) -> int:
        v = self.num_vars
        self.num_vars += 1
        self.num_active += 1
        self.val.extend(b"\x00\x00")
        self.var_level.append(0)
        self.var_reason.append(None)
        self.var_pos.append(0)
        self.activity.append(0.0)
        self.polarity.append(1)  # fresh variables branch false first
        self.retired.append(0)
        self.is_ext.append(1 if is_extension else 0)
        self.seen.append(0)
        self.watches.append([])
        self.watches.append([])
        self.heap.grow(self.num_vars)
        self.heap.insert(v)
        return v

    def retire_var(self, v):
        assert self.val[v << 1] == UNDEF and not self.retired[v]
        self.retired[v] = 1
        self.num_active -= 1

    def value_of(self, lit: int) -> int:
        return self.val[lit]

    def value_of_var(self, v: int) -> int:
        return self.val[v << 1]

    # -- clause database

    def add_original_clause(self, lits) -> None:
        """Insert one input clause; called at level 0 before solving."""
        assert self.decision_level == 0
        if not self.ok:
            return
        c = Clause(lits)
        val = self.val
        if any(val[l] == TRUE for l in c.lits):
            return
        nf = [l for l in c.lits if val[l] != FALSE]
        if not nf:
            self.ok = False
            self._empty_original = len(c.lits) == 0
            return
        if len(nf) == 1:
            self.enqueue(nf[0], None)
            return
        ls = c.lits
        for k, l in enumerate(ls):
            if l == nf[0]:
                ls[0], ls[k] = ls[k], ls[0]
        for k in range(1, len(ls)):
            if ls[k] == nf[1]:
                ls[1], ls[k] = ls[k], ls[1]
        self.attach_clause(c)
        self.clauses.append(c)

    def attach_clause(self, c: Clause) -> None:
        self.watches[c.lits[0]].append(c)
        self.watches[c.lits[1]].append(c)

    def remove_clause(self, c: Clause) -> None:
        """Detach, mark deleted, and log the deletion to the proof."""
        self.watches[c.lits[0]].remove(c)
        self.watches[c.lits[1]].remove(c)
        c.deleted = True
        if self.proof is not None:
            self.proof.emit_delete(c.to_dimacs())

    def locked(self, c: Clause) -> bool:
        v = c.lits[0] >> 1
        return self.var_reason[v] is c and self.val[c.lits[0]] == TRUE

    # -- assignment

    def enqueue(self, lit: int, reason) -> None:
        v = lit >> 1
        assert self.val[lit] == UNDEF
        self.val[lit] = TRUE
        self.val[lit ^ 1] = FALSE
        self.var_level[v] = self.decision_level
        self.var_reason[v] = reason
        self.var_pos[v] = len(self.trail)
        self.trail.append(lit)
        self.pending.append(lit)

    def new_level(self) -> None:
        self.trail_lim.append(len(self.trail))

    def decide(self, lit: int) -> None:
        self.new_level()
        self.enqueue(lit, None)

    def backjump(self, level: int) -> None:
        """Undo the trail above `level`, saving phases."""
        if self.decision_level <= level:
            return
        lim = self.trail_lim[level]
        trail = self.trail
        val = self.val
        heap = self.heap
        for i in range(len(trail) - 1, lim - 1, -1):
            l = trail[i]
            v = l >> 1
            val[l] = UNDEF
            val[l ^ 1] = UNDEF
            self.polarity[v] = l & 1
            self.var_reason[v] = None
            heap.insert(v)
        del trail[lim:]
        del self.trail_lim[level:]
        if self.pending:
            self.pending[:] = [l for l in self.pending if val[l] == TRUE]

    def propagate(self):
        """Run unit propagation to fixpoint; returns a conflict clause or None.

        Pending literals are processed newest first, so implication chains are
        followed depth first. Clause attach order then pins down which clause
        trips each conflict, which the scripted replay tests rely on.
        """
        val = self.val
        pending = self.pending
        watches = self.watches
        nprops = 0
        confl = None
        while pending:
            p = pending.pop()
            nprops += 1
            fl = p ^ 1
            ws = watches[fl]
            i = j = 0
            n = len(ws)
            while i < n:
                c = ws[i]
                i += 1
                cl = c.lits
                if cl[0] == fl:
                    cl[0], cl[1] = cl[1], cl[0]
                first = cl[0]
                if val[first] == TRUE:
                    ws[j] = c
                    j += 1
                    continue
                moved = False
                for k in range(2, len(cl)):
                    o = cl[k]
                    if val[o] != FALSE:
                        cl[1], cl[k] = cl[k], cl[1]
                        watches[o].append(c)
                        moved = True
                        break
                if moved:
                    continue
                ws[j] = c
                j += 1
                if val[first] == FALSE:
                    confl = c
                    while i < n:
                        ws[j] = ws[i]
                        j += 1
                        i += 1
                    break
                self.enqueue(first, c)
            del ws[j:]
            if confl is not None:
                break
        self.stats.propagations += nprops
        return confl

    # -- activities

    def bump_var_activity(self, v):
        act = self.activity
        act[v] += self.var_inc
        if act[v] > VAR_RESCALE:
            for u in range(self.num_vars):
                act[u] *= 1.0 / VAR_RESCALE
            self.var_inc *= 1.0 / VAR_RESCALE
        self.heap.update(v)

    def bump_clause_activity(self, c):
        c.activity += self.cla_inc
        if c.activity > CLA_RESCALE:
            for d in self.learnts:
                d.activity *= 1.0 / CLA_RESCALE
            self.cla_inc *= 1.0 / CLA_RESCALE

    def decay_activities(self):
        self.var_inc *= self._var_decay_inv
        self.cla_inc *= self._cla_decay_inv

    # -- learning

    def add_learnt(self, lits) -> None:
        """Store an asserting lemma (asserting literal first) and backjump."""
        if self.proof is not None:
            self.proof.emit_add([lit_to_dimacs(l) for l in lits])
        if len(lits) == 1:
            self.backjump(0)
            if self.val[lits[0]] == UNDEF:
                self.enqueue(lits[0], None)
            return
        mi = 1
        vlevel = self.var_level
        for k in range(2, len(lits)):
            if vlevel[lits[k] >> 1] > vlevel[lits[mi] >> 1]:
                mi = k
        lits[1], lits[mi] = lits[mi], lits[1]
        c = Clause(lits, learnt=True, lbd=compute_lbd(self, lits))
        self.backjump(vlevel[c.lits[1] >> 1])
        self.attach_clause(c)
        self.learnts.append(c)
        self.enqueue(c.lits[0], c)

    def reduce_db(self):
        """Drop the weaker half of the removable learnt clauses."""
        self._reduce_count += 1
        self._next_reduce += self.config.reduce_first + self.config.reduce_inc * self._reduce_count
        cand = [
            c
            for c in self.learnts
            if not c.deleted and not c.is_def and len(c.lits) > 2 and not self.locked(c)
        ]
        cand.sort(key=lambda c: (-c.lbd, c.activity))
        for c in cand[: len(cand) // 2]:
            self.remove_clause(c)
        self.learnts = [c for c in self.learnts if not c.deleted]

    # -- decisions

    def _script_group(self):
        script = self.config.decision_script
        if script is None or self._script_idx >= len(script):
            return None
        group = script[self._script_idx]
        self._script_idx += 1
        if not group:
            raise ScriptError("empty decision group")
        out = []
        for n in group:
            l = lit_from_dimacs(n)
            if l >> 1 >= self.num_vars:
                raise ScriptError("scripted literal %d out of range" % n)
            if self.val[l] != UNDEF:
                raise ScriptError("scripted literal %d already assigned" % n)
            out.append(l)
        return out

    def _pick_branch(self):
        heap = self.heap
        val = self.val
        while len(heap):
            v = heap.pop()
            if val[v << 1] == UNDEF and not self.retired[v]:
                return (v << 1) | self.polarity[v]
        raise AssertionError("no free variable despite a partial assignment")

    # -- main loop

    def solve(self) -> str:
        cfg = self.config
        st = self.stats
        t0 = time.perf_counter()
        deadline = t0 + cfg.time_limit if cfg.time_limit is not None else None
        self._script_idx = 0
        status = None

        if not self.ok:
            if self.proof is not None and not self._empty_original:
                self.proof.emit_add(())
            status = UNSAT

        restart_idx = 1
        budget = luby(restart_idx) * cfg.luby_base
        since_restart = 0

        while status is None:
            confl = self.propagate()
            if confl is not None:
                st.conflicts += 1
                since_restart += 1
                if self.decision_level == 0:
                    if self.proof is not None:
                        self.proof.emit_add(())
                    status = UNSAT
                    break
                learned = analyze_1uip(self, confl)
                eng = self.ercl
                handled = eng is not None and eng.try_learn(
                    confl, learned.uip_pos, learned.level_vars
                )
                if not handled:
                    lits = learned.lits
                    if eng is not None:
                        lits = eng.rewrite_lemma(lits, learned.lbd)
                    self.add_learnt(lits)
                if eng is not None:
                    eng.check_disable()
                self.decay_activities()
                if st.conflicts >= self._next_reduce:
                    self.reduce_db()
                if eng is not None and eng.deletion_due():
                    self.backjump(0)
                    st.restarts += 1
                    restart_idx += 1
                    budget = luby(restart_idx) * cfg.luby_base
                    since_restart = 0
                    eng.run_deletion()
                if cfg.conflict_limit is not None and st.conflicts >= cfg.conflict_limit:
                    status = UNKNOWN
                    break
                if deadline is not None and st.conflicts % 64 == 0 and time.perf_counter() > deadline:
                    status = UNKNOWN
                    break
            else:
                if since_restart >= budget:
                    restart_idx += 1
                    budget = luby(restart_idx) * cfg.luby_base
                    since_restart = 0
                    st.restarts += 1
                    self.backjump(0)
                    continue
                if len(self.trail) == self.num_active:
                    status = SAT
                    break
                group = self._script_group()
                st.decisions += 1
                if deadline is not None and st.decisions % 256 == 0 and time.perf_counter() > deadline:
                    status = UNKNOWN
                    break
                if group is not None:
                    self.decide(group[0])
                    if self.is_ext[group[0] >> 1]:
                        st.ext_decisions += 1
                    for l in group[1:]:
                        if self.val[l] != UNDEF:
                            raise ScriptError(
                                "scripted literal %d clashes inside its group"
                                % lit_to_dimacs(l)
                            )
                        self.enqueue(l, None)
                else:
                    lit = self._pick_branch()
                    if self.is_ext[lit >> 1]:
                        st.ext_decisions += 1
                    self.decide(lit)

        st.solve_time = time.perf_counter() - t0
        if st.solve_time > 0:
            st.dip_time_fraction = st.dip_time / st.solve_time
        if self.proof is not None:
            st.proof_adds = self.proof.num_adds
        if status == SAT:
            self.model = self._extract_model()
        self.status = status
        return status

    def _extract_model(self):
        """Signed DIMACS assignment of the input variables, verified."""
        out = []
        val = self.val
        for v in range(self.num_vars):
            if self.is_ext[v] or self.retired[v]:
                continue
            assert val[v << 1] != UNDEF
            out.append(v + 1 if val[v << 1] == TRUE else -(v + 1))
        if self.formula is not None:
            assign = set(out)
            for c in self.formula.clauses:
                if not any(d in assign for d in c.to_dimacs()):
                    raise RuntimeError("model fails clause %r" % (c,))
        return out


def solve_formula(formula, config: SolverConfig | None = None, proof=None):
    """One-call convenience: returns (status, model, stats)."""
    s = Solver(formula, config=config, proof=proof)
    status = s.solve()
    return status, s.model, s.stats


__all__ = [
    "SAT",
    "UNSAT",
    "UNKNOWN",
    "UNDEF",
    "TRUE",
    "FALSE",
    "luby",
    "ScriptError",
    "SolverConfig",
    "SolverStats",
    "VarOrderHeap",
    "Solver",
    "solve_formula",
    "extract_top_level_graph",
]
