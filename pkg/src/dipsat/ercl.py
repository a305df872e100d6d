"""Clause learning over dual implication points (DIPs).

A DIP is a pair of current-level literals that together cut every path from
the first UIP to the conflict in the top-level conflict graph.  For a chosen
pair (a, b) we define a fresh variable z <-> a & b and learn a post-DIP
clause ~z | ~D (the conflict side) plus, in two-clause mode, a pre-DIP
clause ~f | ~C | z (the UIP side).  This module holds the DIP selection
strategies and filters, the definition store, and the lifecycle: replacing
definition pairs inside later lemmas, deleting unused definitions, and the
monitor that switches the whole thing off when it pulls no weight.
"""

from __future__ import annotations

import random
import time
from bisect import bisect_left
from collections import deque
from dataclasses import dataclass

from .analyze import extract_top_level_graph, lbd_estimate
from .formula import FALSE, TRUE, UNDEF, Clause, lit_to_dimacs
from .tvd import enumerate_tvds

PROCEED = "proceed"
FALLBACK = "fallback"

CHOICES = ("closest", "middle", "random", "heuristic", "first")
FILTERS = ("occ", "glue", "act")


@dataclass
class DipConfig:
    """Knobs for DIP learning; defaults follow the shipped baseline."""

    enabled: bool = True
    choice: str = "middle"
    min_occ: int = 20
    clauses: int = 2
    filter: str = "occ"
    ext_delete_interval: int = 1000
    ext_delete_fraction: int = 50
    disable_window: int = 100000
    disable_threshold: float = 3.0
    replace_max_len: int = 30
    replace_max_lbd: int = 6
    seed: int | None = None

    def __post_init__(self):
        if self.choice not in CHOICES:
            raise ValueError("unknown DIP choice %r" % (self.choice,))
        if self.filter not in FILTERS:
            raise ValueError("unknown DIP filter %r" % (self.filter,))
        if self.clauses not in (1, 2):
            raise ValueError("clauses must be 1 or 2")
        if self.min_occ < 1:
            raise ValueError("min_occ must be positive")
        if self.ext_delete_interval < 1 or self.disable_window < 1:
            raise ValueError("intervals must be positive")
        if not 0 < self.ext_delete_fraction <= 100:
            raise ValueError("ext_delete_fraction must be in (0, 100]")
        if self.disable_threshold <= 0:
            raise ValueError("disable_threshold must be positive")


class ExtDef:
    """One extension definition z <-> l1 & l2 and its three clauses."""

    __slots__ = ("z", "l1", "l2", "clauses")

    def __init__(self, z, l1, l2, clauses):
        self.z = z
        self.l1 = l1
        self.l2 = l2
        self.clauses = clauses


class ExtDefStore:
    """Live extension definitions, indexed by variable, pair, and literal.

    participation[v] counts the live definitions whose right-hand side
    mentions variable v; a definition variable with a nonzero count is
    load-bearing and must not be deleted.
    """

    def __init__(self):
        self.by_var = {}
        self.by_pair = {}
        self.by_lit = {}
        self.participation = {}

    def __len__(self):
        return len(self.by_var)

    def lookup(self, l1, l2):
        key = (l1, l2) if l1 < l2 else (l2, l1)
        return self.by_pair.get(key)

    def add(self, z, l1, l2, clauses):
        if l1 > l2:
            l1, l2 = l2, l1
        assert z not in self.by_var and (l1, l2) not in self.by_pair
        d = ExtDef(z, l1, l2, clauses)
        self.by_var[z] = d
        self.by_pair[(l1, l2)] = z
        self.by_lit.setdefault(l1, []).append((l2, z))
        self.by_lit.setdefault(l2, []).append((l1, z))
        for v in (l1 >> 1, l2 >> 1):
            self.participation[v] = self.participation.get(v, 0) + 1
        return d

    def remove(self, z) -> ExtDef:
        d = self.by_var.pop(z)
        del self.by_pair[(d.l1, d.l2)]
        self.by_lit[d.l1].remove((d.l2, z))
        self.by_lit[d.l2].remove((d.l1, z))
        for v in (d.l1 >> 1, d.l2 >> 1):
            n = self.participation[v] - 1
            if n:
                self.participation[v] = n
            else:
                del self.participation[v]
        return d

    def audit_participation(self):
        """Recount participation from scratch (consistency checks)."""
        out = {}
        for d in self.by_var.values():
            for v in (d.l1 >> 1, d.l2 >> 1):
                out[v] = out.get(v, 0) + 1
        return out


class DipOccurrenceTable:
    """How often each canonical literal pair has shown up as the chosen DIP.

    Counts only grow; there is no reset, so a pair keeps its history across
    restarts and deletions of unrelated variables.
    """

    __slots__ = ("counts",)

    def __init__(self):
        self.counts = {}

    def bump(self, key) -> int:
        n = self.counts.get(key, 0) + 1
        self.counts[key] = n
        return n

    def count(self, key) -> int:
        return self.counts.get(key, 0)


class DipAnalysis:
    """Everything needed to build the pre- and post-DIP clauses.

    c_side holds the earlier-level side inputs feeding the graph between the
    first UIP f and the pair inclusive; d_side those feeding the rest of the
    way to the conflict.  l_c and l_d are their maximum decision levels.
    """

    __slots__ = ("f", "a", "b", "z", "c_side", "d_side", "l_c", "l_d")

    def __init__(self, f, a, b, z, c_side, d_side, l_c, l_d):
        self.f = f
        self.a = a
        self.b = b
        self.z = z
        self.c_side = c_side
        self.d_side = d_side
        self.l_c = l_c
        self.l_d = l_d


def _closest_key(tp, a, b):
    ta, tb = tp[a], tp[b]
    return (ta + tb, ta if ta > tb else tb, tb if ta > tb else ta)


def select_dip(tvds, problem, cfg, activity=None, rng=None):
    """Pick one DIP from the compressed enumeration; returns node ids (a, b).

    closest maximizes combined trail position (nearest the conflict); middle
    aims at the midpoint of the attainable combined positions, ties going to
    the closest; random is uniform over all pairs without expanding them;
    heuristic maximizes summed variable activity, ties again to the closest.
    first (tests only) takes the first enumerated pair as-is.
    """
    tp = problem.trail_pos
    rows = tvds.rows
    bn = tvds.b_nodes
    if cfg.choice == "first":
        a, lo, _hi = rows[0]
        return a, bn[lo]

    if cfg.choice == "random":
        k = rng.randrange(tvds.total)
        for a, lo, hi in rows:
            w = hi - lo + 1
            if k < w:
                return a, bn[lo + k]
            k -= w
        raise AssertionError("row weights disagree with the total")

    if cfg.choice == "closest":
        # positions grow with node id, so each row peaks at hi
        best = max(rows, key=lambda r: _closest_key(tp, r[0], bn[r[2]]))
        return best[0], bn[best[2]]

    if cfg.choice == "middle":
        tpb = [tp[b] for b in bn]
        minc = min(tp[a] + tpb[lo] for a, lo, _ in rows)
        maxc = max(tp[a] + tpb[hi] for a, _, hi in rows)
        target2 = minc + maxc
        best = None
        for a, lo, hi in rows:
            want = (target2 - 2 * tp[a]) / 2
            j = bisect_left(tpb, want, lo, hi + 1)
            for jj in (j - 1, j):
                if lo <= jj <= hi:
                    diff = abs(2 * (tp[a] + tpb[jj]) - target2)
                    key = (-diff,) + _closest_key(tp, a, bn[jj])
                    if best is None or key > best[0]:
                        best = (key, a, bn[jj])
        return best[1], best[2]

    # heuristic: summed activity, via a max-deque over the sliding windows
    # (row windows [lo, hi] move monotonically in both ends)
    def bkey(j):
        b = bn[j]
        return (activity[problem.lits[b] >> 1], tp[b])

    dq = deque()
    nxt = rows[0][1]
    best = None
    for a, lo, hi in rows:
        while dq and dq[0] < lo:
            dq.popleft()
        if nxt < lo:
            # A b candidate that no window covers must never enter the deque.
            nxt = lo
        while nxt <= hi:
            while dq and bkey(dq[-1]) <= bkey(nxt):
                dq.pop()
            dq.append(nxt)
            nxt += 1
        j = dq[0]
        b = bn[j]
        s = activity[problem.lits[a] >> 1] + activity[problem.lits[b] >> 1]
        key = (s,) + _closest_key(tp, a, b)
        if best is None or key > best[0]:
            best = (key, a, b)
    return best[1], best[2]


def analyze_dip(solver, problem, ia, ib) -> DipAnalysis:
    """Split the conflict graph's side inputs around the pair (ia, ib).

    C collects the side inputs of every node from just after the UIP up to
    the later pair node in trail order.  D collects those of the nodes that
    still reach the conflict once the pair is removed: exactly the part the
    pair no longer shields.  The two may overlap.
    """
    vlevel = solver.var_level
    side = problem.side_inputs
    n = problem.n
    cset = set()
    for k in range(1, (ia if ia > ib else ib) + 1):
        cset.update(side[k])

    preds = [[] for _ in range(n)]
    for u, vs in enumerate(problem.succs):
        for v in vs:
            preds[v].append(u)
    mark = bytearray(n)
    mark[n - 1] = 1
    stack = [n - 1]
    while stack:
        for u in preds[stack.pop()]:
            if not mark[u] and u != ia and u != ib:
                mark[u] = 1
                stack.append(u)
    assert not mark[0], "pair does not cut the conflict graph"
    dset = set()
    for k in range(1, n):
        if mark[k]:
            dset.update(side[k])

    return DipAnalysis(
        problem.lits[0],
        problem.lits[ia],
        problem.lits[ib],
        None,
        sorted(cset),
        sorted(dset),
        max((vlevel[q >> 1] for q in cset), default=0),
        max((vlevel[q >> 1] for q in dset), default=0),
    )


def build_pre_dip_clause(an: DipAnalysis):
    """~f | ~C | z: asserting f and C propagates the pair, hence z."""
    return [an.f ^ 1] + [q ^ 1 for q in an.c_side] + [an.z << 1]


def build_post_dip_clause(an: DipAnalysis):
    """~z | ~D: the pair plus D propagates straight into the conflict."""
    return [(an.z << 1) | 1] + [q ^ 1 for q in an.d_side]


def handle_predefined_z(solver, z) -> str:
    """Decide what to do when the pair's definition variable already exists.

    Unassigned, or assigned at the conflict level (the backjump will free
    it): proceed.  False at an earlier level: the post-DIP clause cannot
    assert, fall back to plain 1UIP.  True at an earlier level would force
    both pair literals below the conflict level and cannot happen.
    """
    v = solver.value_of_var(z)
    if v == UNDEF or solver.var_level[z] == solver.decision_level:
        return PROCEED
    if v == FALSE:
        return FALLBACK
    raise RuntimeError("extension variable true below the conflict level")


def replace_in_lemma(solver, store, lits, lbd, cfg):
    """Fold definition pairs inside a fresh 1UIP lemma.

    When the lemma contains ~l1 and ~l2 of a stored z <-> l1 & l2, and z is
    true at some earlier level, the two literals collapse to ~z (which is
    false there, keeping the lemma conflicting and asserting).  Runs to a
    fixpoint; long or high-LBD lemmas are left alone.
    """
    if len(lits) > cfg.replace_max_len or lbd > cfg.replace_max_lbd:
        return lits
    by_lit = store.by_lit
    cur = solver.decision_level
    vlevel = solver.var_level
    out = list(lits)
    changed = True
    while changed:
        changed = False
        present = set(out)
        for i in range(1, len(out)):
            p = out[i]
            for partner, z in by_lit.get(p ^ 1, ()):
                q = partner ^ 1
                if q not in present or q == p:
                    continue
                if solver.value_of_var(z) != TRUE or vlevel[z] >= cur:
                    continue
                zl = (z << 1) | 1
                if zl ^ 1 in present:
                    continue
                out = [l for l in out if l != p and l != q]
                if zl not in present:
                    out.append(zl)
                changed = True
                break
            if changed:
                break
    return out


class ErclEngine:
    """Drives DIP learning for one solver instance."""

    def __init__(self, solver, cfg: DipConfig, fallback_seed=0):
        self.solver = solver
        self.cfg = cfg
        self.enabled = cfg.enabled
        self.store = ExtDefStore()
        self.occ = DipOccurrenceTable()
        self.act_window = deque(maxlen=20)
        self.rng = random.Random(cfg.seed if cfg.seed is not None else fallback_seed)
        self.next_delete = cfg.ext_delete_interval
        self._monitor_fired = False

    # -- conflict handling

    def try_learn(self, conflict, uip_pos, level_vars=None) -> bool:
        """Attempt DIP learning for this conflict; True if it took over.

        On success the solver has backjumped to l_D and the new clauses are
        attached, with ~z enqueued (and ~f too when the pre-DIP clause is
        unit there).  On False the caller proceeds with the 1UIP lemma.
        level_vars, when given, is the number of current-level variables in
        the conflict cone; a cone under three of them cannot hold a DIP
        (the pair must sit strictly between the first UIP and the sink), so
        the graph is not even extracted.
        """
        s = self.solver
        if not self.enabled or s.decision_level == 0:
            return False
        if level_vars is not None and level_vars < 3:
            return False
        t0 = time.perf_counter()
        try:
            prob = extract_top_level_graph(s, conflict, uip_pos, level_vars)
            if prob.n <= 3:
                return False
            paths, tvds = enumerate_tvds(prob.n, prob.succs)
            if not tvds:
                return False
            s.stats.conflicts_with_dip += 1
            ia, ib = select_dip(tvds, prob, self.cfg, s.activity, self.rng)
            l1, l2 = prob.lits[ia], prob.lits[ib]
            key = (l1, l2) if l1 < l2 else (l2, l1)
            an = analyze_dip(s, prob, ia, ib) if self.cfg.filter == "glue" else None
            if not self._accept(key, an):
                return False
            if an is None:
                an = analyze_dip(s, prob, ia, ib)
            z = self.store.by_pair.get(key)
            fresh = z is None
            if not fresh:
                if handle_predefined_z(s, z) == FALLBACK:
                    return False
                if (an.f >> 1) == z:
                    # The first UIP is z itself (a pre-DIP clause asserted
                    # it), so the pre clause would be the tautology ~z | z.
                    return False
            if fresh:
                z = s.new_var(is_extension=True)
                defs = [
                    Clause([z << 1, key[0] ^ 1, key[1] ^ 1], learnt=True, is_def=True),
                    Clause([(z << 1) | 1, key[0]], learnt=True, is_def=True),
                    Clause([(z << 1) | 1, key[1]], learnt=True, is_def=True),
                ]
                self.store.add(z, key[0], key[1], defs)
                if s.proof is not None:
                    s.proof.emit_extension(
                        z + 1, lit_to_dimacs(key[0]), lit_to_dimacs(key[1])
                    )
                s.stats.ext_vars_live += 1
            else:
                defs = None
            an.z = z

            post = build_post_dip_clause(an)
            pre = build_pre_dip_clause(an) if self.cfg.clauses == 2 else None
            extra = None
            if not an.d_side:
                extra = [key[0] ^ 1, key[1] ^ 1]
            if s.proof is not None:
                if pre is not None:
                    s.proof.emit_add([lit_to_dimacs(l) for l in pre])
                s.proof.emit_add([lit_to_dimacs(l) for l in post])
                if extra is not None:
                    s.proof.emit_add([lit_to_dimacs(l) for l in extra])

            s.backjump(an.l_d)
            if defs is not None:
                for c in defs:
                    s.attach_clause(c)
                    s.learnts.append(c)
            self._install(post)
            if extra is not None:
                self._install(extra)
            if pre is not None:
                self._install(pre)
            s.stats.dips_introduced += 1
            return True
        finally:
            s.stats.dip_time += time.perf_counter() - t0

    def _accept(self, key, an) -> bool:
        cfg = self.cfg
        if cfg.filter == "occ":
            return self.occ.bump(key) >= cfg.min_occ
        if cfg.filter == "glue":
            vlevel = self.solver.var_level
            return 1 + len({vlevel[q >> 1] for q in an.d_side}) == 2
        act = self.solver.activity
        score = act[key[0] >> 1] + act[key[1] >> 1]
        win = self.act_window
        ok = bool(win) and score > sum(win) / len(win)
        win.append(score)
        return ok

    def _install(self, lits):
        """Attach one DIP-derived clause and enqueue its forced literal.

        Expects the intended asserting literal first.  Picks two non-false
        watches when it can; a clause with a single non-false literal is
        unit here and gets enqueued.
        """
        s = self.solver
        if len(lits) == 1:
            assert s.decision_level == 0
            if s.value_of(lits[0]) == UNDEF:
                s.enqueue(lits[0], None)
            return None
        c = Clause(lits, learnt=True)
        ls = c.lits
        nf = [i for i, l in enumerate(ls) if s.value_of(l) != FALSE]
        if len(nf) >= 2:
            i, j = nf[0], nf[1]
            ls[0], ls[i] = ls[i], ls[0]
            ls[1], ls[j] = ls[j], ls[1]
        else:
            assert nf, "DIP clause arrived fully falsified"
            i = nf[0]
            ls[0], ls[i] = ls[i], ls[0]
            mi = 1
            for j in range(2, len(ls)):
                if s.var_level[ls[j] >> 1] > s.var_level[ls[mi] >> 1]:
                    mi = j
            ls[1], ls[mi] = ls[mi], ls[1]
        c.lbd = lbd_estimate(s, ls)
        s.attach_clause(c)
        s.learnts.append(c)
        if len(nf) == 1 and s.value_of(ls[0]) == UNDEF:
            s.enqueue(ls[0], c)
        return c

    # -- lemma post-processing

    def rewrite_lemma(self, lits, lbd):
        if not self.store.by_var:
            return lits
        return replace_in_lemma(self.solver, self.store, lits, lbd, self.cfg)

    # -- lifecycle

    def deletion_due(self) -> bool:
        return self.solver.stats.conflicts >= self.next_delete

    def run_deletion(self):
        """Drop the weakest half of the deletable definition variables.

        Runs at level 0.  Deletable means unassigned and free of other
        definitions' right-hand sides.  Every clause mentioning a deleted
        variable goes too, from the database and the proof.
        """
        s = self.solver
        assert s.decision_level == 0
        self.next_delete += self.cfg.ext_delete_interval
        s.stats.ext_delete_rounds += 1
        store = self.store
        cand = [
            z
            for z in store.by_var
            if z not in store.participation and s.value_of_var(z) == UNDEF
        ]
        k = len(cand) * self.cfg.ext_delete_fraction // 100
        if not k:
            return 0
        cand.sort(key=lambda z: (s.activity[z], z))
        victims = cand[:k]
        zset = set(victims)
        for z in victims:
            store.remove(z)
        for c in s.learnts:
            if not c.deleted and any(l >> 1 in zset for l in c.lits):
                s.remove_clause(c)
        s.learnts = [c for c in s.learnts if not c.deleted]
        for z in victims:
            s.retire_var(z)
        s.stats.ext_vars_deleted += len(victims)
        s.stats.ext_vars_live -= len(victims)
        dead = [
            kk
            for kk in self.occ.counts
            if kk[0] >> 1 in zset or kk[1] >> 1 in zset
        ]
        for kk in dead:
            del self.occ.counts[kk]
        return len(victims)

    def check_disable(self):
        """One-shot monitor: turn DIP learning off if extensions go unused.

        At the configured conflict count, compares the share of decisions
        taken on extension variables against the threshold; existing
        definitions and clauses stay either way.
        """
        if not self.enabled or self._monitor_fired:
            return
        st = self.solver.stats
        if st.conflicts < self.cfg.disable_window:
            return
        self._monitor_fired = True
        frac = 100.0 * st.ext_decisions / st.decisions if st.decisions else 0.0
        if frac < self.cfg.disable_threshold:
            self.enabled = False
            st.dip_disabled_at = st.conflicts
