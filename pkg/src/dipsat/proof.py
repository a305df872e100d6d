"""DRAT proof emission and checking, with extension-variable support.

Proof events use external DIMACS numbering.  Additions must be RUP, except
that a clause whose first literal sits on a variable outside the original
formula may instead be RAT on that literal; that is exactly the shape of an
extension-variable definition block.  The checker doubles as a trimmer: it
records which clauses each addition's propagation touched and prunes,
backward from the empty clause, everything that contributed nothing.
"""

from __future__ import annotations

__all__ = [
    "ProofFormatError",
    "ProofWriter",
    "parse_proof",
    "check_proof",
    "trim_proof",
    "unit_propagate",
]


class ProofFormatError(ValueError):
    """Structurally bad proof line; carries the 0-based event/line position."""

    def __init__(self, message, position=None):
        super().__init__(
            message if position is None else "line %d: %s" % (position + 1, message)
        )
        self.position = position


class ProofWriter:
    """Collects proof events, optionally streaming them as DRAT text."""

    def __init__(self, stream=None):
        self.events = []
        self.stream = stream
        self.num_adds = 0
        self._seen_vars = set()

    def _note(self, lits):
        for n in lits:
            self._seen_vars.add(abs(n))

    def emit_add(self, lits):
        lits = tuple(lits)
        self._note(lits)
        self.events.append(("a", lits))
        self.num_adds += 1
        if self.stream is not None:
            self.stream.write(" ".join(str(n) for n in lits) + " 0\n")

    def emit_delete(self, lits):
        lits = tuple(lits)
        self.events.append(("d", lits))
        if self.stream is not None:
            self.stream.write("d " + " ".join(str(n) for n in lits) + " 0\n")

    def emit_extension(self, z, l1, l2):
        """Introduce z <-> l1 & l2 as three RAT-orderable additions.

        z is a positive DIMACS index and must be fresh: the first line is RAT
        on z only while nothing mentions ¬z, and the binaries are RAT on ¬z.
        """
        if z in self._seen_vars:
            raise ValueError("extension variable %d is not fresh" % z)
        self.emit_add((z, -l1, -l2))
        self.emit_add((-z, l1))
        self.emit_add((-z, l2))


def parse_proof(text):
    """Parse DRAT text into an event list; comments ('c') are skipped."""
    if isinstance(text, (bytes, bytearray)):
        text = text.decode("ascii", errors="replace")
    events = []
    for lineno, raw in enumerate(text.splitlines()):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        kind = "a"
        if line.startswith("d"):
            kind = "d"
            line = line[1:]
        try:
            nums = [int(t) for t in line.split()]
        except ValueError:
            raise ProofFormatError("non-integer token", len(events)) from None
        if not nums or nums[-1] != 0:
            raise ProofFormatError("missing 0 terminator", len(events))
        if any(n == 0 for n in nums[:-1]):
            raise ProofFormatError("literal 0 inside clause", len(events))
        events.append((kind, tuple(nums[:-1])))
    return events


def _to_internal(n):
    v = abs(n) - 1
    return v * 2 + (1 if n < 0 else 0)


class _Checker:
    """Watch-based unit propagation over original plus added clauses.

    Assignments are scratch per query: every check assumes some literals,
    propagates, and rolls back, leaving watch positions wherever they moved
    (any watch pair is valid on an empty assignment).
    """

    def __init__(self, formula, max_extra_var):
        nv = max(formula.num_vars, max_extra_var)
        self.nv = nv
        self.orig_vars = formula.num_vars
        self.val = bytearray(2 * nv)  # val[l] == 1 iff literal l assigned true
        self.watches = [[] for _ in range(2 * nv)]
        self.lits = []  # clause index -> list of internal lits
        self.active = []
        self.src = []  # clause index -> proof event index, -1 for originals
        self.units = []
        self.occs = [[] for _ in range(2 * nv)]
        self.by_key = {}
        self.has_empty = False
        for c in formula.clauses:
            self._add(list(c.lits), -1)

    def _add(self, ls, src):
        ci = len(self.lits)
        self.lits.append(ls)
        self.active.append(True)
        self.src.append(src)
        key = tuple(sorted(ls))
        self.by_key.setdefault(key, []).append(ci)
        for l in ls:
            self.occs[l].append(ci)
        if len(ls) == 0:
            self.has_empty = True
        elif len(ls) == 1:
            self.units.append(ci)
        else:
            self.watches[ls[0]].append(ci)
            self.watches[ls[1]].append(ci)
        return ci

    def _delete(self, ls):
        key = tuple(sorted(ls))
        stack = self.by_key.get(key)
        if not stack:
            return False
        ci = stack.pop()
        self.active[ci] = False
        return True

    def _up_conflict(self, assumps):
        """Assume literals, propagate to fixpoint, roll back.

        Returns (conflicted, used): used is the set of clause indices in the
        conflict cone (empty when the assumptions clash on their own).
        """
        val = self.val
        watches = self.watches
        lits = self.lits
        active = self.active
        trail = []
        vreason = {}
        confl = -1

        def enq(l, why):
            nonlocal confl
            if val[l]:
                return True
            if val[l ^ 1]:
                confl = why
                return False
            val[l] = 1
            vreason[l >> 1] = why
            trail.append(l)
            return True

        ok = True
        for l in assumps:
            if not enq(l, -1):
                ok = False
                break
        if ok:
            for ci in self.units:
                if active[ci] and not enq(lits[ci][0], ci):
                    ok = False
                    break
        qi = 0
        while ok and qi < len(trail):
            fl = trail[qi] ^ 1  # literal now false
            qi += 1
            ws = watches[fl]
            i = j = 0
            n = len(ws)
            while i < n:
                ci = ws[i]
                i += 1
                if not active[ci]:
                    continue  # drop stale watch entry
                cl = lits[ci]
                if cl[0] == fl:
                    cl[0], cl[1] = cl[1], cl[0]
                first = cl[0]
                if val[first]:
                    ws[j] = ci
                    j += 1
                    continue
                moved = False
                for k in range(2, len(cl)):
                    other = cl[k]
                    if not val[other ^ 1]:
                        cl[1], cl[k] = cl[k], cl[1]
                        watches[other].append(ci)
                        moved = True
                        break
                if moved:
                    continue
                ws[j] = ci
                j += 1
                if not enq(first, ci):
                    ok = False
                    while i < n:  # keep the untraversed tail
                        ws[j] = ws[i]
                        j += 1
                        i += 1
                    break
            del ws[j:]

        used = set()
        if confl >= 0:
            used.add(confl)
            seenv = set()
            stack = [q >> 1 for q in lits[confl]]
            while stack:
                v = stack.pop()
                if v in seenv:
                    continue
                seenv.add(v)
                r = vreason.get(v, -1)
                if r >= 0:
                    used.add(r)
                    stack.extend(q >> 1 for q in lits[r])
        for l in trail:
            val[l] = 0
        return (not ok), used

    def add_event(self, ls, src):
        return self._add(ls, src)


def _run(formula, events, want_cones):
    """Drive the checker over the events.

    Returns (accepted, cones, checker) where cones maps event index to the
    set of event indices its derivation depended on (-1 entries dropped).
    """
    max_var = 0
    for _, ls in events:
        for n in ls:
            if abs(n) > max_var:
                max_var = abs(n)
    ck = _Checker(formula, max_var)
    cones = {}
    for ei, (kind, ext) in enumerate(events):
        ls = []
        for n in ext:
            l = _to_internal(n)
            if l not in ls:
                ls.append(l)
        if kind == "d":
            if not ck._delete(ls):
                return False, cones, ck
            continue
        conflicted, used = ck._up_conflict([l ^ 1 for l in ls])
        if not conflicted:
            ok, used = _rat_check(ck, ls, want_cones)
            if not ok:
                return False, cones, ck
        if want_cones:
            cones[ei] = {ck.src[ci] for ci in used if ck.src[ci] >= 0}
        ck.add_event(ls, ei)
        if not ls:
            ck.has_empty = True
            break
    return True, cones, ck


def _rat_check(ck, ls, want_cones):
    """RAT on the first literal, allowed only on non-original variables."""
    if not ls:
        return False, set()
    p = ls[0]
    if (p >> 1) < ck.orig_vars:
        return False, set()
    used_all = set()
    base = [l ^ 1 for l in ls]
    for ci in ck.occs[p ^ 1]:
        if not ck.active[ci]:
            continue
        # Tautological resolvents conflict on the assumptions themselves,
        # so no special-casing is needed.
        assumps = list(base)
        for q in ck.lits[ci]:
            if q != p ^ 1:
                assumps.append(q ^ 1)
        conflicted, used = ck._up_conflict(assumps)
        if not conflicted:
            return False, set()
        if want_cones:
            used_all |= used
            used_all.add(ci)
    return True, used_all


def check_proof(formula, proof) -> bool:
    """Validate a DRAT proof against the formula.

    Accepts an event list or proof text.  True iff every addition checks out
    (RUP, or RAT on a fresh-variable first literal), every deletion matches
    a live clause, and the empty clause is derived.
    """
    events = parse_proof(proof) if isinstance(proof, (str, bytes)) else list(proof)
    ok, _, ck = _run(formula, events, want_cones=False)
    return ok and ck.has_empty


def trim_proof(formula, proof):
    """Prune additions the empty clause never depended on.

    Runs the checker with cone recording, then marks backward from the empty
    clause.  Deletions are dropped; surviving additions keep their order.
    The input must be an accepted UNSAT proof.
    """
    events = parse_proof(proof) if isinstance(proof, (str, bytes)) else list(proof)
    ok, cones, ck = _run(formula, events, want_cones=True)
    if not ok or not ck.has_empty:
        raise ValueError("trim_proof requires an accepted UNSAT proof")
    empty_idx = None
    for ei, (kind, ls) in enumerate(events):
        if kind == "a" and not ls:
            empty_idx = ei
            break
    needed = {empty_idx}
    for ei in range(empty_idx, -1, -1):
        if ei in needed:
            needed |= cones.get(ei, set())
    return [events[ei] for ei in sorted(needed) if events[ei][0] == "a"]


def unit_propagate(clauses, assumps):
    """Tiny standalone UP over internal-literal clause lists.

    Returns (conflicted, assigned literal set).  Quadratic and only meant
    for witness replays in tests.
    """
    assigned = set(assumps)
    for l in assumps:
        if l ^ 1 in assigned:
            return True, assigned
    changed = True
    while changed:
        changed = False
        for cl in clauses:
            unknown = None
            nfree = 0
            sat = False
            for q in cl:
                if q in assigned:
                    sat = True
                    break
                if q ^ 1 not in assigned:
                    nfree += 1
                    unknown = q
            if sat:
                continue
            if nfree == 0:
                return True, assigned
            if nfree == 1:
                assigned.add(unknown)
                changed = True
    return False, assigned
