"""Two-vertex dominator enumeration in flow DAGs.

A pair of internal vertices {a, b} dominates a DAG with source s and sink t
when every s-t path passes through a or b.  Every such pair has one vertex on
each of two vertex-disjoint s-t paths, so the enumeration first extracts such
a path pair with a tiny max-flow, then kills non-dominating candidates with
prefix-max sweeps over off-path reachability.  Everything runs in O(V + E)
after the flow.

Vertices must be integers 0..n-1 in topological order, with s = 0 and
t = n - 1.  Adjacency lists are sorted ascending, which keeps the extracted
paths (and everything downstream) deterministic.
"""

from __future__ import annotations

__all__ = ["TvdSet", "find_two_disjoint_paths", "find_all_tvds", "enumerate_tvds"]


class TvdSet:
    """All two-vertex dominators of a DAG, row-compressed.

    Each row (a, lo, hi) stands for the pairs {a, b_nodes[k]} for
    lo <= k <= hi.  Rows are sorted by a; b_nodes is sorted; inside a row
    the partner set is contiguous in b_nodes, which is what makes the total
    count, weighted sampling and windowed maxima cheap.
    """

    __slots__ = ("b_nodes", "rows", "total")

    def __init__(self, b_nodes=None, rows=None, total=0):
        self.b_nodes: list[int] = b_nodes if b_nodes is not None else []
        self.rows: list[tuple[int, int, int]] = rows if rows is not None else []
        self.total = total

    def __len__(self) -> int:
        return self.total

    def __bool__(self) -> bool:
        return self.total > 0

    def pairs(self):
        """Yield every (a, b) pair, expanded. For tests and small regions."""
        bn = self.b_nodes
        for a, lo, hi in self.rows:
            for k in range(lo, hi + 1):
                yield a, bn[k]


def find_two_disjoint_paths(n, succs, s=0, t=None):
    """Find two internally vertex-disjoint s-t paths.

    Returns (path_a, path_b) as vertex lists from s to t, or None when the
    graph has no such pair (then some single vertex cuts s from t, or t is
    unreachable).  Runs two augmentations of unit-capacity max-flow on the
    vertex-split graph (vertex v becomes arc 2v -> 2v+1, capacity 1, or 2
    at the endpoints), generating the residual on the fly instead of
    building arc structures.
    """
    if t is None:
        t = n - 1
    # Two paths sharing only the endpoints must leave s through two
    # different edges.
    if len(succs[s]) < 2:
        return None

    # First unit: plain BFS, ascending successors, first parent wins,
    # stopping the moment t is discovered.
    parent = [-1] * n
    parent[s] = s
    q = [s]
    qi = 0
    while qi < len(q) and parent[t] < 0:
        u = q[qi]
        qi += 1
        for w in succs[u]:
            if parent[w] < 0:
                parent[w] = u
                if w == t:
                    break
                q.append(w)
    if parent[t] < 0:
        return None
    nxt = [-1] * n  # flow successor per vertex
    prv = [-1] * n  # flow predecessor per vertex
    v = t
    while v != s:
        u = parent[v]
        nxt[u] = v
        prv[v] = u
        v = u

    # Second unit: BFS over the residual of the split graph.  State 2v is
    # the entry half of v, state 2v + 1 the exit half; the only saturated
    # pieces are the first path's splits and edges.  Neighbor order matches
    # the arc layout: split crossing first, then edges by ascending head.
    src, snk = 2 * s, 2 * t + 1
    par = [-1] * (2 * n)
    par[src] = src
    q2 = [src]
    qi = 0
    while qi < len(q2):
        x = q2[qi]
        qi += 1
        v = x >> 1
        if x & 1:
            # exit half: cross back over a flow-carrying split, or leave
            # along any unsaturated edge
            if (nxt[v] >= 0 or prv[v] >= 0) and par[x - 1] < 0:
                par[x - 1] = x
                q2.append(x - 1)
            skip = nxt[v]
            for w in succs[v]:
                if w == skip:
                    skip = -2
                    continue
                y = 2 * w
                if par[y] < 0:
                    par[y] = x
                    q2.append(y)
        else:
            # entry half: cross the split while it has capacity to spare,
            # or walk the flow edge into v backwards
            if par[x + 1] < 0 and (
                v == s or v == t or (nxt[v] < 0 and prv[v] < 0)
            ):
                par[x + 1] = x
                if x + 1 == snk:
                    break
                q2.append(x + 1)
            u = prv[v]
            if u >= 0:
                y = 2 * u + 1
                if par[y] < 0:
                    par[y] = x
                    q2.append(y)
    if par[snk] < 0:
        return None

    # Fold the augmenting walk into the flow: a forward move adds an edge,
    # a backward move cancels one, split crossings change nothing.  The
    # walk leaves s exactly once and cannot cancel s's first edge, so s
    # ends up with two flow edges and every interior vertex with one.
    walk = []
    x = snk
    while x != src:
        walk.append(x)
        x = par[x]
    walk.append(src)
    walk.reverse()
    extra = -1
    for i in range(1, len(walk)):
        a, b = walk[i - 1], walk[i]
        if a ^ b == 1:
            continue
        if a & 1:
            u, w = a >> 1, b >> 1
            if u == s:
                extra = w
            else:
                nxt[u] = w
        else:
            nxt[b >> 1] = -1

    # Deterministic decomposition: pointer chases from s's two flow edges,
    # smaller head first, mirroring flow-arc adjacency order.
    a = nxt[s]
    b = extra
    if b < a:
        a, b = b, a
    path_a = [s, a]
    while a != t:
        a = nxt[a]
        path_a.append(a)
    path_b = [s, b]
    while b != t:
        b = nxt[b]
        path_b.append(b)
    return path_a, path_b


def find_all_tvds(n, succs, path_a, path_b) -> TvdSet:
    """Enumerate every two-vertex dominator pair given two disjoint paths.

    A candidate pair takes one internal vertex from each path.  {a_i, b_j}
    fails exactly when some s-t path dodges both, and any such path yields
    one of four simpler witnesses: a detour rejoining the same path beyond
    the candidate (bypass), or a switch from before the candidate on one
    path to beyond it on the other (crossing).  All four reduce to prefix
    maxima of per-position reach arrays, and the surviving partner set of
    each a_i is a contiguous, monotone b-interval, found with two pointers.
    """
    pa, pb = len(path_a), len(path_b)
    if pa < 3 or pb < 3:
        return TvdSet()
    apos = [-1] * n
    bpos = [-1] * n
    for idx, v in enumerate(path_a):
        apos[v] = idx
    for idx, v in enumerate(path_b):
        bpos[v] = idx

    # Best path position reachable from each off-path vertex through
    # off-path vertices only.  Reverse topological order.
    far_a = [-1] * n
    far_b = [-1] * n
    for v in range(n - 1, -1, -1):
        if apos[v] >= 0 or bpos[v] >= 0:
            continue
        best_a = best_b = -1
        for w in succs[v]:
            aw, bw = apos[w], bpos[w]
            if aw >= 0:
                if aw > best_a:
                    best_a = aw
            if bw >= 0:
                if bw > best_b:
                    best_b = bw
            if aw < 0 and bw < 0:
                if far_a[w] > best_a:
                    best_a = far_a[w]
                if far_b[w] > best_b:
                    best_b = far_b[w]
        far_a[v] = best_a
        far_b[v] = best_b

    # Reach arrays: from path position m, the furthest position on either
    # path reachable by leaving the path with one edge (possibly rejoining
    # immediately, so a skip edge counts).
    a_to_a = [-1] * pa
    a_to_b = [-1] * pa
    for m in range(pa - 1):
        best_a = best_b = -1
        for w in succs[path_a[m]]:
            aw, bw = apos[w], bpos[w]
            if aw >= 0:
                if aw > best_a:
                    best_a = aw
            if bw >= 0:
                if bw > best_b:
                    best_b = bw
            if aw < 0 and bw < 0:
                if far_a[w] > best_a:
                    best_a = far_a[w]
                if far_b[w] > best_b:
                    best_b = far_b[w]
        a_to_a[m] = best_a
        a_to_b[m] = best_b
    # Prefix sweep.  a_i is bypassed when a detour from before i rejoins
    # path_a beyond i; cross_ab[i] is the highest path_b position reachable
    # from path_a before i, so partners below it are dodged.
    a_cand = []
    cross_ab = [-1] * pa
    run_aa = run_ab = -1
    for i in range(1, pa - 1):
        if a_to_a[i - 1] > run_aa:
            run_aa = a_to_a[i - 1]
        if a_to_b[i - 1] > run_ab:
            run_ab = a_to_b[i - 1]
        cross_ab[i] = run_ab
        if run_aa <= i:
            a_cand.append(i)
    if not a_cand:
        return TvdSet()

    b_to_b = [-1] * pb
    b_to_a = [-1] * pb
    for m in range(pb - 1):
        best_a = best_b = -1
        for w in succs[path_b[m]]:
            aw, bw = apos[w], bpos[w]
            if aw >= 0:
                if aw > best_a:
                    best_a = aw
            if bw >= 0:
                if bw > best_b:
                    best_b = bw
            if aw < 0 and bw < 0:
                if far_a[w] > best_a:
                    best_a = far_a[w]
                if far_b[w] > best_b:
                    best_b = far_b[w]
        b_to_b[m] = best_b
        b_to_a[m] = best_a

    # Same sweep on path_b.
    b_cand = []
    cross_ba = [-1] * pb
    run_bb = run_ba = -1
    for j in range(1, pb - 1):
        if b_to_b[j - 1] > run_bb:
            run_bb = b_to_b[j - 1]
        if b_to_a[j - 1] > run_ba:
            run_ba = b_to_a[j - 1]
        cross_ba[j] = run_ba
        if run_bb <= j:
            b_cand.append(j)

    # {a_i, b_j} survives iff j >= cross_ab[i] and i >= cross_ba[j].  Both
    # bounds are nondecreasing, so each row is a b_cand slice and the slice
    # endpoints only move forward.
    b_nodes = [path_b[j] for j in b_cand]
    rows = []
    total = 0
    lo, hi = 0, -1
    nb = len(b_cand)
    for i in a_cand:
        while hi + 1 < nb and cross_ba[b_cand[hi + 1]] <= i:
            hi += 1
        while lo < nb and b_cand[lo] < cross_ab[i]:
            lo += 1
        if lo <= hi:
            rows.append((path_a[i], lo, hi))
            total += hi - lo + 1
    return TvdSet(b_nodes, rows, total)


def enumerate_tvds(n, succs):
    """Disjoint-path search plus enumeration in one call.

    Returns (paths, TvdSet); paths is None and the set empty when the graph
    has no two disjoint s-t paths.
    """
    paths = find_two_disjoint_paths(n, succs)
    if paths is None:
        return None, TvdSet()
    return paths, find_all_tvds(n, succs, paths[0], paths[1])
