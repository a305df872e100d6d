"""DIP learning: selection, filters, clause construction, lifecycle."""

import random

import pytest
from conftest import EX_CHAIN, EX_CHAIN_SCRIPT, EX_DIAMOND
from oracles import resolve_to_width

from dipsat.analyze import analyze_1uip, extract_top_level_graph
from dipsat.ercl import (
    FALLBACK,
    PROCEED,
    DipConfig,
    DipOccurrenceTable,
    ErclEngine,
    ExtDefStore,
    analyze_dip,
    build_post_dip_clause,
    build_pre_dip_clause,
    handle_predefined_z,
    replace_in_lemma,
    select_dip,
)
from dipsat.formula import lit_from_dimacs, lit_to_dimacs, parse_dimacs
from dipsat.gen import gen_tseitin_grid, gen_tseitin_regular
from dipsat.proof import ProofWriter, check_proof, unit_propagate
from dipsat.search import UNSAT, Solver, SolverConfig
from dipsat.tvd import enumerate_tvds

# Expected C/D split of the implication-chain example, one row per dominator
# pair: {pair} -> (pre clause, post clause) in DIMACS, z printed as 20.
CHAIN_ROWS = {
    frozenset((8, -9)): (
        {-5, 14, -16, -17, 20},
        {-20, -17, -18, 19},
    ),
    frozenset((11, -9)): (
        {-5, 14, -16, -17, -18, 19, 20},
        {-20, -17},
    ),
    frozenset((11, -10)): (
        {-5, 14, -16, -17, -18, 19, 20},
        {-20},
    ),
    frozenset((11, 13)): (
        {-5, 14, -16, -17, -18, 19, 20},
        {-20},
    ),
    frozenset((-12, 13)): (
        {-5, 14, -16, -17, -18, 19, 20},
        {-20},
    ),
}


def driven(formula, groups, proof=None, config=None):
    if config is None:
        config = SolverConfig(dip=DipConfig(enabled=False))
    s = Solver(formula, config, proof=proof)
    confl = None
    for group in groups:
        s.new_level()
        for ext in group:
            s.enqueue(lit_from_dimacs(ext), None)
        confl = s.propagate()
        if confl is not None:
            break
    assert confl is not None
    return s, confl


def chain_state(proof=None):
    s, confl = driven(parse_dimacs(EX_CHAIN), EX_CHAIN_SCRIPT, proof=proof)
    learned = analyze_1uip(s, confl)
    prob = extract_top_level_graph(s, confl, learned.uip_pos)
    _, tvds = enumerate_tvds(prob.n, prob.succs)
    return s, confl, learned, prob, tvds


def pair_dimacs(prob, ia, ib):
    return frozenset((lit_to_dimacs(prob.lits[ia]), lit_to_dimacs(prob.lits[ib])))


def diamond_staged_state():
    """Diamond conflict with the legal trail where x5 lands after x6, x7."""
    s = Solver(parse_dimacs(EX_DIAMOND), SolverConfig(dip=DipConfig(enabled=False)))
    by_set = {frozenset(c.to_dimacs()): c for c in s.clauses}

    def reason(d, why):
        # Reorient so the propagated literal is first, as propagate() would.
        c = by_set[frozenset(why)]
        i = c.lits.index(lit_from_dimacs(d))
        c.lits[0], c.lits[i] = c.lits[i], c.lits[0]
        return c

    s.new_level()
    s.enqueue(lit_from_dimacs(1), None)
    for d, why in (
        (2, (-1, 2)),
        (3, (-1, 3)),
        (4, (-1, 4)),
        (6, (-2, 6)),
        (7, (-2, 7)),
        (5, (-3, -4, 5)),
    ):
        s.enqueue(lit_from_dimacs(d), reason(d, why))
    return s, by_set[frozenset((-5, -6, -7))]


# -- configuration


def test_config_validation():
    DipConfig()
    for kw in (
        {"choice": "best"},
        {"filter": "lbd"},
        {"clauses": 3},
        {"min_occ": 0},
        {"ext_delete_interval": 0},
        {"ext_delete_fraction": 0},
        {"ext_delete_fraction": 101},
        {"disable_window": 0},
        {"disable_threshold": 0.0},
    ):
        with pytest.raises(ValueError):
            DipConfig(**kw)


# -- small pieces


def test_occurrence_table():
    t = DipOccurrenceTable()
    key = (4, 9)
    assert t.count(key) == 0
    assert t.bump(key) == 1
    assert t.bump(key) == 2
    assert t.count(key) == 2
    assert t.count((2, 3)) == 0


def test_ext_def_store():
    st = ExtDefStore()
    d = st.add(10, 4, 9, ())
    st.add(11, 4, 13, ())
    assert len(st) == 2
    assert st.lookup(4, 9) == 10
    assert st.lookup(9, 4) == 10
    assert st.participation == {2: 2, 4: 1, 6: 1}
    assert st.audit_participation() == st.participation
    assert st.remove(10) is d
    assert st.lookup(4, 9) is None
    assert st.participation == {2: 1, 6: 1}
    assert st.audit_participation() == st.participation


def test_handle_predefined_z():
    s = Solver()
    z = s.new_var(is_extension=True)
    assert handle_predefined_z(s, z) == PROCEED
    s.new_level()
    s.enqueue((z << 1) | 1, None)
    assert handle_predefined_z(s, z) == PROCEED
    s.new_level()
    assert handle_predefined_z(s, z) == FALLBACK
    s.backjump(0)
    s.new_level()
    s.enqueue(z << 1, None)
    s.new_level()
    with pytest.raises(RuntimeError):
        handle_predefined_z(s, z)


# -- pair selection


def test_select_closest():
    s, _, _, prob, tvds = chain_state()
    ia, ib = select_dip(tvds, prob, DipConfig(choice="closest"))
    assert pair_dimacs(prob, ia, ib) == frozenset((-12, 13))


def test_select_middle():
    s, _, _, prob, tvds = chain_state()
    ia, ib = select_dip(tvds, prob, DipConfig(choice="middle"))
    assert pair_dimacs(prob, ia, ib) == frozenset((-10, 11))


def test_select_first_and_random_stay_inside_the_set():
    s, _, _, prob, tvds = chain_state()
    all_pairs = {pair_dimacs(prob, a, b) for a, b in tvds.pairs()}
    ia, ib = select_dip(tvds, prob, DipConfig(choice="first"))
    assert pair_dimacs(prob, ia, ib) in all_pairs
    seen = set()
    for seed in range(30):
        pick = select_dip(
            tvds, prob, DipConfig(choice="random"), rng=random.Random(seed)
        )
        again = select_dip(
            tvds, prob, DipConfig(choice="random"), rng=random.Random(seed)
        )
        assert pick == again
        seen.add(pair_dimacs(prob, *pick))
    assert seen <= all_pairs
    assert len(seen) >= 2


def test_select_heuristic_follows_activity():
    s, _, _, prob, tvds = chain_state()
    for v in range(len(s.activity)):
        s.activity[v] = 0.0
    # Equal activity everywhere: ties resolve toward the conflict.
    ia, ib = select_dip(tvds, prob, DipConfig(choice="heuristic"), s.activity)
    assert pair_dimacs(prob, ia, ib) == frozenset((-12, 13))
    # Boosting x9 restricts the winners to its pairs; the trail tie-break
    # then prefers the partner nearer the conflict.
    s.activity[8] = 100.0
    ia, ib = select_dip(tvds, prob, DipConfig(choice="heuristic"), s.activity)
    assert pair_dimacs(prob, ia, ib) == frozenset((-9, 11))


def test_select_heuristic_ignores_uncovered_candidates():
    # Node 3 survives the b-side sweeps but pairs with nothing, so it sits
    # in b_nodes between two row windows.  Boosting its activity must not
    # drag it into the chosen pair (found by a random 3-CNF sweep).
    succs = [[1, 2], [4], [3, 4, 5], [8], [5, 6], [7, 8], [7], [9], [9], []]
    _, tvds = enumerate_tvds(10, succs)
    legal = set(tvds.pairs())
    assert (7, 3) not in legal and 3 in tvds.b_nodes
    prob = TvdProblem(
        10,
        succs,
        [v << 1 for v in range(10)],
        [[] for _ in range(10)],
        list(range(10)),
    )
    activity = [0.0] * 10
    activity[3] = 5.0
    pick = select_dip(tvds, prob, DipConfig(choice="heuristic"), activity)
    assert pick in legal


# -- C/D analysis and the derived clauses


def test_chain_rows():
    s, _, _, prob, tvds = chain_state()
    seen = {}
    for ia, ib in tvds.pairs():
        an = analyze_dip(s, prob, ia, ib)
        an.z = 19
        pre = {lit_to_dimacs(l) for l in build_pre_dip_clause(an)}
        post = {lit_to_dimacs(l) for l in build_post_dip_clause(an)}
        seen[pair_dimacs(prob, ia, ib)] = (pre, post)
        want_ld = max(
            (s.var_level[q >> 1] for q in an.d_side), default=0
        )
        assert an.l_d == want_ld
        assert all(s.value_of(q) == 1 for q in an.c_side + an.d_side)
    assert seen == CHAIN_ROWS


def test_chain_clauses_are_rup():
    s, _, _, prob, tvds = chain_state()
    base = [list(c.lits) for c in s.formula.clauses]
    for ia, ib in tvds.pairs():
        an = analyze_dip(s, prob, ia, ib)
        an.z = 19
        l1, l2 = sorted((an.a, an.b))
        defs = [
            [an.z << 1, l1 ^ 1, l2 ^ 1],
            [(an.z << 1) | 1, l1],
            [(an.z << 1) | 1, l2],
        ]
        cls = base + defs
        conflicted, _ = unit_propagate(
            cls, [l ^ 1 for l in build_pre_dip_clause(an)]
        )
        assert conflicted
        conflicted, _ = unit_propagate(
            cls, [l ^ 1 for l in build_post_dip_clause(an)]
        )
        assert conflicted
        if not an.d_side:
            conflicted, _ = unit_propagate(cls, [an.a, an.b])
            assert conflicted


def test_pre_side_propagates_the_pair():
    # For the pair whose D side is not inside C, asserting the UIP plus C
    # drives propagation through both pair literals and on to z, with no
    # conflict.
    s, _, _, prob, tvds = chain_state()
    target = frozenset((8, -9))
    ia, ib = next(
        p for p in tvds.pairs() if pair_dimacs(prob, *p) == target
    )
    an = analyze_dip(s, prob, ia, ib)
    an.z = 19
    l1, l2 = sorted((an.a, an.b))
    cls = [list(c.lits) for c in s.formula.clauses] + [
        [an.z << 1, l1 ^ 1, l2 ^ 1],
        [(an.z << 1) | 1, l1],
        [(an.z << 1) | 1, l2],
    ]
    conflicted, assigned = unit_propagate(cls, [an.f] + an.c_side)
    assert not conflicted
    assert an.a in assigned and an.b in assigned
    assert (an.z << 1) in assigned


def test_two_literal_stop_misses_the_unique_pair():
    # Stopping resolution at two current-level literals is order dependent.
    # On the staged trail the first two-literal clause reached is {~x1, ~x2},
    # which contains the first UIP and is no cut, while pair enumeration on
    # the same state still finds the sole dominator pair {x2, x5}.
    s, confl = diamond_staged_state()
    got = {lit_to_dimacs(l) for l in resolve_to_width(s, confl, 2)}
    assert got == {-1, -2}
    assert {lit_to_dimacs(l) for l in resolve_to_width(s, confl, 1)} == {-1}
    learned = analyze_1uip(s, confl)
    assert [lit_to_dimacs(l) for l in learned.lits] == [-1]
    prob = extract_top_level_graph(s, confl, learned.uip_pos)
    _, tvds = enumerate_tvds(prob.n, prob.succs)
    pairs = {pair_dimacs(prob, a, b) for a, b in tvds.pairs()}
    assert pairs == {frozenset((2, 5))}
    assert {-d for d in got} not in pairs


# -- acceptance filters


def test_occ_filter_threshold():
    s, _, _, prob, tvds = chain_state()
    eng = ErclEngine(s, DipConfig(filter="occ", min_occ=2))
    ia, ib = next(iter(tvds.pairs()))
    an = analyze_dip(s, prob, ia, ib)
    key = tuple(sorted((prob.lits[ia], prob.lits[ib])))
    assert not eng._accept(key, an)
    assert eng._accept(key, an)
    assert eng.occ.count(key) == 2


def test_glue_filter_wants_two_levels():
    s, _, _, prob, tvds = chain_state()
    eng = ErclEngine(s, DipConfig(filter="glue", min_occ=1))
    results = {}
    for ia, ib in tvds.pairs():
        an = analyze_dip(s, prob, ia, ib)
        results[pair_dimacs(prob, ia, ib)] = eng._accept((0, 2), an)
    # One D level plus the asserting level: accepted.  Two D levels, or an
    # empty D, fall outside glue 2.
    assert results[frozenset((11, -9))]
    assert not results[frozenset((8, -9))]
    assert not results[frozenset((11, 13))]


def test_act_filter_compares_to_window_mean():
    s, _, _, prob, tvds = chain_state()
    eng = ErclEngine(s, DipConfig(filter="act", min_occ=1))
    ia, ib = next(iter(tvds.pairs()))
    an = analyze_dip(s, prob, ia, ib)
    # The filter scores the key's own variables, 0 and 1 here.
    for v in range(len(s.activity)):
        s.activity[v] = 0.0
    s.activity[0] = s.activity[1] = 1.0
    assert not eng._accept((0, 2), an)  # empty window rejects, records 2
    s.activity[0] = s.activity[1] = 2.5
    assert eng._accept((0, 2), an)  # 5 > mean(2)
    s.activity[0] = s.activity[1] = 1.75
    assert not eng._accept((0, 2), an)  # 3.5 == mean(2, 5), not strictly above


# -- try_learn integration


def learn_on_chain(cfg):
    w = ProofWriter()
    s, confl = driven(parse_dimacs(EX_CHAIN), EX_CHAIN_SCRIPT, proof=w)
    learned = analyze_1uip(s, confl)
    eng = ErclEngine(s, cfg)
    took = eng.try_learn(confl, learned.uip_pos)
    return s, eng, w, took


def test_try_learn_closest_full_shape():
    s, eng, w, took = learn_on_chain(DipConfig(choice="closest", min_occ=1))
    assert took
    assert s.decision_level == 0  # empty D side asserts at the root
    z = 19
    assert s.value_of_var(z) == 2  # ~z forced
    assert s.stats.dips_introduced == 1
    assert s.stats.conflicts_with_dip == 1
    assert s.stats.ext_vars_live == 1
    assert eng.store.lookup(lit_from_dimacs(-12), lit_from_dimacs(13)) == z
    adds = [set(ls) for kind, ls in w.events if kind == "a"]
    assert adds == [
        {20, 12, -13},
        {-20, -12},
        {-20, 13},
        {-5, 14, -16, -17, -18, 19, 20},
        {-20},
        {12, -13},
    ]
    defs = [c for c in s.learnts if c.is_def]
    assert len(defs) == 3
    sets = [set(c.to_dimacs()) for c in s.learnts if not c.is_def]
    assert {12, -13} in sets  # the D-empty extra binary
    assert {-5, 14, -16, -17, -18, 19, 20} in sets  # the pre clause


def test_try_learn_single_clause_mode():
    s, eng, w, took = learn_on_chain(
        DipConfig(choice="middle", min_occ=1, clauses=1)
    )
    assert took
    adds = [set(ls) for kind, ls in w.events if kind == "a"]
    assert adds == [
        {20, 10, -11},
        {-20, -10},
        {-20, 11},
        {-20},
        {10, -11},
    ]
    sets = [set(c.to_dimacs()) for c in s.learnts if not c.is_def]
    assert sets == [{10, -11}]


def test_try_learn_skips_trivial_regions():
    # A region of UIP plus sink only: stage both levels before propagating,
    # else the binary clause fires already at level 1.
    f = parse_dimacs("p cnf 2 1\n-1 -2 0\n")
    s = Solver(f, SolverConfig(dip=DipConfig(enabled=False)))
    s.new_level()
    s.enqueue(lit_from_dimacs(2), None)
    s.new_level()
    s.enqueue(lit_from_dimacs(1), None)
    confl = s.propagate()
    assert confl is not None
    eng = ErclEngine(s, DipConfig(min_occ=1))
    learned = analyze_1uip(s, confl)
    assert not eng.try_learn(confl, learned.uip_pos)
    assert s.stats.conflicts_with_dip == 0


def test_try_learn_skips_pairless_regions():
    f = parse_dimacs("p cnf 2 2\n-1 2 0\n-1 -2 0\n")
    s, confl = driven(f, [[1]])
    eng = ErclEngine(s, DipConfig(min_occ=1))
    learned = analyze_1uip(s, confl)
    assert not eng.try_learn(confl, learned.uip_pos)
    assert s.stats.conflicts_with_dip == 0


def test_try_learn_respects_disable_and_root_level():
    # The binary must be attached before the units arrive so the conflict
    # surfaces in propagate() rather than during loading.
    f = parse_dimacs("p cnf 3 4\n-2 -3 0\n1 0\n-1 2 0\n-1 3 0\n")
    s = Solver(f, SolverConfig(dip=DipConfig(enabled=False)))
    confl = s.propagate()
    assert confl is not None and s.decision_level == 0
    eng = ErclEngine(s, DipConfig(min_occ=1))
    assert not eng.try_learn(confl, 0)
    eng2 = ErclEngine(s, DipConfig(enabled=False))
    assert not eng2.enabled
    assert not eng2.try_learn(confl, 0)


# -- lemma rewriting


def rewrite_fixture():
    s = Solver()
    for _ in range(10):
        s.new_var()
    z1 = s.new_var(is_extension=True)
    z2 = s.new_var(is_extension=True)
    st = ExtDefStore()
    l1, l2, l5 = 2 << 1, 3 << 1, 5 << 1
    st.add(z1, l1, l2, ())
    st.add(z2, z1 << 1, l5, ())
    return s, st, z1, z2, l1, l2, l5


def test_replace_folds_a_pair():
    s, st, z1, z2, l1, l2, l5 = rewrite_fixture()
    s.new_level()
    s.enqueue(z1 << 1, None)
    s.new_level()
    lemma = [0, l1 ^ 1, 8, l2 ^ 1]
    out = replace_in_lemma(s, st, lemma, 2, DipConfig())
    assert set(out) == {0, 8, (z1 << 1) | 1}
    assert out[0] == 0


def test_replace_chains_to_fixpoint():
    s, st, z1, z2, l1, l2, l5 = rewrite_fixture()
    s.new_level()
    s.enqueue(z1 << 1, None)
    s.enqueue(z2 << 1, None)
    s.new_level()
    lemma = [0, l1 ^ 1, l2 ^ 1, l5 ^ 1]
    out = replace_in_lemma(s, st, lemma, 2, DipConfig())
    assert set(out) == {0, (z2 << 1) | 1}


def test_replace_requires_z_true_below_current_level():
    s, st, z1, z2, l1, l2, l5 = rewrite_fixture()
    lemma = [0, l1 ^ 1, l2 ^ 1]
    s.new_level()
    assert replace_in_lemma(s, st, lemma, 2, DipConfig()) == lemma  # unassigned
    s.enqueue(z1 << 1, None)
    assert replace_in_lemma(s, st, lemma, 2, DipConfig()) == lemma  # current level
    s.backjump(0)
    s.new_level()
    s.enqueue((z1 << 1) | 1, None)
    s.new_level()
    assert replace_in_lemma(s, st, lemma, 2, DipConfig()) == lemma  # z false


def test_replace_keeps_tautology_out():
    s, st, z1, z2, l1, l2, l5 = rewrite_fixture()
    s.new_level()
    s.enqueue(z1 << 1, None)
    s.new_level()
    lemma = [0, l1 ^ 1, l2 ^ 1, z1 << 1]
    assert replace_in_lemma(s, st, lemma, 2, DipConfig()) == lemma


def test_replace_respects_size_gates():
    s, st, z1, z2, l1, l2, l5 = rewrite_fixture()
    s.new_level()
    s.enqueue(z1 << 1, None)
    s.new_level()
    lemma = [0, l1 ^ 1, 8, l2 ^ 1]
    cfg = DipConfig(replace_max_len=3)
    assert replace_in_lemma(s, st, lemma, 2, cfg) == lemma
    out = replace_in_lemma(s, st, lemma, 7, DipConfig())
    assert out == lemma  # lbd above the cap


def test_rewrite_lemma_noop_without_definitions():
    s, _, _, prob, _ = chain_state()
    eng = ErclEngine(s, DipConfig())
    lemma = [4, 6]
    assert eng.rewrite_lemma(lemma, 2) == lemma


# -- the grid walkthrough, end to end


def test_grid_walkthrough_proof_prefix():
    f = gen_tseitin_grid(3, 3)
    w = ProofWriter()
    cfg = SolverConfig(
        decision_script=[[1], [2], [6], [7]],
        dip=DipConfig(choice="first", min_occ=1),
    )
    s = Solver(f, cfg, proof=w)
    assert s.solve() == UNSAT
    adds = [set(ls) for kind, ls in w.events if kind == "a"]
    assert adds[:10] == [
        {9, 10, 13},
        {-13, -9},
        {-13, -10},
        {4, -5, -6, -7, 13},
        {-13, -11},
        {7, 12, 14},
        {-14, -7},
        {-14, -12},
        {3, 4, -5, -6, 14},
        {-14, -5},
    ]
    assert adds[-1] == set()
    assert s.stats.dips_introduced >= 2
    assert s.stats.ext_vars_live >= 2
    assert check_proof(f, w.events)


# -- deletion and the disabling monitor


def test_deletion_rounds_keep_everything_consistent():
    f = gen_tseitin_regular(10, 4, seed=1)
    w = ProofWriter()
    cfg = SolverConfig(
        dip=DipConfig(min_occ=1, choice="middle", ext_delete_interval=50)
    )
    s = Solver(f, cfg, proof=w)
    assert s.solve() == UNSAT
    st = s.stats
    assert st.ext_delete_rounds >= 3
    assert st.ext_vars_deleted > 0
    assert sum(1 for kind, _ in w.events if kind == "d") > 0
    eng = s.ercl
    assert st.ext_vars_live == len(eng.store.by_var)
    assert eng.store.audit_participation() == eng.store.participation
    for c in s.learnts:
        assert not c.deleted
        for l in c.lits:
            assert not s.retired[l >> 1]
    for ws in s.watches:
        for c in ws:
            assert not c.deleted
    for k1, k2 in eng.occ.counts:
        assert not s.retired[k1 >> 1] and not s.retired[k2 >> 1]
    for z, d in eng.store.by_var.items():
        assert not s.retired[z]
        assert not s.retired[d.l1 >> 1] and not s.retired[d.l2 >> 1]
    assert check_proof(f, w.events)


def test_monitor_disables_exactly_at_the_window():
    f = gen_tseitin_regular(10, 4, seed=1)
    cfg = SolverConfig(
        dip=DipConfig(min_occ=10**9, disable_window=20, disable_threshold=3.0)
    )
    s = Solver(f, cfg)
    assert s.solve() == UNSAT
    assert s.stats.dip_disabled_at == 20
    assert not s.ercl.enabled
    assert s.stats.dips_introduced == 0


def test_monitor_is_one_shot_and_spares_active_runs():
    s, _ = driven(parse_dimacs(EX_CHAIN), EX_CHAIN_SCRIPT)
    eng = ErclEngine(s, DipConfig(disable_window=10, disable_threshold=3.0))
    s.stats.conflicts = 10
    s.stats.decisions = 100
    s.stats.ext_decisions = 50
    eng.check_disable()
    assert eng.enabled
    assert s.stats.dip_disabled_at is None
    # Later starvation no longer matters: the monitor has fired.
    s.stats.conflicts = 1000
    s.stats.ext_decisions = 0
    eng.check_disable()
    assert eng.enabled


def test_monitor_counts_zero_decisions_as_starvation():
    s, _ = driven(parse_dimacs(EX_CHAIN), EX_CHAIN_SCRIPT)
    eng = ErclEngine(s, DipConfig(disable_window=10))
    s.stats.conflicts = 10
    s.stats.decisions = 0
    eng.check_disable()
    assert not eng.enabled
    assert s.stats.dip_disabled_at == 10
