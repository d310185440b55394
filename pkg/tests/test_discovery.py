import random
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from causalperf.citests import OracleTest
from causalperf.data import Dataset, VariableMeta
from causalperf.discovery import (BackgroundKnowledge, DiscoveryParams, SepSetMap, discover, fci, meek_closure,
                                  orient_colliders, parse_background, pc, pc_skeleton, possible_dsep,
                                  tiers_from_roles)
from causalperf.errors import DegenerateInputError, GraphParseError, InconsistencyError, InputError
from causalperf.graph import ARROW, CIRCLE, TAIL, GraphKind, MarkTable, MixedGraph, NodeRole, cpdag_of, separated
from causalperf.synthlab import build_scm, random_dag, simulate

from oracles import observed_statements, pag_by_enumeration, random_dag_edges


def dag(arcs, nodes=()):
    return MixedGraph.from_arcs(arcs, nodes=nodes)


def oracle_dags(count, max_nodes=8, p=0.3, seed0=0):
    out = []
    for s in range(count):
        n = 2 + s % (max_nodes - 1)
        names, arcs = random_dag_edges(n, seed0 + s, p)
        out.append(dag(arcs, names))
    return out


# --------------------------------------------------------------- knowledge


def test_parse_background_round_trip():
    text = b"# expert notes\nforbid: B A\nrequire: A C\ntier0: A,B\ntier1: C\n"
    bk = parse_background(text)
    assert bk.forbidden == {("B", "A")}
    assert bk.required == {("A", "C")}
    assert bk.tiers == (("A", "B"), ("C",))
    assert parse_background(bk.to_text()) == bk


@pytest.mark.parametrize("text, line", [
    (b"forbid: A\n", 1),
    (b"tier0: A\nbogus: x\n", 2),
    (b"\nrequire A B\n", 2),
    (b"tier0: A\ntier0: B\n", 2),
    (b"forbid: A b$c\n", 1),
])
def test_parse_background_reports_line(text, line):
    with pytest.raises(GraphParseError) as info:
        parse_background(text)
    assert info.value.line == line


def test_background_invariants():
    with pytest.raises(InputError):
        BackgroundKnowledge(forbidden={("A", "B")}, required={("A", "B")})
    with pytest.raises(InputError):
        BackgroundKnowledge(required={("A", "B"), ("B", "A")})
    with pytest.raises(InputError):
        BackgroundKnowledge(tiers=(("A",), ("A", "B")))


def test_tier_semantics():
    bk = BackgroundKnowledge(tiers=(("O1", "O2"), ("P",)))
    assert bk.forbids("P", "O1") and not bk.forbids("O1", "P")
    assert bk.excludes_adjacency("O1", "O2") is False
    both = BackgroundKnowledge(forbidden={("A", "B"), ("B", "A")})
    assert both.excludes_adjacency("A", "B")
    roles = {"O1": NodeRole.OPTION, "P": NodeRole.PERFORMANCE}
    assert tiers_from_roles(roles).tiers == (("O1",), ("P",))
    assert tiers_from_roles({"P": NodeRole.PERFORMANCE}).empty


# ---------------------------------------------------------------- skeleton


def test_skeleton_collider():
    g = dag([("A", "C"), ("B", "C")])
    skel, sep = pc_skeleton(OracleTest(g), g.nodes)
    assert {frozenset((e.a, e.b)) for e in skel.edges} == {frozenset("AC"), frozenset("BC")}
    assert sep[("A", "B")] == frozenset()
    assert sep[("B", "A")] == frozenset()


def test_skeleton_all_independent():
    g = MixedGraph(["A", "B", "C"], kind="DAG")
    skel, sep = pc_skeleton(OracleTest(g), g.nodes)
    assert not skel.edges
    assert all(sep[p] == frozenset() for p in combinations("ABC", 2))


def test_skeleton_matches_true_dag():
    for g in oracle_dags(200):
        skel, sep = pc_skeleton(OracleTest(g), g.nodes)
        truth = {frozenset((e.a, e.b)) for e in g.edges}
        assert {frozenset((e.a, e.b)) for e in skel.edges} == truth
        for a, b in combinations(g.nodes, 2):
            if frozenset((a, b)) in truth:
                assert (a, b) not in sep
            else:
                assert separated(g, {a}, {b}, sep[(a, b)])


def test_skeleton_needs_two_variables():
    with pytest.raises(InputError):
        pc_skeleton(OracleTest(dag([], ["A"])), ["A"])


def test_required_edge_survives():
    g = MixedGraph(["A", "B"], kind="DAG")
    skel, sep = pc_skeleton(OracleTest(g), g.nodes, BackgroundKnowledge(required={("A", "B")}))
    assert skel.adjacent("A", "B")
    assert ("A", "B") not in sep


def test_forbidden_both_ways_starts_absent():
    g = dag([("A", "B")])
    bk = BackgroundKnowledge(forbidden={("A", "B"), ("B", "A")})
    skel, sep = pc_skeleton(OracleTest(g), g.nodes, bk)
    assert not skel.adjacent("A", "B")
    assert sep[("A", "B")] is None


def test_max_cond_size_truncates():
    # A - D needs a conditioning set of size 2
    g = dag([("A", "B"), ("A", "C"), ("B", "D"), ("C", "D")])
    res = discover(g, params=DiscoveryParams(max_cond_size=1))
    assert res.truncated
    assert res.graph.adjacent("A", "D")
    with pytest.warns(RuntimeWarning):
        pc(g, params=DiscoveryParams(max_cond_size=1))
    assert not discover(g).truncated


# -------------------------------------------------------------- orientation


def test_orient_colliders_examples():
    t = MarkTable(["A", "B", "C"], [("A", "C", TAIL, TAIL), ("B", "C", TAIL, TAIL)])
    sep = SepSetMap()
    sep[("A", "B")] = ()
    out = orient_colliders(t, sep)
    assert out.is_directed("A", "C") and out.is_directed("B", "C")
    chain = MarkTable(["A", "B", "C"], [("A", "B", TAIL, TAIL), ("B", "C", TAIL, TAIL)])
    sep = SepSetMap()
    sep[("A", "C")] = ("B",)
    out = orient_colliders(chain, sep)
    assert all(e.mark_a is TAIL and e.mark_b is TAIL for e in out.edges)


def test_collider_conflict_first_writer_wins():
    # A - B - C - D with A, C and B, D separated by the empty set: B and C both colliders
    t = MarkTable("ABCD", [("A", "B", TAIL, TAIL), ("B", "C", TAIL, TAIL), ("C", "D", TAIL, TAIL)])
    sep = SepSetMap()
    sep[("A", "C")] = ()
    sep[("B", "D")] = ()
    sep[("A", "D")] = ()
    diag = []
    out = orient_colliders(t, sep, diag)
    # triple centred on B is visited first, so C -> B stands
    assert out.is_directed("C", "B")
    assert out.is_directed("D", "C")
    assert any("kept existing" in d for d in diag)


def test_collider_orientations_match_cpdag():
    for g in oracle_dags(200, seed0=1000):
        skel, sep = pc_skeleton(OracleTest(g), g.nodes)
        out = orient_colliders(skel, sep)
        vstructs = set()
        for c in g.nodes:
            for a, b in combinations(sorted(g.parents(c)), 2):
                if not g.adjacent(a, b):
                    vstructs |= {(a, c), (b, c)}
        got = {(e.a, e.b) if e.mark_b is ARROW else (e.b, e.a) for e in out.edges if e.mark_a != e.mark_b}
        assert got == vstructs


def test_meek_examples():
    r1 = MarkTable("abc", [("a", "b", TAIL, ARROW), ("b", "c", TAIL, TAIL)])
    assert meek_closure(r1).is_directed("b", "c")
    r2 = MarkTable("abc", [("a", "b", TAIL, ARROW), ("b", "c", TAIL, ARROW), ("a", "c", TAIL, TAIL)])
    assert meek_closure(r2).is_directed("a", "c")


def test_meek_closure_equals_cpdag():
    for g in oracle_dags(200, seed0=2000):
        skel, sep = pc_skeleton(OracleTest(g), g.nodes)
        assert meek_closure(orient_colliders(skel, sep)) == cpdag_of(g)


def test_meek_rejects_circles():
    t = MarkTable("ab", [("a", "b", CIRCLE, CIRCLE)])
    with pytest.raises(InputError):
        meek_closure(t)


def test_required_edge_reversed_is_inconsistent():
    g = dag([("A", "C"), ("B", "C")])
    with pytest.raises(InconsistencyError, match="C -> A"):
        pc(g, BackgroundKnowledge(required={("C", "A")}))


def test_tiers_orient_cross_tier_edges():
    g = dag([("A", "B"), ("B", "C")])
    out = pc(g, BackgroundKnowledge(tiers=(("A",), ("B", "C"))))
    assert out.is_directed("A", "B") and out.is_directed("B", "C")
    out = pc(g, BackgroundKnowledge(forbidden={("A", "B")}))
    assert out.is_directed("B", "A")
    assert out.edge("B", "C").mark_a is TAIL and out.edge("B", "C").mark_b is TAIL


def test_tier_conflict_with_collider_is_reported():
    # the data imply A -> C <- B but tiers put C first: knowledge wins, the clash is recorded
    g = dag([("A", "C"), ("B", "C")])
    res = discover(g, BackgroundKnowledge(tiers=(("C",), ("A", "B"))))
    assert res.graph.is_directed("C", "A") and res.graph.is_directed("C", "B")
    assert any("kept existing" in d for d in res.diagnostics)


# ---------------------------------------------------------------------- PC


def test_pc_chain_and_collider():
    chain = pc(dag([("A", "B"), ("B", "C")]))
    assert chain.kind is GraphKind.CPDAG
    assert all(e.mark_a is TAIL and e.mark_b is TAIL for e in chain.edges) and len(chain.edges) == 2
    coll = dag([("A", "C"), ("B", "C")])
    assert pc(coll) == cpdag_of(coll)


def test_pc_oracle_sound():
    for g in oracle_dags(200, seed0=3000):
        assert pc(g) == cpdag_of(g)


def test_pc_alpha_invariant_under_oracle():
    for g in oracle_dags(30, seed0=4000):
        assert pc(g, params=DiscoveryParams(alpha=0.05)) == pc(g, params=DiscoveryParams(alpha=0.01))


def test_stable_skeleton_invariant_under_renaming():
    # finite-sample data: relabelling the columns must relabel the output and nothing else
    g = random_dag(6, 0.4, seed=11)
    d = simulate(build_scm(g, "discrete", 2, seed=3), 800, seed=5)
    base = discover(d, params=DiscoveryParams(alpha=0.05))
    rng = random.Random(0)
    for _ in range(20):
        perm = list(d.names)
        rng.shuffle(perm)
        mapping = dict(zip(d.names, [f"Z{p}" for p in perm]))
        metas = [VariableMeta(mapping[v.name], v.role, v.dtype, v.levels) for v in d.variables]
        shuffled_order = sorted(metas, key=lambda m: rng.random())
        d2 = Dataset(shuffled_order, {mapping[k]: d.column(k) for k in d.names})
        res = discover(d2, params=DiscoveryParams(alpha=0.05))
        back = {v: k for k, v in mapping.items()}
        # renaming changes the visiting order; the stable skeleton must not move
        assert {frozenset((back[e.a], back[e.b])) for e in res.graph.edges} == \
            {frozenset((e.a, e.b)) for e in base.graph.edges}


def test_pc_column_order_does_not_matter():
    g = random_dag(6, 0.4, seed=12)
    d = simulate(build_scm(g, "discrete", 2, seed=4), 800, seed=6)
    base = pc(d, params=DiscoveryParams(alpha=0.05))
    rng = random.Random(1)
    for _ in range(20):
        order = list(d.variables)
        rng.shuffle(order)
        d2 = Dataset(order, {k: d.column(k) for k in d.names})
        assert pc(d2, params=DiscoveryParams(alpha=0.05)) == base


def test_pc_parallel_matches_serial():
    g = random_dag(8, 0.35, seed=13)
    d = simulate(build_scm(g, "linear_gaussian", seed=2), 2000, seed=7)
    serial = discover(d, params=DiscoveryParams(alpha=0.01, ci_test="fisher_z"))
    par = discover(d, params=DiscoveryParams(alpha=0.01, ci_test="fisher_z", workers=4))
    assert serial.graph == par.graph
    assert dict(serial.sepsets) == dict(par.sepsets)


def test_every_sepset_retests_independent():
    g = random_dag(7, 0.35, seed=21)
    d = simulate(build_scm(g, "linear_gaussian", seed=1), 3000, seed=2)
    res = discover(d, params=DiscoveryParams(ci_test="fisher_z"))
    from causalperf.citests import FisherZ
    test = FisherZ(d, 0.01)
    for pair, s in res.sepsets.items():
        a, b = sorted(pair)
        assert not res.graph.adjacent(a, b)
        assert test(a, b, sorted(s)).independent


def test_unstable_variant_runs():
    for g in oracle_dags(20, seed0=5000):
        assert pc(g, params=DiscoveryParams(stable=False)) == cpdag_of(g)


def test_degenerate_error_names_triple():
    metas = [VariableMeta("A", dtype="continuous"), VariableMeta("B", dtype="continuous"),
             VariableMeta("C", dtype="continuous")]
    x = np.arange(50, dtype=float)
    rng = np.random.default_rng(0)
    d = Dataset(metas, {"A": x, "B": 2 * x + 1, "C": rng.normal(size=50)})
    with pytest.raises(DegenerateInputError, match=r"_\|\|_"):
        pc(d, params=DiscoveryParams(ci_test="fisher_z", alpha=0.5))


def test_dataset_defaults_to_role_tiers():
    metas = [VariableMeta("O", NodeRole.OPTION, "discrete", ("a", "b")),
             VariableMeta("P", NodeRole.PERFORMANCE, "continuous")]
    rng = np.random.default_rng(1)
    o = rng.integers(0, 2, 3000)
    d = Dataset(metas, {"O": o, "P": o * 2.0 + rng.normal(size=3000)})
    out = pc(d)
    assert out.is_directed("O", "P")
    plain = pc(d, BackgroundKnowledge())
    e = plain.edge("O", "P")
    assert e.mark_a is TAIL and e.mark_b is TAIL


def test_bare_test_needs_variables():
    g = dag([("A", "B")])
    with pytest.raises(InputError):
        discover(OracleTest(g))
    assert discover(OracleTest(g), variables=["A", "B"]).graph.adjacent("A", "B")


# --------------------------------------------------------------------- FCI


def test_fci_confounded_pair():
    g = MixedGraph.from_arcs([("L", "X"), ("L", "Y")], roles={"L": NodeRole.LATENT})
    out = fci(g)
    assert out.kind is GraphKind.PAG
    assert out.edges == (("X", "Y", CIRCLE, CIRCLE),)


def test_fci_chain():
    out = fci(dag([("A", "B"), ("B", "C")]))
    assert out.edges == (("A", "B", CIRCLE, CIRCLE), ("B", "C", CIRCLE, CIRCLE))


def test_fci_y_structure():
    out = fci(dag([("X1", "Z"), ("X2", "Z"), ("Z", "Y")]))
    assert out.edge("X1", "Z") == ("X1", "Z", CIRCLE, ARROW)
    assert out.edge("X2", "Z") == ("X2", "Z", CIRCLE, ARROW)
    assert out.is_directed("Z", "Y")


def test_fci_matches_mag_enumeration():
    for seed in range(60):
        n = 3 + seed % 3
        g = random_dag(n, 0.45, seed + 100, n_latent=1 + seed % 2)
        obs = [v for v in g.nodes if g.role(v) is not NodeRole.LATENT]
        ref, _ = pag_by_enumeration(observed_statements(g, obs), obs)
        assert fci(g).edges == ref.edges, seed


def test_fci_with_selection_variable():
    # A -> S <- B with S selected on: A and B become dependent
    g = MixedGraph.from_arcs([("A", "S"), ("B", "S"), ("A", "C")], roles={"S": NodeRole.SELECTION_VAR})
    out = fci(g)
    assert out.adjacent("A", "B")
    ref, _ = pag_by_enumeration(observed_statements(g, "ABC", ["S"]), "ABC")
    assert out.edges == ref.edges


def test_fci_selection_models_match_enumeration():
    checked = 0
    for seed in range(200):
        d = random_dag(5, 0.4, seed)
        sinks = [v for v in d.nodes if d.parents(v) and not d.children(v)]
        if not sinks:
            continue
        sv = sinks[seed % len(sinks)]
        g = d.replace(roles={sv: NodeRole.SELECTION_VAR})
        obs = [v for v in g.nodes if v != sv]
        ref, _ = pag_by_enumeration(observed_statements(g, obs, [sv]), obs)
        assert fci(g).edges == ref.edges, seed
        checked += 1
    assert checked > 50


def test_possible_dsep_through_collider():
    t = MarkTable("ABCD", [("A", "B", CIRCLE, ARROW), ("B", "C", ARROW, CIRCLE), ("C", "D", CIRCLE, CIRCLE)])
    assert possible_dsep(t, "A") == {"B", "C"}
    t.set_mark("B", "C", ARROW)
    t.set_mark("D", "C", ARROW)
    assert possible_dsep(t, "A") == {"B", "C", "D"}


def test_fci_tiers_add_arrowheads():
    g = dag([("A", "B"), ("B", "C")])
    out = fci(g, BackgroundKnowledge(tiers=(("A",), ("B",), ("C",))))
    assert out.mark("A", "B") is ARROW
    assert out.mark("B", "C") is ARROW


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_pc_output_is_valid_cpdag_on_data(seed):
    g = random_dag(5, 0.4, seed)
    d = simulate(build_scm(g, "discrete", 2, seed=seed), 300, seed=seed)
    try:
        res = discover(d, params=DiscoveryParams(alpha=0.05))
    except (DegenerateInputError, InconsistencyError):
        return
    assert res.graph.kind is GraphKind.CPDAG
    for pair in res.sepsets:
        a, b = sorted(pair)
        assert not res.graph.adjacent(a, b)
