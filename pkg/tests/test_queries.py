import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from causalperf.errors import InputError, UndefinedConditionalError
from causalperf.graph import GraphKind, MixedGraph, NodeRole
from causalperf.prob import Joint
from causalperf.queries import (EXPERIMENT, SOURCE, TARGET, CausalQuery, ProbTerm, Product, Quotient, Sum,
                                TransportQuery, backdoor_set, build_selection_diagram, evaluate_estimand,
                                free_symbols, from_json, has_do, id_effect, parse_query, recoverability_report,
                                rename_bound, rule2_applies, s_admissible_adjustment, s_nodes_of, s_recoverable,
                                shared_graph, simplify, to_json, to_text, trivially_transportable, worlds)
from causalperf.queries.transport import SOURCE_EXPERIMENTS, TARGET_OBSERVATIONAL
from causalperf.synthlab import (SCMSpec, bow_witness, build_scm, exact_query, joint_distribution,
                                 random_dag, sample_structure, shift_environment)

from oracles import explicit_dag, random_admg


def dag(arcs, nodes=(), roles=None):
    return MixedGraph.from_arcs(arcs, nodes=nodes, roles=roles)


def bow():
    return dag([("U", "X"), ("U", "Y"), ("X", "Y")], roles={"U": NodeRole.LATENT})


def front_door():
    return MixedGraph(["X", "Z", "Y"], [("X", "Z", "t", "a"), ("Z", "Y", "t", "a"), ("X", "Y", "a", "a")],
                      kind="ADMG")


def interventional_truth(m, y, do):
    return exact_query(m, "interventional", [y], do=do).table


# ------------------------------------------------------------------ rule 2 / back-door


def test_rule2_option_root():
    assert rule2_applies(dag([("o", "perf")]), CausalQuery("o", "perf"))


def test_rule2_confounded():
    assert not rule2_applies(dag([("C", "X"), ("C", "Y"), ("X", "Y")]), CausalQuery("X", "Y"))


def test_rule2_holds_for_every_option_perf_pair_of_synthetic_systems():
    for seed in range(30):
        g = sample_structure(SCMSpec(n_options=4, n_perf=2, n_latent=1, edge_prob=0.4, seed=seed))
        for o in g.nodes_with_role(NodeRole.OPTION):
            for p in g.nodes_with_role(NodeRole.PERFORMANCE):
                q = CausalQuery(o, p)
                assert rule2_applies(g, q)
                res = id_effect(g, q)
                assert res.estimand == ProbTerm((p,), (o,))


def test_rule2_unknown_node():
    with pytest.raises(InputError):
        rule2_applies(dag([("A", "B")]), CausalQuery("A", "Q"))


def test_backdoor_examples():
    assert backdoor_set(dag([("Z", "X"), ("Z", "Y"), ("X", "Y")]), CausalQuery("X", "Y")) == {"Z"}
    assert backdoor_set(dag([("X", "Y")]), CausalQuery("X", "Y")) == frozenset()
    assert backdoor_set(bow(), CausalQuery("X", "Y")) is None


def test_backdoor_prefers_smaller_then_lexicographic():
    g = dag([("A", "X"), ("A", "B"), ("B", "Y"), ("C", "X"), ("C", "Y"), ("X", "Y")])
    # {C} alone leaves X <- A -> B -> Y open; both two-sets {A, C} and {B, C} work
    assert backdoor_set(g, CausalQuery("X", "Y")) == {"A", "C"}


def test_backdoor_set_adjustment_is_correct():
    for seed in range(20):
        g = sample_structure(SCMSpec(n_options=2, n_perf=2, n_latent=1, edge_prob=0.6, seed=seed))
        m = build_scm(g, "discrete", 2, seed=seed)
        obs = joint_distribution(m)
        nodes = [v for v in g.nodes if v not in g.nodes_with_role(NodeRole.LATENT)]
        x, y = nodes[0], nodes[-1]
        z = backdoor_set(g, CausalQuery(x, y))
        if z is None:
            continue
        e = Sum(tuple(z), Product((ProbTerm((y,), (x,) + tuple(z)), ProbTerm(tuple(z)))))
        for xv in (0, 1):
            truth = interventional_truth(m, y, {x: xv})
            for yv in (0, 1):
                assert evaluate_estimand(e, {SOURCE: obs}, {x: xv, y: yv}) == pytest.approx(truth[yv], abs=1e-12)


# ------------------------------------------------------------------ identification


def test_front_door_estimand_shape():
    res = id_effect(front_door(), CausalQuery("X", "Y"))
    assert res.identified
    assert to_text(res.estimand) == "sum_Z [sum_X' P(X') P(Y|X',Z)] P(Z|X)"


def test_markovian_adjustment_estimand():
    res = id_effect(dag([("Z", "X"), ("Z", "Y"), ("X", "Y")]), CausalQuery("X", "Y"))
    assert to_text(res.estimand) == "sum_Z P(Y|X,Z) P(Z)"


@pytest.mark.parametrize("graph", [front_door(), dag([("Z", "X"), ("Z", "Y"), ("X", "Y")])],
                         ids=["front_door", "markovian"])
def test_identified_estimand_matches_exact_truth(graph):
    for seed in range(5):
        m = build_scm(explicit_dag(graph), "discrete", 2, seed=seed)
        obs = joint_distribution(m)
        e = id_effect(graph, CausalQuery("X", "Y")).estimand
        for xv in (0, 1):
            truth = interventional_truth(m, "Y", {"X": xv})
            got = evaluate_estimand(e, {SOURCE: obs}, {"X": xv})
            assert np.allclose(got.values, truth, atol=1e-9)


def test_bow_is_not_identified_and_witness_pair_differs():
    res = id_effect(bow(), CausalQuery("X", "Y"))
    assert not res.identified and res.estimand is None
    assert res.witness.f_prime < res.witness.f
    assert "X" in res.witness.f and "Y" in res.witness.f
    m1, m2 = bow_witness()
    assert joint_distribution(m1).tv_distance(joint_distribution(m2)) == 0.0
    gap = abs(interventional_truth(m1, "Y", {"X": 1})[1] - interventional_truth(m2, "Y", {"X": 1})[1])
    assert gap >= 0.1


def test_id_rejects_equivalence_classes():
    cpdag = MixedGraph(["A", "B"], [("A", "B", "t", "t")], kind="CPDAG")
    with pytest.raises(InputError):
        id_effect(cpdag, CausalQuery("A", "B"))


def test_id_rejects_latent_in_query():
    with pytest.raises(InputError):
        id_effect(bow(), CausalQuery("U", "Y"))


def _random_queries(count, max_nodes=5, seed0=0, p_bi=0.2):
    seed = seed0
    while count:
        seed += 1
        g = random_admg(2 + seed % (max_nodes - 1), seed, p_bi=p_bi)
        rng = random.Random(seed)
        x, y = rng.sample(list(g.nodes), 2)
        yield seed, g, x, y
        count -= 1


def test_id_soundness_on_random_admgs():
    checked = 0
    for seed, g, x, y in _random_queries(60, p_bi=0.35):
        res = id_effect(g, CausalQuery(x, y))
        if not res.identified:
            continue
        assert not has_do(res.estimand)
        assert free_symbols(res.estimand) <= {x, y}
        m = build_scm(explicit_dag(g), "discrete", 2, seed=seed)
        obs = joint_distribution(m)
        for xv in (0, 1):
            truth = interventional_truth(m, y, {x: xv})
            vals = [evaluate_estimand(res.estimand, {SOURCE: obs}, {x: xv, y: yv}) for yv in (0, 1)]
            assert np.allclose(vals, truth, atol=1e-9)
            assert min(vals) >= 0 and sum(vals) == pytest.approx(1.0, abs=1e-9)
        checked += 1
    assert checked >= 30


def test_conditional_identification_soundness():
    checked = 0
    for seed, g, x, y in _random_queries(80, p_bi=0.25, seed0=500):
        rest = [v for v in g.nodes if v not in (x, y)]
        if not rest:
            continue
        c = random.Random(seed).choice(rest)
        res = id_effect(g, CausalQuery(x, y, {c}))
        if not res.identified:
            continue
        assert free_symbols(res.estimand) <= {x, y, c}
        m = build_scm(explicit_dag(g), "discrete", 2, seed=seed)
        obs = joint_distribution(m)
        for xv in (0, 1):
            for cv in (0, 1):
                truth = exact_query(m, "interventional", [y], given={c: cv}, do={x: xv}).table
                vals = [evaluate_estimand(res.estimand, {SOURCE: obs}, {x: xv, y: yv, c: cv}) for yv in (0, 1)]
                assert np.allclose(vals, truth, atol=1e-9)
        checked += 1
    assert checked >= 20


def test_latent_dags_identify_soundly_or_return_a_hedge():
    found = 0
    for seed in range(150):
        g = random_dag(5, 0.5, seed, n_latent=2)
        obs = [v for v in g.nodes if v not in g.nodes_with_role(NodeRole.LATENT)]
        x, y = random.Random(seed).sample(obs, 2)
        res = id_effect(g, CausalQuery(x, y))
        if res.identified:
            m = build_scm(g, "discrete", 2, seed=seed)
            got = evaluate_estimand(res.estimand, {SOURCE: joint_distribution(m)}, {x: 1})
            assert np.allclose(got.values, interventional_truth(m, y, {x: 1}), atol=1e-9)
            continue
        found += 1
        h = res.witness
        assert h.f_prime < h.f and x in h.f and x not in h.f_prime
    assert found > 5


def test_observational_query_is_the_plain_conditional():
    res = id_effect(bow(), CausalQuery("X", "Y", interventional=False))
    assert res.estimand == ProbTerm(("Y",), ("X",))


# ------------------------------------------------------------------ estimands


def _joint3():
    rng = np.random.default_rng(3)
    t = rng.random((2, 3, 2))
    return Joint(["A", "B", "C"], [2, 3, 2], t / t.sum())


def test_evaluate_plain_conditional_matches_joint():
    j = _joint3()
    e = ProbTerm(("A",), ("B",))
    for a in range(2):
        for b in range(3):
            assert evaluate_estimand(e, {SOURCE: j}, {"A": a, "B": b}) == pytest.approx(
                j.conditional({"A": a}, {"B": b}), abs=1e-15)


def test_evaluate_returns_table_over_free_symbols():
    j = _joint3()
    out = evaluate_estimand(ProbTerm(("A",), ("B",)), {SOURCE: j}, {"B": 1})
    assert out.variables == ("A",)
    assert out.values.sum() == pytest.approx(1.0, abs=1e-12)


def test_evaluate_zero_probability_conditional_raises():
    t = np.array([[0.5, 0.0], [0.5, 0.0]])
    j = Joint(["A", "B"], [2, 2], t)
    with pytest.raises(UndefinedConditionalError):
        evaluate_estimand(ProbTerm(("A",), ("B",)), {SOURCE: j}, {"A": 0, "B": 1})
    with pytest.raises(UndefinedConditionalError):
        evaluate_estimand(Quotient(ProbTerm(("A", "B")), ProbTerm(("B",))), {SOURCE: j}, {"A": 0, "B": 1})


def test_evaluate_missing_world():
    with pytest.raises(InputError):
        evaluate_estimand(ProbTerm(("A",), world=TARGET), {SOURCE: _joint3()}, {"A": 0})


def test_evaluate_ignores_treatment_absent_from_estimand():
    j = _joint3()
    assert evaluate_estimand(ProbTerm(("A",)), {SOURCE: j}, {"A": 1, "B": 0}) == pytest.approx(
        j.marginal(["A"]).table[1])


def test_simplify_marginalises_and_drops_unit_factors():
    e = Sum(("B",), ProbTerm(("A", "B")))
    assert simplify(e) == ProbTerm(("A",))
    e = Sum(("B",), Product((ProbTerm(("A",)), ProbTerm(("B",), ("A",)))))
    assert simplify(e) == ProbTerm(("A",))


def test_simplify_folds_quotient_of_marginal():
    e = Quotient(ProbTerm(("A", "B")), Sum(("A",), ProbTerm(("A", "B"))))
    assert simplify(e) == ProbTerm(("A",), ("B",))


def test_simplify_keeps_value_on_random_expressions():
    j = _joint3()
    exprs = [
        Sum(("B",), Product((ProbTerm(("C",), ("A", "B")), ProbTerm(("B",))))),
        Quotient(Sum(("C",), ProbTerm(("A", "B", "C"))), Sum(("A", "C"), ProbTerm(("A", "B", "C")))),
        Sum(("C",), Product((ProbTerm(("A",)), ProbTerm(("C",), ("A",))))),
    ]
    for e in exprs:
        a = evaluate_estimand(e, {SOURCE: j}, {"A": 1, "B": 2, "C": 0})
        b = evaluate_estimand(simplify(e), {SOURCE: j}, {"A": 1, "B": 2, "C": 0})
        assert a == pytest.approx(b, abs=1e-12)


def test_rename_bound_separates_shadowed_symbols():
    inner = Sum(("X",), Product((ProbTerm(("X",)), ProbTerm(("Y",), ("X", "Z")))))
    e = Product((inner, ProbTerm(("Z",), ("X",))))
    r = rename_bound(e)
    assert to_text(r) == "[sum_X' P(X') P(Y|X',Z)] P(Z|X)"
    assert free_symbols(r) == free_symbols(e)


def test_json_round_trip_and_worlds():
    e = Sum(("Z",), Product((ProbTerm(("Z",), world=TARGET), ProbTerm(("Y",), ("Z",), ("X",), EXPERIMENT))))
    assert from_json(to_json(e)) == e
    assert worlds(e) == {TARGET, EXPERIMENT}
    assert to_text(e) == "sum_Z P*(Z) P(Y|do(X),Z)"


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_identified_effects_are_distributions(seed):
    g = random_admg(2 + seed % 4, seed, p_bi=0.3)
    x, y = random.Random(seed).sample(list(g.nodes), 2)
    res = id_effect(g, CausalQuery(x, y))
    if not res.identified:
        return
    obs = joint_distribution(build_scm(explicit_dag(g), "discrete", 3, seed=seed))
    for xv in range(3):
        vals = [evaluate_estimand(res.estimand, {SOURCE: obs}, {x: xv, y: yv}) for yv in range(3)]
        assert min(vals) >= -1e-12
        assert sum(vals) == pytest.approx(1.0, abs=1e-9)


# ------------------------------------------------------------------ transport


def test_selection_diagram_adds_one_root_per_suspect():
    shared = dag([("o1", "train"), ("o1", "test"), ("o2", "acc")])
    d = build_selection_diagram(shared, {"train", "test", "acc"})
    assert d.kind is GraphKind.SELECTION_DIAGRAM
    assert s_nodes_of(d) == {"S_acc": "acc", "S_test": "test", "S_train": "train"}
    assert shared_graph(d) == shared
    assert build_selection_diagram(shared, set()) == shared
    with pytest.raises(InputError):
        build_selection_diagram(shared, {"nope"})


def test_trivial_transport_of_option_effect():
    d = build_selection_diagram(dag([("O", "perf")]), {"perf"})
    e = trivially_transportable(TransportQuery(d, CausalQuery("O", "perf")))
    assert to_text(e) == "P*(perf|O)"
    stat = trivially_transportable(TransportQuery(d, CausalQuery("O", "perf", interventional=False)))
    assert stat == ProbTerm(("perf",), ("O",), world=TARGET)


def test_trivial_transport_absent_on_bow():
    d = build_selection_diagram(bow(), {"Y"})
    assert trivially_transportable(TransportQuery(d, CausalQuery("X", "Y"))) is None


def test_trivial_transport_never_uses_source_worlds():
    for seed in range(40):
        g = random_admg(2 + seed % 4, seed, p_bi=0.3)
        x, y = random.Random(seed).sample(list(g.nodes), 2)
        d = build_selection_diagram(g, {y})
        e = trivially_transportable(TransportQuery(d, CausalQuery(x, y)))
        if e is not None:
            assert worlds(e) == {TARGET}


def test_trivial_transport_matches_shifted_target():
    g = dag([("O", "perf"), ("O2", "perf")])
    src = build_scm(g, "discrete", 2, seed=4)
    tgt = shift_environment(src, {"perf"}, seed=5)
    d = build_selection_diagram(g, {"perf"})
    e = trivially_transportable(TransportQuery(d, CausalQuery("O", "perf")))
    truth = interventional_truth(tgt, "perf", {"O": 1})
    got = evaluate_estimand(e, {TARGET: joint_distribution(tgt)}, {"O": 1})
    assert np.allclose(got.values, truth, atol=1e-12)


def test_s_admissible_effect_modifier():
    g = dag([("X", "Y"), ("Z", "Y")])
    d = build_selection_diagram(g, {"Z"})
    z, e = s_admissible_adjustment(TransportQuery(d, CausalQuery("X", "Y")))
    assert z == {"Z"}
    assert to_text(e) == "sum_Z P*(Z) P(Y|do(X),Z)"
    src = build_scm(g, "discrete", 2, seed=1)
    tgt = shift_environment(src, {"Z"}, seed=2)
    joints = {TARGET: joint_distribution(tgt), EXPERIMENT: lambda do: joint_distribution(src, do=do)}
    for xv in (0, 1):
        got = evaluate_estimand(e, joints, {"X": xv})
        assert np.allclose(got.values, interventional_truth(tgt, "Y", {"X": xv}), atol=1e-12)
        # the source effect itself differs, so the re-weighting matters
        assert not np.allclose(interventional_truth(src, "Y", {"X": xv}), got.values, atol=1e-3)


def test_s_admissible_absent_when_s_hits_outcome():
    d = build_selection_diagram(dag([("X", "Y")]), {"Y"})
    assert s_admissible_adjustment(TransportQuery(d, CausalQuery("X", "Y"))) is None


def test_s_admissible_without_s_nodes():
    z, e = s_admissible_adjustment(TransportQuery(dag([("X", "Y")]), CausalQuery("X", "Y")))
    assert z == frozenset()
    assert e == ProbTerm(("Y",), (), ("X",), EXPERIMENT)


def test_transport_availability_is_checked():
    d = build_selection_diagram(dag([("X", "Y"), ("Z", "Y")]), {"Z"})
    with pytest.raises(InputError):
        s_admissible_adjustment(TransportQuery(d, CausalQuery("X", "Y"), frozenset({TARGET_OBSERVATIONAL})))
    with pytest.raises(InputError):
        trivially_transportable(TransportQuery(d, CausalQuery("X", "Y"), frozenset({SOURCE_EXPERIMENTS})))
    with pytest.raises(InputError):
        TransportQuery(d, CausalQuery("X", "S_Z"))


# ------------------------------------------------------------------ recoverability


def _sel(arcs, s="S"):
    return dag(arcs, roles={s: NodeRole.SELECTION_VAR})


def test_s_recoverable_examples():
    assert s_recoverable(_sel([("S", "X"), ("X", "Y")]), {"X"}, {"Y"})
    assert not s_recoverable(_sel([("X", "Y"), ("S", "Y")]), {"X"}, {"Y"})
    assert not s_recoverable(_sel([("X", "Y"), ("Y", "S")]), {"X"}, {"Y"})


def test_s_recoverable_needs_selection_node():
    with pytest.raises(InputError):
        s_recoverable(dag([("X", "Y")]), {"X"}, {"Y"})


def _selection_gap(g, x, y, seeds=range(10)):
    """Largest |P(y|x,S=1) - P(y|x)| over a few random binary parameterisations."""
    best = 0.0
    for seed in seeds:
        j = joint_distribution(build_scm(g, "discrete", 2, seed=seed))
        for xs in np.ndindex(*([2] * len(x))):
            ev = dict(zip(x, xs))
            sel = j.condition({**ev, "S": 1}).marginal([y]).table
            base = j.marginal([v for v in j.variables if v != "S"]).condition(ev).marginal([y]).table
            best = max(best, float(np.abs(sel - base).max()))
    return best


def test_s_recoverable_agrees_with_exact_models():
    cases = [
        [("S", "X"), ("X", "Y")],
        [("X", "Y"), ("Y", "S")],
        [("X", "S"), ("X", "Y")],
        [("X", "Y"), ("Z", "Y"), ("Z", "S")],
        [("X", "Y"), ("X", "S"), ("Z", "S"), ("Z", "Y")],
    ]
    for arcs in cases:
        g = _sel(arcs)
        ok = s_recoverable(g, {"X"}, {"Y"})
        gap = _selection_gap(g, ["X"], "Y")
        if ok:
            assert gap <= 1e-12
        else:
            assert gap > 0.01


def test_recoverability_report():
    g = _sel([("o1", "perf"), ("o2", "perf"), ("o1", "o2"), ("S", "o1")], s="S")
    rep = recoverability_report(g, ["o1", "o2"], ["perf"])
    assert rep.given_all == {"perf": True}
    g2 = _sel([("o1", "perf"), ("perf", "S")])
    assert recoverability_report(g2, ["o1"], ["perf"]).given_all == {"perf": False}
    # conditioning on o2 alone leaves S -> o1 -> perf open
    assert rep.pairs[("o2", "perf")] is False
    assert "o1\tperf\ttrue" in rep.to_text()


def test_recoverability_report_option_selection_sweep():
    for seed in range(30):
        g = sample_structure(SCMSpec(n_options=3, n_perf=2, edge_prob=0.5, seed=seed))
        opts = list(g.nodes_with_role(NodeRole.OPTION))
        target = random.Random(seed).choice(opts)
        arcs = [(e.a, e.b) for e in g.edges] + [("S", target)]
        gs = dag(arcs, nodes=list(g.nodes) + ["S"], roles={**g.roles, "S": NodeRole.SELECTION_VAR})
        rep = recoverability_report(gs, opts, g.nodes_with_role(NodeRole.PERFORMANCE))
        assert all(rep.given_all.values())


# ------------------------------------------------------------------ query files


def test_parse_query_file():
    q = parse_query("treatment: X\noutcome: Y\ngiven: Z=1\ns_nodes: S_Y\n")
    assert q.treatment == ("X",) and q.outcome == ("Y",)
    assert q.given_values() == {"Z": "1"}
    assert q.query().conditioning == {"Z"}


def test_parse_query_rejects_unknown_key():
    with pytest.raises(InputError):
        parse_query("treatment: X\noutcome: Y\nbogus: 1\n")
