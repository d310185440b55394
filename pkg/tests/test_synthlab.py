import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from causalperf.errors import CapacityError, DegenerateSelectionError, GraphParseError, InputError
from causalperf.graph import GraphKind, MixedGraph, NodeRole
from causalperf.prob import Joint
from causalperf.synthlab import (CPT_FLOOR, SCM, DiscreteCPT, SCMSpec, SelectionMechanism, bow_witness, build_scm,
                                 exact_query, intervene, joint_distribution, random_dag, rng_for, sample_scm,
                                 sample_structure, shift_environment, simulate)


def chain():
    g = MixedGraph.from_arcs([("X", "Y")])
    return SCM(g, {"X": DiscreteCPT((), 2, np.array([0.3, 0.7])),
                   "Y": DiscreteCPT(("X",), 2, np.eye(2))})


# ------------------------------------------------------------------ structure


def test_sample_structure_shape_and_roles():
    g = sample_structure(SCMSpec(n_options=16, n_perf=1, edge_prob=0.3, seed=1))
    assert g.kind is GraphKind.DAG
    opts = g.nodes_with_role(NodeRole.OPTION)
    assert len(opts) == 16 and len(g.nodes_with_role(NodeRole.PERFORMANCE)) == 1
    assert all(not g.parents(o) for o in opts)


def test_sample_structure_no_edges_at_zero_probability():
    g = sample_structure(SCMSpec(n_options=5, n_perf=3, edge_prob=0.0, seed=2))
    assert not g.edges


@given(st.integers(0, 2 ** 32), st.integers(1, 6), st.integers(1, 4), st.integers(0, 2))
@settings(max_examples=30, deadline=None)
def test_sample_structure_properties(seed, n_opt, n_perf, n_lat):
    spec = SCMSpec(n_options=n_opt, n_perf=n_perf, n_latent=n_lat, edge_prob=0.5, seed=seed)
    g = sample_structure(spec)
    assert g == sample_structure(spec)
    perf = set(g.nodes_with_role(NodeRole.PERFORMANCE))
    for o in g.nodes_with_role(NodeRole.OPTION):
        assert not g.parents(o)
    for p in perf:
        assert not (g.children(p) - perf)
    for lat in g.nodes_with_role(NodeRole.LATENT):
        assert g.children(lat) <= perf and not g.parents(lat)


def test_spec_validation_and_json():
    with pytest.raises(InputError):
        SCMSpec(n_options=0)
    with pytest.raises(InputError):
        SCMSpec(edge_prob=1.5)
    spec = SCMSpec(n_options=3, n_perf=2, mechanism="linear_gaussian", seed=9)
    assert SCMSpec.from_json(spec.to_json()) == spec
    with pytest.raises(GraphParseError):
        SCMSpec.from_json('{"n_options": 2, "colour": 1}')


def test_random_dag_latents_have_two_children():
    g = random_dag(6, 0.3, seed=4, n_latent=2)
    for lat in g.nodes_with_role(NodeRole.LATENT):
        assert len(g.children(lat)) == 2


def test_rng_streams_are_independent_and_reproducible():
    a = rng_for(5, 0, 1).random(4)
    assert np.array_equal(a, rng_for(5, 0, 1).random(4))
    assert not np.array_equal(a, rng_for(5, 1, 1).random(4))
    with pytest.raises(InputError):
        rng_for(-1, 0)


# ------------------------------------------------------------------ mechanisms


def test_cpts_are_floored_probability_tables():
    m = sample_scm(SCMSpec(n_options=3, n_perf=2, levels=3, edge_prob=0.7, seed=3))
    for mech in m.mechanisms.values():
        assert np.allclose(mech.table.sum(axis=-1), 1.0, atol=1e-12)
        assert mech.table.min() >= CPT_FLOOR / (1 + CPT_FLOOR * mech.card) - 1e-12


def test_linear_gaussian_weights_in_range():
    m = sample_scm(SCMSpec(n_options=3, n_perf=3, edge_prob=1.0, mechanism="linear_gaussian", seed=5))
    for mech in m.mechanisms.values():
        assert all(0.4 <= abs(w) <= 1.2 for w in mech.weights)
        assert 0.5 <= mech.noise_scale <= 1.0


def test_scm_checks_parents():
    g = MixedGraph.from_arcs([("X", "Y")])
    with pytest.raises(InputError):
        SCM(g, {"X": DiscreteCPT((), 2, np.array([0.5, 0.5])), "Y": DiscreteCPT((), 2, np.array([0.5, 0.5]))})


def test_scm_json_round_trip():
    for mech in ("discrete", "linear_gaussian"):
        m = sample_scm(SCMSpec(n_options=3, n_perf=2, n_latent=1, mechanism=mech, edge_prob=0.6, seed=8))
        assert SCM.from_json(m.to_json()) == m


def test_shift_changes_only_targets():
    m = sample_scm(SCMSpec(n_options=3, n_perf=2, edge_prob=0.6, seed=11))
    perf = m.graph.nodes_with_role(NodeRole.PERFORMANCE)[0]
    s = shift_environment(m, {perf}, seed=12)
    assert s.graph == m.graph
    for v in m.graph.nodes:
        assert (s.mechanisms[v] == m.mechanisms[v]) == (v != perf)
    assert shift_environment(m, set(), seed=12) == m
    with pytest.raises(InputError):
        shift_environment(m, {"nope"}, seed=1)


# ------------------------------------------------------------------ exact inference


def test_chain_intervention_equals_conditioning():
    m = chain()
    for x in (0, 1):
        do = exact_query(m, "interventional", ["Y"], do={"X": x}).table
        obs = exact_query(m, "observational", ["Y"], given={"X": x}).table
        assert np.allclose(do, obs)


def test_bow_witness_pair():
    m1, m2 = bow_witness()
    assert joint_distribution(m1).tv_distance(joint_distribution(m2)) == 0.0
    a = exact_query(m1, "interventional", ["Y"], do={"X": 1}).table[1]
    b = exact_query(m2, "interventional", ["Y"], do={"X": 1}).table[1]
    assert abs(a - b) >= 0.1


def test_selection_on_option_keeps_conditionals_exact():
    for seed in range(10):
        m = sample_scm(SCMSpec(n_options=3, n_perf=2, edge_prob=0.5, seed=seed))
        o = m.graph.nodes_with_role(NodeRole.OPTION)[0]
        sel = SelectionMechanism((o,), np.array([0.9, 0.2]))
        opts = {v: 1 for v in m.graph.nodes_with_role(NodeRole.OPTION)}
        for p in m.graph.nodes_with_role(NodeRole.PERFORMANCE):
            a = exact_query(m, "selection", [p], given=opts, selection=sel).table
            b = exact_query(m, "observational", [p], given=opts).table
            assert np.max(np.abs(a - b)) <= 1e-12


def test_capacity_error():
    g = MixedGraph.from_arcs([], nodes=[f"V{i}" for i in range(21)])
    m = build_scm(g, "discrete", 2, seed=0)
    with pytest.raises(CapacityError):
        joint_distribution(m)


def test_query_kinds_are_validated():
    m = chain()
    with pytest.raises(InputError):
        exact_query(m, "interventional", ["Y"])
    with pytest.raises(InputError):
        exact_query(m, "oracle", ["Y"])
    with pytest.raises(InputError):
        exact_query(m, "observational", ["Q"])


def test_intervene_uniform_randomisation():
    m = intervene(chain(), {"X": None})
    assert np.allclose(joint_distribution(m).marginal(["X"]).table, [0.5, 0.5])


# ------------------------------------------------------------------ simulation


def _empirical(d, names, cards):
    return Joint.from_codes(names, cards, d.codes(names))


def test_simulation_matches_exact_joint():
    m = sample_scm(SCMSpec(n_options=3, n_perf=2, n_latent=1, edge_prob=0.6, seed=21))
    d = simulate(m, 100_000, seed=3)
    assert set(d.names) == set(m.observed)
    exact = joint_distribution(m)
    emp = _empirical(d, list(exact.variables), [exact.card(v) for v in exact.variables])
    assert emp.tv_distance(exact) < 0.01


def test_simulation_is_deterministic():
    m = sample_scm(SCMSpec(n_options=3, n_perf=2, edge_prob=0.6, seed=22))
    assert simulate(m, 500, seed=1) == simulate(m, 500, seed=1)
    assert simulate(m, 500, seed=1) != simulate(m, 500, seed=2)


def test_full_inclusion_selection_equals_plain_simulation():
    m = sample_scm(SCMSpec(n_options=3, n_perf=1, edge_prob=0.6, seed=23))
    o = m.graph.nodes_with_role(NodeRole.OPTION)[0]
    sel = SelectionMechanism((o,), np.array([1.0, 1.0]))
    assert simulate(m, 2000, seed=4, sel=sel) == simulate(m, 2000, seed=4)


def test_selection_on_perf_biases_the_conditional():
    g = MixedGraph.from_arcs([("O1", "P1")], roles={"O1": NodeRole.OPTION, "P1": NodeRole.PERFORMANCE})
    m = build_scm(g, "discrete", 2, seed=2)
    sel = SelectionMechanism(("P1",), np.array([0.1, 1.0]))
    truth = exact_query(m, "observational", ["P1"], given={"O1": 0}).table
    biased = exact_query(m, "selection", ["P1"], given={"O1": 0}, selection=sel).table
    d = simulate(m, 50_000, seed=5, sel=sel)
    rows = d.codes(["O1", "P1"])
    est = np.mean(rows[rows[:, 0] == 0, 1])
    assert abs(est - biased[1]) < 0.01
    assert abs(est - truth[1]) > 0.05


def test_selection_retry_cap():
    m = chain()
    sel = SelectionMechanism(("X",), np.array([0.0, 0.0]))
    with pytest.raises(DegenerateSelectionError):
        simulate(m, 5, seed=1, sel=sel)
    with pytest.raises(DegenerateSelectionError):
        joint_distribution(m, selection=sel)


def test_selection_mechanism_validation_and_json():
    with pytest.raises(InputError):
        SelectionMechanism(("X",), np.array([0.5, 1.5]))
    sel = SelectionMechanism(("X", "Y"), np.array([[0.1, 0.2], [0.3, 1.0]]))
    back = SelectionMechanism.from_json(sel.to_json())
    assert back.inputs == sel.inputs and np.array_equal(back.table, sel.table)


def test_linear_gaussian_moments_match_simulation():
    m = sample_scm(SCMSpec(n_options=2, n_perf=3, edge_prob=0.8, mechanism="linear_gaussian", seed=31))
    d = simulate(m, 100_000, seed=6)
    names = list(m.observed)
    mom = exact_query(m, "observational", names)
    data = np.column_stack([d.numeric(v) for v in names])
    assert np.allclose(data.mean(axis=0), mom.mean, atol=0.03)
    assert np.allclose(np.cov(data.T), mom.cov, atol=0.05)


def test_linear_gaussian_intervention_moments():
    g = MixedGraph.from_arcs([("X", "Y")])
    m = build_scm(g, "linear_gaussian", seed=3)
    w = m.mechanisms["Y"].weights[0]
    mom = exact_query(m, "interventional", ["Y"], do={"X": 2.0})
    assert mom.mean[0] == pytest.approx(2.0 * w)
