# -*- coding: utf-8 -*-
import math

import numpy as np
import pytest

from belief_propagation import bp_iterate, canonical_residual, potts_bp_residual
from cavities import (
    bethe_deviation,
    bethe_local_measure,
    enumerate_cavities,
    factorization_check,
    is_bethe_state,
    is_cavity,
    edge_multiplicity,
    make_cavity,
    potts_bethe_suite,
)
from conftest import make_g0, make_path, make_triangle, random_tree
from factor_graph import FactorGraph, SpinDomain, build_graph
from gibbs import ConditionalGibbs, EventSet, SubcubeEvent, gibbs_table
from messages import message_metric
from random_models import ModelSpec, ksat_family, potts_family, sample_config, sample_graph, substream


def test_empty_graph_cavities(e3):
    pairs = enumerate_cavities(e3, 2, 2)
    assert [c.U for c in pairs.cavities] == [(0, 1), (0, 2), (1, 2)]
    assert not pairs.sampled
    assert enumerate_cavities(e3, 2, 1).cavities == []
    with pytest.raises(ValueError):
        enumerate_cavities(e3, 2, 3)
    with pytest.raises(ValueError):
        enumerate_cavities(e3, 4, 1)


def test_single_variable_cavity(g0):
    cavity = make_cavity(g0, [0])
    assert (cavity.U, cavity.boundary, cavity.Y, cavity.components) == ((0,), (0,), (1,), 1)
    assert cavity.anchors == {0: 0}
    assert cavity.to_json() == {"U": [0], "components": 1}


def test_cavity_violations():
    table = potts_family(2, 1.0).psis[0]
    shared_outside = build_graph(3, SpinDomain(2), [((0, 2), table), ((1, 2), table)])
    assert is_cavity(shared_outside, [0, 1]) == "CAV3"
    with pytest.raises(ValueError, match="violates CAV3"):
        make_cavity(shared_outside, [0, 1])
    ternary = build_graph(3, SpinDomain(2), [((0, 1, 2), ksat_family(3, 1.0).psis[0])])
    assert is_cavity(ternary, [0, 1]) == "CAV2"
    assert is_cavity(make_triangle(), [0, 1, 2]) == "CAV1"
    assert is_cavity(make_triangle(), [0]) is None


def test_sampled_enumeration():
    empty = FactorGraph(6, SpinDomain(2), [])
    listing = enumerate_cavities(empty, 2, 2, limit=3, seed=5)
    assert listing.sampled and len(listing.cavities) == 3
    again = enumerate_cavities(empty, 2, 2, limit=3, seed=5)
    assert [c.U for c in listing.cavities] == [c.U for c in again.cavities]


def test_bethe_local_measure_g0(g0):
    np.testing.assert_allclose(bethe_local_measure(g0, make_cavity(g0, [0])).probs, [0.5, 0.5])


def test_bethe_deviation_on_g0_is_zero(g0):
    ok, results = is_bethe_state(g0, None, epsilon=1e-12, ell=2)
    assert ok
    assert [(res.l, res.r) for res in results] == [(1, 1), (2, 1), (2, 2)]
    assert results[-1].deviation is None and results[-1].n_cavities == 0


def test_empty_graph_is_bethe(e3):
    ok, results = is_bethe_state(e3, None, epsilon=1e-12, ell=3)
    assert ok
    assert bethe_deviation(e3, 3, 3).deviation == pytest.approx(0.0, abs=1e-15)


def test_event_acts_like_pins(g0):
    event = EventSet.from_configs([(0, 0)], 2)
    result = bethe_deviation(g0, 1, 1, event)
    assert result.n_cavities == 2
    assert result.deviation == pytest.approx(0.0, abs=1e-12)
    subcube = bethe_deviation(make_path(), 1, 1, SubcubeEvent((2,), (1,)))
    assert subcube.deviation == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_connected_cavities_on_trees_are_exact(seed):
    graph = random_tree(seed, model="potts" if seed % 2 else "ksat")
    for l in (1, 2, 3):
        result = bethe_deviation(graph, l, 1)
        if result.deviation is not None:
            assert result.deviation < 1e-10


@pytest.mark.parametrize("seed", range(5))
def test_factorized_cavities_are_exact(seed):
    graph = random_tree(seed, n=7)
    result = bethe_deviation(graph, 2, 2)
    per_cavity = {tuple(c["U"]): c["deviation"] for c in result.per_cavity}
    for cavity in enumerate_cavities(graph, 2, 2).cavities:
        if factorization_check(graph, cavity) < 1e-12:
            assert per_cavity[cavity.U] < 1e-10


def test_factorization_check_on_path(path3):
    assert factorization_check(path3, make_cavity(path3, [1])) == pytest.approx(0.0, abs=1e-14)
    assert factorization_check(path3, make_cavity(path3, [0])) == pytest.approx(0.0, abs=1e-14)


def test_potts_suite_on_g0(g0):
    report = potts_bethe_suite(g0, math.log(2), r=0)
    assert report["score_a"] == pytest.approx(0.0, abs=1e-12)
    assert report["score_b"] == pytest.approx(1 / 24, abs=1e-12)
    assert report["non_cavity"] == []


def test_potts_suite_on_a_path():
    report = potts_bethe_suite(make_path(1.0), 1.0, r=1)
    assert report["score_a"] == pytest.approx(0.0, abs=1e-12)


def test_potts_suite_rejects_other_tables(g0):
    with pytest.raises(ValueError, match="non-Potts"):
        potts_bethe_suite(g0, 1.0, r=1)
    with pytest.raises(ValueError, match="non-Potts"):
        potts_bethe_suite(make_g0(), math.log(3), r=0)


def test_parallel_potts_edges_count_twice():
    table = potts_family(2, 1.0).psis[0]
    graph = build_graph(3, SpinDomain(2), [((0, 1), table), ((1, 2), table), ((2, 1), table)])
    assert edge_multiplicity(graph) == {(0, 1): 1, (1, 2): 2}
    # pinning x2 makes x1 feel both parallel edges
    event = SubcubeEvent((2,), (0,))
    assert potts_bethe_suite(graph, 1.0, r=0, event=event)["score_a"] == pytest.approx(0.0, abs=1e-12)
    assert potts_bp_residual(graph, 1.0, event) == pytest.approx(0.0, abs=1e-12)


def test_split_cavity_on_a_path_is_not_exact():
    # x0 and x3 are linked through x1 - x2 outside the cavity
    table = potts_family(2, 1.0).psis[0]
    graph = build_graph(4, SpinDomain(2), [((0, 1), table), ((1, 2), table), ((2, 3), table)])
    cavity = make_cavity(graph, [0, 3])
    assert factorization_check(graph, cavity) > 1e-3
    result = bethe_deviation(graph, 2, 2)
    per_cavity = {tuple(c["U"]): c["deviation"] for c in result.per_cavity}
    assert per_cavity[(0, 3)] > 1e-3


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(25))
def test_trees_are_exact(seed):
    graph = random_tree(seed, n=10 + 2 * (seed % 2), model="potts" if seed % 2 else "ksat")
    oracle = ConditionalGibbs(graph, None)
    for l in range(1, 5):
        for r in range(1, l + 1):
            result = bethe_deviation(graph, l, r, oracle=oracle)
            if result.deviation is None:
                continue
            if r == 1:
                assert result.deviation < 1e-9
                continue
            per_cavity = {tuple(c["U"]): c["deviation"] for c in result.per_cavity}
            for cavity in enumerate_cavities(graph, l, r).cavities:
                if factorization_check(graph, cavity) < 1e-12:
                    assert per_cavity[cavity.U] < 1e-9
    assert canonical_residual(graph) < 1e-9
    run = bp_iterate(graph, tol=1e-13)
    assert message_metric(run.messages, oracle.messages) < 1e-9


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(10))
def test_factorized_cavities_are_exact_under_subcube_events(seed):
    family = potts_family(2, 1.0) if seed % 2 else ksat_family(3, 1.0)
    graph = sample_graph(ModelSpec(n=8, family=family, d=2.0, seed=seed))
    rng = substream(seed, 99)
    sigma = sample_config(gibbs_table(graph).mu, seed)
    pinned = tuple(sorted(int(i) for i in rng.choice(graph.n, size=2, replace=False)))
    event = SubcubeEvent(pinned, tuple(sigma[i] for i in pinned))
    oracle = ConditionalGibbs(graph, event)
    for l, r in ((1, 1), (2, 1), (2, 2), (3, 1)):
        result = bethe_deviation(graph, l, r, event, oracle=oracle)
        per_cavity = {tuple(c["U"]): c["deviation"] for c in result.per_cavity}
        for cavity in enumerate_cavities(graph, l, r).cavities:
            if factorization_check(graph, cavity, event) < 1e-9:
                assert per_cavity[cavity.U] < 1e-6
