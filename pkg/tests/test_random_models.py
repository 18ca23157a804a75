# -*- coding: utf-8 -*-
import math

import numpy as np
import pytest
from scipy.stats import chisquare

from factor_graph import is_acyclic
from gibbs import DenseMeasure, config_index
from random_models import (
    ModelSpec,
    WeightFamily,
    ksat_family,
    model_spec_from_dict,
    potts_family,
    sample_acyclic_graph,
    sample_config,
    sample_configs,
    sample_graph,
    substream,
)


def test_potts_table():
    family = potts_family(2, math.log(2))
    np.testing.assert_allclose(family.psis[0].values, [0.5, 1.0, 1.0, 0.5])
    assert family.P == (1.0,)
    with pytest.raises(ValueError):
        potts_family(3, 0.0)


@pytest.mark.parametrize("k", [2, 3])
def test_ksat_tables(k):
    family = ksat_family(k, 1.0)
    assert len(family.psis) == 2 ** k
    for j, psi in enumerate(family.psis):
        expected = np.ones(2 ** k)
        expected[j] = math.exp(-1.0)
        np.testing.assert_allclose(psi.values, expected, atol=1e-15)


def test_fixed_m_and_empty_graph():
    graph = sample_graph(ModelSpec(n=5, family=potts_family(2, 1.0), m=7, seed=3))
    assert graph.m == 7 and graph.n == 5
    empty = sample_graph(ModelSpec(n=4, family=potts_family(2, 1.0), m=0))
    assert empty.m == 0


def test_sampling_is_deterministic():
    spec = ModelSpec(n=10, family=ksat_family(3, 1.0), d=2.0, seed=11)
    assert sample_graph(spec).to_json() == sample_graph(spec).to_json()
    other = sample_graph(spec.with_seed(12))
    assert other.n == 10


def test_poisson_mean():
    family = potts_family(2, 1.0)
    counts = [sample_graph(ModelSpec(n=10, family=family, d=2.0, seed=s)).m for s in range(400)]
    # E[m] = dn/k = 10, standard error of the mean sqrt(10/400)
    assert abs(np.mean(counts) - 10.0) < 4 * math.sqrt(10 / 400)


def test_acyclic_conditioning():
    spec = ModelSpec(n=10, family=potts_family(2, 1.0), d=1.0, seed=5)
    assert is_acyclic(sample_acyclic_graph(spec))


def test_spec_validation():
    with pytest.raises(ValueError):
        ModelSpec(n=5, family=potts_family(2, 1.0))
    with pytest.raises(ValueError):
        ModelSpec(n=5, family=potts_family(2, 1.0), d=1.0, m=3)
    with pytest.raises(ValueError):
        model_spec_from_dict({"model": "ising", "n": 3, "beta": 1.0, "d": 1.0})
    spec = model_spec_from_dict({"model": "ksat", "n": 6, "k": 3, "beta": 2.0, "m": 4, "seed": 9})
    assert (spec.n, spec.k, spec.m, spec.seed) == (6, 3, 4, 9)


def test_point_mass_sampling():
    mu = DenseMeasure.point_mass((1, 0, 1), 2)
    assert sample_config(mu, 0) == (1, 0, 1)
    assert set(sample_configs(mu, 50, 1).tolist()) == {config_index((1, 0, 1), 2)}


def test_g0_sampling_frequency(mu_g0):
    draws = sample_configs(mu_g0, 100_000, seed=4)
    freq = np.mean(draws == 0)
    sigma = math.sqrt((1 / 6) * (5 / 6) / 100_000)
    assert abs(freq - 1 / 6) < 4 * sigma


def test_substreams_differ_by_key():
    a = substream(0, 1, 0).random(4)
    b = substream(0, 1, 1).random(4)
    assert not np.allclose(a, b)
    np.testing.assert_array_equal(a, substream(0, 1, 0).random(4))


@pytest.mark.slow
def test_poisson_mean_over_many_draws():
    family = potts_family(2, 1.0)
    draws = 10_000
    counts = [sample_graph(ModelSpec(n=4, family=family, d=1.5, seed=s)).m for s in range(draws)]
    # dn/k = 3, which is also the variance of a single draw
    assert abs(np.mean(counts) - 3.0) < 3 * math.sqrt(3.0 / draws)


def test_neighbors_are_uniform():
    graph = sample_graph(ModelSpec(n=7, family=ksat_family(3, 1.0), m=3000, seed=21))
    neighbors = np.array([c.neighbors for c in graph.constraints])
    for position in range(3):
        counts = np.bincount(neighbors[:, position], minlength=7)
        assert chisquare(counts).pvalue > 1e-3
    assert chisquare(np.bincount(neighbors.ravel(), minlength=7)).pvalue > 1e-3


def test_table_choice_follows_P():
    psis = (potts_family(2, 0.5).psis[0], potts_family(2, 2.0).psis[0], potts_family(2, 3.0).psis[0])
    family = WeightFamily(psis=psis, P=(0.2, 0.5, 0.3))
    graph = sample_graph(ModelSpec(n=5, family=family, m=4000, seed=8))
    chosen = [next(j for j, psi in enumerate(psis) if c.weight is psi) for c in graph.constraints]
    counts = np.bincount(chosen, minlength=3)
    assert chisquare(counts, f_exp=np.array(family.P) * graph.m).pvalue > 1e-3


def test_uniform_table_choice_for_ksat():
    family = ksat_family(2, 1.0)
    graph = sample_graph(ModelSpec(n=6, family=family, m=2000, seed=13))
    chosen = [next(j for j, psi in enumerate(family.psis) if c.weight is psi) for c in graph.constraints]
    assert chisquare(np.bincount(chosen, minlength=4)).pvalue > 1e-3
