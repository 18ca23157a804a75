# -*- coding: utf-8 -*-
import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import measures
from cut_metric import product_measure
from gibbs import DenseMeasure
from observables import (
    IntensiveObservable,
    continuity_probe,
    observable_average,
    observable_family,
    overlap_d1,
    overlap_distribution,
    overlap_matrix,
)


def fraction_of_zeros(n):
    return IntensiveObservable(k=1, l=1, index_sets=(tuple(range(n)),), patterns=((0,),))


def test_single_replica_examples():
    assert observable_average(DenseMeasure.uniform(3, 2), fraction_of_zeros(3)) == pytest.approx(0.5)
    assert observable_average(DenseMeasure.point_mass((0, 0, 0), 2), fraction_of_zeros(3)) == pytest.approx(1.0)


def test_two_replicas_on_g0(mu_g0):
    f = IntensiveObservable(k=2, l=1, index_sets=((0, 1),), patterns=((0,), (0,)))
    assert observable_average(mu_g0, f) == pytest.approx(0.25, abs=1e-12)


def test_pair_observable_matches_direct_evaluation(mu_g0):
    f = IntensiveObservable(k=1, l=2, index_sets=((0, 1), (0, 1)), patterns=((0, 1),))
    direct = sum(p * f.evaluate([config]) for config, p in
                 zip([(0, 0), (0, 1), (1, 0), (1, 1)], mu_g0.probs))
    assert observable_average(mu_g0, f) == pytest.approx(direct, abs=1e-12)
    # a repeated index with clashing spins never fires
    clash = IntensiveObservable(k=1, l=2, index_sets=((0,), (0,)), patterns=((0, 1),))
    assert observable_average(mu_g0, clash) == 0.0


def test_observable_validation(mu_g0):
    with pytest.raises(ValueError):
        IntensiveObservable(k=1, l=2, index_sets=((0,),), patterns=((0, 0),))
    with pytest.raises(ValueError):
        IntensiveObservable(k=2, l=1, index_sets=((0,),), patterns=((0,),))
    with pytest.raises(ValueError, match="invalid index"):
        observable_average(mu_g0, fraction_of_zeros(3))


def test_observable_family():
    family = observable_family(3, 2, k_max=1, l_max=1)
    # all, even and odd positions times two spins
    assert len(family) == 6
    assert {f.index_sets for f in family} == {((0, 1, 2),), ((0, 2),), ((1,),)}
    assert len(observable_family(1, 2, k_max=1, l_max=1)) == 4


def test_overlap_matrix():
    np.testing.assert_allclose(overlap_matrix([0, 1, 1, 0], [0, 1, 0, 0], 2), [[0.5, 0.0], [0.25, 0.25]])
    with pytest.raises(ValueError):
        overlap_matrix([0, 1], [0], 2)


def test_point_mass_overlap():
    law = overlap_distribution(DenseMeasure.point_mass((0, 1, 1), 2))
    assert len(law) == 1
    np.testing.assert_allclose(law.atoms[0], [[1 / 3, 0], [0, 2 / 3]])


def test_uniform_single_spin_overlap(tmp_path):
    law = overlap_distribution(DenseMeasure.uniform(1, 2))
    assert len(law) == 4
    np.testing.assert_allclose(law.weights, np.full(4, 0.25))
    assert sorted(tuple(atom.reshape(-1)) for atom in law.atoms) == [
        (0, 0, 0, 1), (0, 0, 1, 0), (0, 1, 0, 0), (1, 0, 0, 0)]
    path = tmp_path / "overlaps.csv"
    law.to_csv(str(path))
    with open(path, newline='') as f:
        rows = list(csv.reader(f))
    assert rows[0] == ['omega', 'omega_prime', 'value', 'weight']
    assert len(rows) == 1 + 4 * 4


@settings(max_examples=20, deadline=None)
@given(measures(n=3))
def test_overlap_weights_sum_to_one(mu):
    law = overlap_distribution(mu)
    assert law.weights.sum() == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(law.atoms.sum(axis=(1, 2)), 1.0)
    assert overlap_d1(law, law) == pytest.approx(0.0, abs=1e-12)


def test_probe_of_identical_measures(mu_g0):
    probe = continuity_probe(mu_g0, mu_g0)
    assert probe.cutm == pytest.approx(0.0, abs=1e-9)
    assert probe.gap == pytest.approx(0.0, abs=1e-12)
    assert probe.d1 == pytest.approx(0.0, abs=1e-12)
    assert set(probe.to_json()) == {"cutm", "cutm_mode", "observable_gap", "overlap_d1", "cut"}
    assert probe.to_json()["cut"]["value"] == probe.cutm


@pytest.mark.parametrize("n", [2, 3, 4])
def test_probe_of_nearby_point_masses(n):
    a = DenseMeasure.point_mass((0,) * n, 2)
    b = DenseMeasure.point_mass((1,) + (0,) * (n - 1), 2)
    probe = continuity_probe(a, b)
    assert probe.cutm == pytest.approx(1.0 / n)
    assert probe.gap <= 2.0 / n + 1e-12
    assert probe.d1 > 0


@settings(max_examples=30, deadline=None)
@given(measures(n=3), st.booleans())
def test_zero_cut_distance_means_equal_observables(mu, identical):
    nu = mu if identical else DenseMeasure(3, 2, mu.probs[::-1].copy())
    probe = continuity_probe(mu, nu)
    if probe.cutm < 1e-9:
        assert probe.gap < 1e-6
        assert probe.d1 < 1e-6


@pytest.mark.parametrize("n", [2, 4, 6, 8])
def test_overlap_variance_shrinks_for_products(n):
    p = np.random.default_rng(n).uniform(0.1, 0.9, size=n)
    law = overlap_distribution(product_measure([[x, 1 - x] for x in p]))
    entries = law.atoms[:, 0, 0]
    mean = float(np.dot(law.weights, entries))
    variance = float(np.dot(law.weights, (entries - mean) ** 2))
    # entry (0, 0) averages n independent indicators with success probability p_i^2
    assert mean == pytest.approx(float(np.mean(p ** 2)), abs=1e-12)
    assert variance == pytest.approx(float(np.sum(p ** 2 * (1 - p ** 2))) / n ** 2, abs=1e-12)
    assert variance <= 1 / (4 * n)
