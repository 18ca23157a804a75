# -*- coding: utf-8 -*-
import numpy as np
import pytest
from hypothesis import strategies as st

from factor_graph import FactorGraph, SpinDomain, WeightTable, build_graph
from gibbs import DenseMeasure
from random_models import ModelSpec, ksat_family, potts_family, sample_acyclic_graph

# psi(equal) = 0.5, psi(different) = 1, i.e. the Potts table at beta = ln 2
G0_TABLE = (0.5, 1.0, 1.0, 0.5)


def make_g0() -> FactorGraph:
    return build_graph(2, SpinDomain(2), [((0, 1), WeightTable(2, G0_TABLE))])


def make_path(beta: float = 1.0) -> FactorGraph:
    """x0 - a - x1 - b - x2 with Potts tables."""
    table = potts_family(2, beta).psis[0]
    return build_graph(3, SpinDomain(2), [((0, 1), table), ((1, 2), table)])


def make_triangle(beta: float = 1.0) -> FactorGraph:
    table = potts_family(2, beta).psis[0]
    return build_graph(3, SpinDomain(2), [((0, 1), table), ((1, 2), table), ((0, 2), table)])


def random_tree(seed: int, n: int = 8, model: str = "potts", d: float = 1.0) -> FactorGraph:
    family = potts_family(2, 1.0) if model == "potts" else ksat_family(3, 1.5)
    return sample_acyclic_graph(ModelSpec(n=n, family=family, seed=seed, d=d))


@pytest.fixture
def g0() -> FactorGraph:
    return make_g0()


@pytest.fixture
def e3() -> FactorGraph:
    return FactorGraph(3, SpinDomain(2), [])


@pytest.fixture
def path3() -> FactorGraph:
    return make_path()


@pytest.fixture
def mu_g0() -> DenseMeasure:
    return DenseMeasure(2, 2, np.array([1, 2, 2, 1]) / 6)


@st.composite
def measures(draw, n: int = 2, q: int = 2, allow_zeros: bool = True):
    """Random probability vectors on q^n configurations."""
    low = 0.0 if allow_zeros else 0.05
    weights = draw(st.lists(st.floats(min_value=low, max_value=1.0), min_size=q ** n, max_size=q ** n)
                   .filter(lambda w: sum(w) > 0.1))
    weights = np.asarray(weights)
    return DenseMeasure(n, q, weights / weights.sum())
