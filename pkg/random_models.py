# -*- coding: utf-8 -*-
"""
@description: Seeded generators for the random factor graph G(n, m, P) and its
Poissonized version G(n, Po(dn/k), P), with the Potts and k-SAT weight families.

Every sampled object gets its own substream: a SeedSequence child keyed by
(purpose, index), drawn through the counter-based Philox generator, so results
do not depend on the order in which objects are generated.

k-SAT spin encoding: spin 0 is the literal value +1, spin 1 is -1.
"""

import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
from loguru import logger
from scipy.stats import poisson

from factor_graph import Constraint, FactorGraph, SpinDomain, WeightTable, is_acyclic
from gibbs import DenseMeasure, index_config

__all__ = [
    'WeightFamily',
    'ModelSpec',
    'potts_family',
    'ksat_family',
    'substream',
    'sample_graph',
    'sample_acyclic_graph',
    'sample_config',
    'sample_configs',
    'model_spec_from_dict',
]

# substream purposes
_STREAM_M = 0
_STREAM_CONSTRAINT = 1
_STREAM_RETRY = 2


@dataclass(frozen=True)
class WeightFamily:
    """A finite set of weight tables Psi with a distribution P on it."""

    psis: Tuple[WeightTable, ...]
    P: Tuple[float, ...]

    def __post_init__(self):
        if not self.psis or len(self.psis) != len(self.P):
            raise ValueError("Weight family needs one probability per table")
        if any(p < 0 for p in self.P) or abs(sum(self.P) - 1.0) > 1e-12:
            raise ValueError(f"Weight family probabilities must sum to 1, got {sum(self.P)}")
        arities = {psi.arity for psi in self.psis}
        qs = {psi.q for psi in self.psis}
        if len(arities) != 1 or len(qs) != 1:
            raise ValueError("All tables of a weight family must share arity and spin domain")

    @property
    def k(self) -> int:
        return self.psis[0].arity

    @property
    def q(self) -> int:
        return self.psis[0].q


def potts_family(q: int, beta: float) -> WeightFamily:
    """psi_beta(s1, s2) = exp(-beta * 1{s1 = s2}), a single table."""
    if int(q) != q or q < 2:
        raise ValueError(f"Potts model needs q >= 2, got {q}")
    if not beta > 0:
        raise ValueError(f"Potts model needs beta > 0, got {beta}")
    table = np.where(np.eye(q, dtype=bool), math.exp(-beta), 1.0)
    return WeightFamily(psis=(WeightTable(2, table),), P=(1.0,))


def ksat_family(k: int, beta: float) -> WeightFamily:
    """
    2^k clause tables, uniform P.

    psi_xi(sigma) = 1 - (1 - e^-beta) 2^-k prod_i (1 + xi_i sigma_i), i.e. e^-beta
    exactly when sigma = xi and 1 otherwise. Table j has xi = index_config(j).
    """
    if int(k) != k or k < 2:
        raise ValueError(f"k-SAT needs k >= 2, got {k}")
    if not beta > 0:
        raise ValueError(f"k-SAT needs beta > 0, got {beta}")
    signs = np.array([1, -1])
    psis = []
    for j in range(2 ** k):
        xi = signs[list(index_config(j, k, 2))]
        values = np.empty(2 ** k)
        for i in range(2 ** k):
            sigma = signs[list(index_config(i, k, 2))]
            values[i] = 1.0 - (1.0 - math.exp(-beta)) / 2 ** k * np.prod(1 + xi * sigma)
        psis.append(WeightTable(k, values))
    return WeightFamily(psis=tuple(psis), P=tuple([1.0 / 2 ** k] * 2 ** k))


@dataclass(frozen=True)
class ModelSpec:
    n: int
    family: WeightFamily
    seed: int = 0
    # average degree; m ~ Po(dn/k)
    d: Optional[float] = None
    # fixed number of constraints
    m: Optional[int] = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"Model needs n >= 1, got {self.n}")
        if (self.d is None) == (self.m is None):
            raise ValueError("Exactly one of d or m must be set")
        if self.d is not None and not self.d > 0:
            raise ValueError(f"Average degree must be positive, got {self.d}")
        if self.m is not None and self.m < 0:
            raise ValueError(f"Constraint count must be >= 0, got {self.m}")

    @property
    def k(self) -> int:
        return self.family.k

    def with_seed(self, seed: int) -> "ModelSpec":
        return ModelSpec(n=self.n, family=self.family, seed=seed, d=self.d, m=self.m)


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent Philox generator for the object identified by key."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=tuple(key))))


def _sample_constraint_count(spec: ModelSpec) -> int:
    if spec.m is not None:
        return spec.m
    lam = spec.d * spec.n / spec.k
    u = substream(spec.seed, _STREAM_M).random()
    return int(poisson.ppf(u, lam))


def sample_graph(spec: ModelSpec) -> FactorGraph:
    """Draw G(n, m, P); with d set, m ~ Po(dn/k) is drawn by inversion first."""
    m = _sample_constraint_count(spec)
    P = np.asarray(spec.family.P)
    cdf = np.cumsum(P)
    constraints = []
    for i in range(m):
        rng = substream(spec.seed, _STREAM_CONSTRAINT, i)
        neighbors = tuple(int(x) for x in rng.integers(0, spec.n, size=spec.k))
        j = min(int(np.searchsorted(cdf, rng.random(), side='right')), len(P) - 1)
        constraints.append(Constraint(neighbors, spec.family.psis[j]))
    graph = FactorGraph(spec.n, SpinDomain(spec.family.q), constraints)
    logger.debug(f"Sampled {graph} from seed {spec.seed}")
    return graph


def sample_acyclic_graph(spec: ModelSpec, max_tries: int = 1000) -> FactorGraph:
    """The model conditioned on an acyclic incidence graph, by rejection over derived seeds."""
    for attempt in range(max_tries):
        seed = spec.seed if attempt == 0 else int(substream(spec.seed, _STREAM_RETRY, attempt).integers(2 ** 63))
        graph = sample_graph(spec.with_seed(seed))
        if is_acyclic(graph):
            return graph
    raise ValueError(f"No acyclic graph found in {max_tries} tries for {spec}")


def _check_normalized(mu: DenseMeasure):
    if abs(mu.probs.sum() - 1.0) > 1e-9:
        raise ValueError("unnormalized measure")


def sample_configs(mu: DenseMeasure, size: int, seed: int) -> np.ndarray:
    """Exact inverse-CDF draws; returns configuration indices."""
    _check_normalized(mu)
    cdf = np.cumsum(mu.probs)
    u = substream(seed, 0).random(size) * cdf[-1]
    return np.minimum(np.searchsorted(cdf, u, side='right'), len(cdf) - 1)


def sample_config(mu: DenseMeasure, seed: int) -> Tuple[int, ...]:
    index = int(sample_configs(mu, 1, seed)[0])
    return index_config(index, mu.n, mu.q)


def model_spec_from_dict(data: Dict) -> ModelSpec:
    """Parse {"model": "potts"|"ksat", "n", "k", "q", "beta", "d" or "m", "seed"}."""
    model = data.get("model", "potts")
    if model == "potts":
        if int(data.get("k", 2)) != 2:
            raise ValueError("Potts model has k = 2")
        family = potts_family(int(data.get("q", 2)), float(data["beta"]))
    elif model == "ksat":
        family = ksat_family(int(data.get("k", 3)), float(data["beta"]))
    else:
        raise ValueError(f"Unknown model {model}, expected potts or ksat")
    d = data.get("d")
    m = data.get("m")
    return ModelSpec(
        n=int(data["n"]),
        family=family,
        seed=int(data.get("seed", 0)),
        d=None if d is None else float(d),
        m=None if m is None else int(m),
    )
