# -*- coding: utf-8 -*-
"""
@description: Intensive observables, their Gibbs averages, overlap
distributions and the continuity probe comparing both against the cut metric.

A (k, l)-intensive observable is given by index sets I_1..I_l and spin patterns
tau^(j) = (tau_1^(j), .., tau_l^(j)) for the replicas j = 1..k:
    f(s^1, .., s^k) = n^-l sum_{i_1 in I_1, .., i_l in I_l} prod_j 1{s^j_{i_1} = tau_1^(j), .., s^j_{i_l} = tau_l^(j)}.
"""

import csv
import itertools
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from cut_metric import CutResult, cut_distance, wasserstein_d1
from gibbs import DEFAULT_BUDGET, DenseMeasure, check_budget, configurations, marginal

__all__ = [
    'IntensiveObservable',
    'observable_average',
    'observable_family',
    'OverlapDistribution',
    'overlap_matrix',
    'overlap_distribution',
    'overlap_d1',
    'ContinuityProbe',
    'continuity_probe',
]


@dataclass(frozen=True)
class IntensiveObservable:
    k: int
    l: int
    # I_1, .., I_l
    index_sets: Tuple[Tuple[int, ...], ...]
    # patterns[j] = (tau_1^(j), .., tau_l^(j))
    patterns: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        if self.k < 1 or self.l < 1:
            raise ValueError(f"Observable needs k, l >= 1, got k={self.k}, l={self.l}")
        if len(self.index_sets) != self.l:
            raise ValueError(f"Observable needs {self.l} index sets, got {len(self.index_sets)}")
        if len(self.patterns) != self.k or any(len(p) != self.l for p in self.patterns):
            raise ValueError(f"Observable needs {self.k} spin patterns of length {self.l}")

    def _tuples(self):
        return itertools.product(*self.index_sets)

    def evaluate(self, configs: Sequence[Sequence[int]]) -> float:
        """f on k explicit configurations."""
        if len(configs) != self.k:
            raise ValueError(f"Observable takes {self.k} configurations, got {len(configs)}")
        n = len(configs[0])
        hits = 0
        for indices in self._tuples():
            hits += all(all(config[i] == t for i, t in zip(indices, pattern))
                        for config, pattern in zip(configs, self.patterns))
        return hits / n ** self.l

    def to_json(self) -> Dict:
        return {"k": self.k, "l": self.l, "index_sets": [list(s) for s in self.index_sets],
                "patterns": [list(p) for p in self.patterns]}


def observable_average(mu: DenseMeasure, f: IntensiveObservable) -> float:
    """
    <f> under k independent replicas of mu, summed over index tuples.

    Each tuple needs one joint marginal of its distinct indices; repeated
    indices with clashing spins contribute 0.
    """
    for index_set in f.index_sets:
        if any(not 0 <= i < mu.n for i in index_set):
            raise ValueError(f"invalid index in {index_set} for n={mu.n}")
    joint: Dict[Tuple[int, ...], np.ndarray] = {}
    total = 0.0
    for indices in f._tuples():
        distinct = tuple(sorted(set(indices)))
        if distinct not in joint:
            joint[distinct] = marginal(mu, distinct).tensor
        term = 1.0
        for pattern in f.patterns:
            spins = {}
            for i, t in zip(indices, pattern):
                if spins.setdefault(i, t) != t:
                    term = 0.0
                    break
            if term == 0.0:
                break
            term *= joint[distinct][tuple(spins[i] for i in distinct)]
        total += term
    return float(total) / mu.n ** f.l


def observable_family(n: int, q: int, k_max: int = 2, l_max: int = 2,
                      index_sets: Optional[Sequence[Sequence[int]]] = None) -> List[IntensiveObservable]:
    """
    Every (k <= k_max, l <= l_max) observable whose index sets come from the
    given choices, by default all variables, the odd and the even positions
    (1-based, so odd positions are 0, 2, 4, ..).
    """
    if index_sets is None:
        index_sets = [tuple(range(n)), tuple(range(0, n, 2)), tuple(range(1, n, 2))]
    choices = [tuple(s) for s in index_sets if len(s)]
    family = []
    for k in range(1, k_max + 1):
        for l in range(1, l_max + 1):
            for sets in itertools.product(choices, repeat=l):
                for flat in itertools.product(range(q), repeat=k * l):
                    patterns = tuple(tuple(flat[j * l:(j + 1) * l]) for j in range(k))
                    family.append(IntensiveObservable(k=k, l=l, index_sets=sets, patterns=patterns))
    return family


def overlap_matrix(sigma: Sequence[int], tau: Sequence[int], q: int) -> np.ndarray:
    """rho(omega, omega') = (1/n) #{i : sigma_i = omega, tau_i = omega'}."""
    sigma, tau = np.asarray(sigma), np.asarray(tau)
    if sigma.shape != tau.shape:
        raise ValueError("Overlap needs configurations of equal length")
    rho = np.zeros((q, q))
    np.add.at(rho, (sigma, tau), 1.0)
    return rho / len(sigma)


@dataclass(eq=False)
class OverlapDistribution:
    """Atoms are integer count matrices (flattened q x q); values are counts / n."""

    n: int
    q: int
    counts: np.ndarray
    weights: np.ndarray

    @property
    def atoms(self) -> np.ndarray:
        return self.counts.reshape(-1, self.q, self.q) / self.n

    def as_atom_list(self) -> List[Tuple[np.ndarray, float]]:
        return [(atom.reshape(-1), float(w)) for atom, w in zip(self.atoms, self.weights)]

    def to_csv(self, path: str):
        """Rows omega,omega_prime,value,weight; q^2 consecutive rows per atom."""
        with open(path, 'w', newline='', encoding='utf-8') as f:
            writer = csv.writer(f)
            writer.writerow(['omega', 'omega_prime', 'value', 'weight'])
            for atom, w in zip(self.atoms, self.weights):
                for omega, omega_prime in itertools.product(range(self.q), repeat=2):
                    writer.writerow([omega, omega_prime, repr(float(atom[omega, omega_prime])), repr(float(w))])

    def __len__(self):
        return len(self.weights)


def overlap_distribution(mu: DenseMeasure, budget: int = DEFAULT_BUDGET) -> OverlapDistribution:
    """Exact law of rho_{Sigma,Tau} for independent Sigma, Tau ~ mu; equal matrices merged."""
    support = mu.support()
    check_budget(len(support) ** 2, budget, "overlap pair")
    digits = configurations(mu.n, mu.q)[support]
    left, right = np.repeat(np.arange(len(support)), len(support)), np.tile(np.arange(len(support)), len(support))
    codes = digits[left] * mu.q + digits[right]
    counts = np.stack([(codes == c).sum(axis=1) for c in range(mu.q ** 2)], axis=1)
    unique, inverse = np.unique(counts, axis=0, return_inverse=True)
    mass = mu.probs[support]
    weights = np.bincount(inverse.reshape(-1), weights=mass[left] * mass[right], minlength=len(unique))
    logger.debug(f"Overlap distribution of {mu}: {len(unique)} atoms")
    return OverlapDistribution(n=mu.n, q=mu.q, counts=unique, weights=weights / weights.sum())


def overlap_d1(first: OverlapDistribution, second: OverlapDistribution) -> float:
    """Transport distance between two overlap laws, TV between matrices as ground cost."""
    if first.q != second.q:
        raise ValueError("Overlap distributions over different spin domains")
    return wasserstein_d1(first.as_atom_list(), second.as_atom_list())


@dataclass
class ContinuityProbe:
    cutm: float
    cutm_mode: str
    gap: float
    d1: float
    cut: Optional[CutResult] = None

    def to_json(self) -> Dict:
        return {"cutm": self.cutm, "cutm_mode": self.cutm_mode, "observable_gap": self.gap, "overlap_d1": self.d1,
                "cut": None if self.cut is None else self.cut.to_json()}


def continuity_probe(mu: DenseMeasure, nu: DenseMeasure, family: Optional[Sequence[IntensiveObservable]] = None,
                     mode: str = "exact", budget: int = DEFAULT_BUDGET) -> ContinuityProbe:
    """Cutm(mu, nu), the largest observable gap over the family and D1(O_mu, O_nu)."""
    if (mu.n, mu.q) != (nu.n, nu.q):
        raise ValueError(f"Continuity probe needs measures on the same cube, got {mu} and {nu}")
    family = observable_family(mu.n, mu.q) if family is None else family
    result = cut_distance(mu, nu, mode=mode, fallback=True)
    gap = max((abs(observable_average(mu, f) - observable_average(nu, f)) for f in family), default=0.0)
    d1 = overlap_d1(overlap_distribution(mu, budget), overlap_distribution(nu, budget))
    return ContinuityProbe(cutm=result.value, cutm_mode="upper" if result.fallback else result.mode,
                           gap=gap, d1=d1, cut=result)
