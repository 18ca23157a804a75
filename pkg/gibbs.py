# -*- coding: utf-8 -*-
"""
@description: Exact Gibbs measures by enumeration.

Configurations of Omega^n are indexed lexicographically with variable 0 most
significant, so the probability vector of a measure reshapes to a tensor of
shape (q,) * n whose axis i is variable i. All weights are accumulated in the
log domain; hard pins contribute -inf.
"""

import csv
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Iterable, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger
from scipy.special import logsumexp

from factor_graph import FactorGraph, SpinDomain
from messages import MessageSet

__all__ = [
    'DEFAULT_BUDGET',
    'BudgetExceededError',
    'ZeroNormalizerError',
    'DenseMeasure',
    'SubcubeEvent',
    'EventSet',
    'Event',
    'full_cube',
    'event_mask',
    'check_budget',
    'spin_column',
    'configurations',
    'config_index',
    'index_config',
    'log_weights',
    'GibbsTable',
    'gibbs_table',
    'marginal',
    'condition_subcube',
    'ConditionalGibbs',
    'standard_messages',
    'potts_edge_message',
]

DEFAULT_BUDGET = 2 ** 24


class BudgetExceededError(ValueError):
    """An enumeration or solver budget would be exceeded."""


class ZeroNormalizerError(ValueError):
    """A distribution that must be normalized has total mass zero."""


def check_budget(size: int, budget: int, what: str = "enumeration"):
    if size > budget:
        raise BudgetExceededError(f"{what} budget exceeded: {size} > {budget}")


def spin_column(n: int, q: int, i: int) -> np.ndarray:
    """Spin of variable i across all q^n configurations in lexicographic order."""
    return np.tile(np.repeat(np.arange(q, dtype=np.int64), q ** (n - 1 - i)), q ** i)


def configurations(n: int, q: int) -> np.ndarray:
    """All configurations as a (q^n, n) array of spins."""
    if n == 0:
        return np.zeros((1, 0), dtype=np.int64)
    return np.stack([spin_column(n, q, i) for i in range(n)], axis=1)


def config_index(config: Sequence[int], q: int) -> int:
    index = 0
    for s in config:
        index = index * q + int(s)
    return index


def index_config(index: int, n: int, q: int) -> Tuple[int, ...]:
    spins = []
    for _ in range(n):
        index, s = divmod(index, q)
        spins.append(s)
    return tuple(reversed(spins))


@dataclass(eq=False)
class DenseMeasure:
    """An explicit probability vector over Omega^n."""

    n: int
    q: int
    probs: np.ndarray

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=np.float64).reshape(-1)
        if len(self.probs) != self.q ** self.n:
            raise ValueError(f"Measure over {self.q}^{self.n} needs {self.q ** self.n} entries, got {len(self.probs)}")
        if np.any(self.probs < 0):
            raise ValueError("Measure has negative entries")
        total = self.probs.sum()
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"Measure is not normalized: total mass {total}")

    @property
    def omega(self) -> SpinDomain:
        return SpinDomain(self.q)

    @property
    def tensor(self) -> np.ndarray:
        return self.probs.reshape((self.q,) * self.n)

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.probs > 0)

    def mass(self, event) -> float:
        return float(self.probs[event_mask(event, self.n, self.q)].sum())

    def prob(self, config: Sequence[int]) -> float:
        return float(self.probs[config_index(config, self.q)])

    @classmethod
    def uniform(cls, n: int, q: int) -> "DenseMeasure":
        return cls(n, q, np.full(q ** n, 1.0 / q ** n))

    @classmethod
    def point_mass(cls, config: Sequence[int], q: int) -> "DenseMeasure":
        probs = np.zeros(q ** len(config))
        probs[config_index(config, q)] = 1.0
        return cls(len(config), q, probs)

    @classmethod
    def from_weights(cls, n: int, q: int, weights: np.ndarray) -> "DenseMeasure":
        weights = np.asarray(weights, dtype=np.float64)
        total = weights.sum()
        if total <= 0:
            raise ZeroNormalizerError("Cannot normalize a weight vector with zero total")
        return cls(n, q, weights / total)

    def to_csv(self, path: str):
        with open(path, 'w', newline='', encoding='utf-8') as f:
            writer = csv.writer(f)
            writer.writerow(['index', 'prob'])
            for i, p in enumerate(self.probs):
                writer.writerow([i, repr(float(p))])

    @classmethod
    def from_csv(cls, path: str, n: int, q: int) -> "DenseMeasure":
        probs = np.zeros(q ** n)
        with open(path, 'r', encoding='utf-8') as f:
            for row in csv.DictReader(f):
                probs[int(row['index'])] = float(row['prob'])
        return cls(n, q, probs)

    def __repr__(self):
        return f"DenseMeasure(n={self.n}, q={self.q}, support={len(self.support())})"


@dataclass(frozen=True)
class SubcubeEvent:
    """S^{I,sigma} = {tau : tau|_I = sigma}."""

    I: Tuple[int, ...]
    sigma: Tuple[int, ...]

    def __post_init__(self):
        if len(self.I) != len(self.sigma):
            raise ValueError(f"Subcube needs one spin per index: {len(self.I)} != {len(self.sigma)}")
        if len(set(self.I)) != len(self.I):
            raise ValueError(f"Subcube indices must be distinct, got {self.I}")
        pairs = sorted(zip((int(i) for i in self.I), (int(s) for s in self.sigma)))
        object.__setattr__(self, 'I', tuple(i for i, _ in pairs))
        object.__setattr__(self, 'sigma', tuple(s for _, s in pairs))

    def mask(self, n: int, q: int) -> np.ndarray:
        mask = np.ones(q ** n, dtype=bool)
        for i, s in zip(self.I, self.sigma):
            if not 0 <= i < n or not 0 <= s < q:
                raise ValueError(f"Subcube entry ({i}, {s}) invalid for n={n}, q={q}")
            mask &= spin_column(n, q, i) == s
        return mask


@dataclass(frozen=True)
class EventSet:
    """An explicit set of configuration indices."""

    indices: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, 'indices', tuple(sorted(set(int(i) for i in self.indices))))

    @classmethod
    def from_configs(cls, configs: Iterable[Sequence[int]], q: int) -> "EventSet":
        return cls(tuple(config_index(c, q) for c in configs))

    def mask(self, n: int, q: int) -> np.ndarray:
        mask = np.zeros(q ** n, dtype=bool)
        if self.indices:
            if self.indices[0] < 0 or self.indices[-1] >= q ** n:
                raise ValueError(f"Event index out of range for {q}^{n} configurations")
            mask[list(self.indices)] = True
        return mask


Event = Union[SubcubeEvent, EventSet, None]


def full_cube() -> SubcubeEvent:
    return SubcubeEvent((), ())


def event_mask(event: Event, n: int, q: int) -> np.ndarray:
    """Boolean mask of an event; None is the full cube."""
    if event is None:
        return np.ones(q ** n, dtype=bool)
    return event.mask(n, q)


def _constraint_log_weight(graph: FactorGraph, a: int, columns: Dict[int, np.ndarray]) -> np.ndarray:
    constraint = graph.constraints[a]
    q = graph.q
    index = np.zeros(q ** graph.n, dtype=np.int64)
    for x in constraint.neighbors:
        if x not in columns:
            columns[x] = spin_column(graph.n, q, x)
        index = index * q + columns[x]
    with np.errstate(divide='ignore'):
        return np.log(constraint.weight.values)[index]


def log_weights(graph: FactorGraph, exclude: Iterable[int] = (), budget: int = DEFAULT_BUDGET) -> np.ndarray:
    """log psi_G over all configurations, skipping the excluded constraint nodes."""
    check_budget(graph.q ** graph.n, budget)
    exclude = set(exclude)
    columns: Dict[int, np.ndarray] = {}
    total = np.zeros(graph.q ** graph.n)
    for a in range(graph.m):
        if a not in exclude:
            total += _constraint_log_weight(graph, a, columns)
    return total


class GibbsTable(NamedTuple):
    z: float
    log_z: float
    mu: DenseMeasure


def _normalize_log(lw: np.ndarray, what: str) -> Tuple[float, np.ndarray]:
    log_z = float(logsumexp(lw)) if len(lw) else -np.inf
    if not np.isfinite(log_z):
        raise ZeroNormalizerError(f"{what}: all configurations have zero weight")
    return log_z, np.exp(lw - log_z)


def gibbs_table(graph: FactorGraph, event: Event = None, budget: int = DEFAULT_BUDGET) -> GibbsTable:
    """
    Partition function and Gibbs measure of G, optionally restricted to an event.

    With hard pins (or an event) Z sums the surviving configurations only.
    """
    lw = log_weights(graph, budget=budget)
    if event is not None:
        lw = np.where(event_mask(event, graph.n, graph.q), lw, -np.inf)
    log_z, probs = _normalize_log(lw, "Gibbs table")
    logger.debug(f"Gibbs table of {graph}: log Z = {log_z:.6f}")
    return GibbsTable(z=float(np.exp(log_z)), log_z=log_z, mu=DenseMeasure(graph.n, graph.q, probs))


def marginal(mu: DenseMeasure, variables: Iterable[int]) -> DenseMeasure:
    """mu_I, over the variables in the given order."""
    variables = [int(i) for i in variables]
    if len(set(variables)) != len(variables):
        raise ValueError(f"Marginal variables must be distinct, got {variables}")
    for i in variables:
        if not 0 <= i < mu.n:
            raise ValueError(f"invalid index {i} for a measure on {mu.n} variables")
    if not variables:
        return DenseMeasure(0, mu.q, np.ones(1))
    ordered = sorted(variables)
    others = tuple(i for i in range(mu.n) if i not in set(variables))
    table = mu.tensor.sum(axis=others) if others else mu.tensor
    table = np.transpose(table, [ordered.index(i) for i in variables])
    probs = table.reshape(-1)
    return DenseMeasure(len(variables), mu.q, probs / probs.sum())


def condition_subcube(mu: DenseMeasure, event: Event) -> DenseMeasure:
    """mu[.|S], with the uniform distribution on S when mu(S) = 0."""
    mask = event_mask(event, mu.n, mu.q)
    if not mask.any():
        raise ValueError("Cannot condition on an empty event set")
    restricted = np.where(mask, mu.probs, 0.0)
    total = restricted.sum()
    if total == 0:
        return DenseMeasure(mu.n, mu.q, mask / mask.sum())
    return DenseMeasure(mu.n, mu.q, restricted / total)


class ConditionalGibbs:
    """
    mu_G[.|S] together with the quantities derived from it by enumeration.

    Marginals and the standard messages are cached; the instance is read-only
    once built.
    """

    def __init__(self, graph: FactorGraph, event: Event = None, budget: int = DEFAULT_BUDGET):
        check_budget(graph.q ** graph.n, budget)
        self.graph = graph
        self.event = event
        self.budget = budget
        self._mask = event_mask(event, graph.n, graph.q)
        if not self._mask.any():
            raise ValueError("Cannot condition on an empty event set")
        self._columns: Dict[int, np.ndarray] = {}
        self._constraint_logs: Dict[int, np.ndarray] = {}
        self._marginals: Dict[Tuple[int, ...], DenseMeasure] = {}

    def constraint_log(self, a: int) -> np.ndarray:
        if a not in self._constraint_logs:
            self._constraint_logs[a] = _constraint_log_weight(self.graph, a, self._columns)
        return self._constraint_logs[a]

    def restricted_log_weights(self, constraints: Iterable[int]) -> np.ndarray:
        """log of prod_{b in constraints} psi_b restricted to S."""
        total = np.zeros(self.graph.q ** self.graph.n)
        for a in sorted(set(constraints)):
            total += self.constraint_log(a)
        return np.where(self._mask, total, -np.inf)

    @cached_property
    def measure(self) -> DenseMeasure:
        _, probs = _normalize_log(self.restricted_log_weights(range(self.graph.m)), "Conditional Gibbs measure")
        return DenseMeasure(self.graph.n, self.graph.q, probs)

    def marginal(self, variables: Sequence[int]) -> DenseMeasure:
        key = tuple(variables)
        if key not in self._marginals:
            self._marginals[key] = marginal(self.measure, key)
        return self._marginals[key]

    def variable_marginal(self, x: int, constraints: Iterable[int]) -> np.ndarray:
        """Marginal of x given S under the weights of the listed constraints only."""
        n, q = self.graph.n, self.graph.q
        lw = self.restricted_log_weights(constraints).reshape(q ** x, q, q ** (n - 1 - x))
        per_spin = logsumexp(lw, axis=(0, 2))
        total = logsumexp(per_spin)
        if not np.isfinite(total):
            raise ZeroNormalizerError(f"Zero normalizer for the marginal of variable {x} given S")
        return np.exp(per_spin - total)

    def a_to_x(self, a: int, x: int) -> np.ndarray:
        """mu_{a->x}[.|S]: drop every constraint of dx except a."""
        around = set(self.graph.constraints_of(x))
        if a not in around:
            raise ValueError(f"Variable {x} is not adjacent to constraint {a}")
        return self.variable_marginal(x, [b for b in range(self.graph.m) if b not in around or b == a])

    def x_to_a(self, x: int, a: int) -> np.ndarray:
        """mu_{x->a}[.|S]: drop a only."""
        if a not in self.graph.constraints_of(x):
            raise ValueError(f"Variable {x} is not adjacent to constraint {a}")
        return self.variable_marginal(x, [b for b in range(self.graph.m) if b != a])

    @cached_property
    def messages(self) -> MessageSet:
        """Standard messages given S, rows in incidence order."""
        graph = self.graph
        shape = (len(graph.incidences), graph.q)
        var_to_factor, factor_to_var = np.zeros(shape), np.zeros(shape)
        for row, (x, a) in enumerate(graph.incidences):
            factor_to_var[row] = self.a_to_x(a, x)
            var_to_factor[row] = self.x_to_a(x, a)
        return MessageSet(graph, var_to_factor, factor_to_var)

    def edge_message(self, v: int, w: int) -> np.ndarray:
        """Potts message w->v: marginal of w given S once every constraint on the pair {v, w} is removed."""
        pair = {v, w}
        keep = [b for b, c in enumerate(self.graph.constraints) if set(c.variables) != pair]
        return self.variable_marginal(w, keep)


def standard_messages(graph: FactorGraph, event: Event = None, budget: int = DEFAULT_BUDGET) -> MessageSet:
    return ConditionalGibbs(graph, event, budget).messages


def potts_edge_message(graph: FactorGraph, v: int, w: int, event: Event = None,
                       budget: int = DEFAULT_BUDGET) -> np.ndarray:
    return ConditionalGibbs(graph, event, budget).edge_message(v, w)
