# -*- coding: utf-8 -*-
"""
@description: Factor graphs over a finite spin domain.

A factor graph has variables 0..n-1 and constraint nodes, each with an ordered
neighbour tuple (repeats allowed) and a weight table indexed lexicographically
with the first neighbour most significant. Hard pins are unary 0/1 indicator
constraints and are the only tables allowed to contain zeros.

JSON file format (neighbours are 1-based on disk):
    {"n": 3, "q": 2, "constraints": [{"neighbors": [1, 2], "weights": [0.5, 1, 1, 0.5]}]}
"""

import json
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
from loguru import logger

__all__ = [
    'SpinDomain',
    'WeightTable',
    'Constraint',
    'HardPin',
    'FactorGraph',
    'build_graph',
    'induced_subgraph',
    'neighborhood',
    'is_acyclic',
    'pin_graph',
    'connected_components',
    'variable_distances',
]


@dataclass(frozen=True)
class SpinDomain:
    """Spins are the integers 0..size-1."""

    size: int

    def __post_init__(self):
        if int(self.size) != self.size or self.size < 2:
            raise ValueError(f"Spin domain size must be an integer >= 2, got {self.size}")

    @property
    def spins(self) -> range:
        return range(self.size)


@dataclass(frozen=True, eq=False)
class WeightTable:
    """Weight function psi: Omega^k -> (0, inf), stored as a flat lexicographic table."""

    # Number of arguments k
    arity: int
    # Flat table of length q^k, first argument most significant
    values: np.ndarray
    # Hard tables may contain zeros (pins only)
    hard: bool = False

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64).reshape(-1)
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)
        if self.arity < 1:
            raise ValueError(f"Weight table arity must be positive, got {self.arity}")
        if not np.all(np.isfinite(values)):
            raise ValueError("Weight table values must be finite")
        if self.hard:
            if np.any(values < 0) or not np.any(values > 0):
                raise ValueError("Hard weight table needs non-negative values with at least one positive entry")
        elif np.any(values <= 0):
            raise ValueError(f"non-positive weight in table {values.tolist()}")

    @property
    def q(self) -> int:
        q = int(round(len(self.values) ** (1.0 / self.arity)))
        # guard against rounding of the k-th root
        for cand in (q - 1, q, q + 1):
            if cand >= 1 and cand ** self.arity == len(self.values):
                return cand
        raise ValueError(f"Table of length {len(self.values)} is not q^{self.arity} for an integer q")

    @property
    def tensor(self) -> np.ndarray:
        """The table reshaped to (q,) * arity."""
        return self.values.reshape((self.q,) * self.arity)

    @classmethod
    def indicator(cls, q: int, value: int) -> "WeightTable":
        """Unary 0/1 indicator of a single spin, the hard pin table."""
        if not 0 <= value < q:
            raise ValueError(f"Pinned value {value} outside the spin domain 0..{q - 1}")
        values = np.zeros(q)
        values[value] = 1.0
        return cls(arity=1, values=values, hard=True)

    def __repr__(self):
        return f"WeightTable(arity={self.arity}, hard={self.hard}, values={self.values.tolist()})"


@dataclass(frozen=True)
class Constraint:
    neighbors: Tuple[int, ...]
    weight: WeightTable

    @property
    def variables(self) -> Tuple[int, ...]:
        """Distinct neighbours in order of first appearance."""
        return tuple(dict.fromkeys(self.neighbors))

    def distinct_tensor(self) -> np.ndarray:
        """
        The weight function as a tensor over the distinct neighbours.

        Repeated neighbours collapse to the generalized diagonal of the table.
        """
        variables = self.variables
        labels = [variables.index(x) for x in self.neighbors]
        return np.einsum(self.weight.tensor, labels, list(range(len(variables))))


@dataclass(frozen=True)
class HardPin:
    variable: int
    value: int


class FactorGraph:
    """An immutable Omega-factor graph G = (V, F, (da), (psi_a))."""

    def __init__(self, n: int, omega: SpinDomain, constraints: Sequence[Constraint]):
        if n < 1:
            raise ValueError(f"A factor graph needs at least one variable, got n={n}")
        self.n = int(n)
        self.omega = omega
        self.constraints: Tuple[Constraint, ...] = tuple(constraints)
        for a, constraint in enumerate(self.constraints):
            if len(constraint.neighbors) != constraint.weight.arity:
                raise ValueError(
                    f"arity mismatch at constraint {a}: {len(constraint.neighbors)} neighbors, "
                    f"table arity {constraint.weight.arity}")
            if constraint.weight.q != omega.size:
                raise ValueError(f"Constraint {a} has a table over q={constraint.weight.q}, graph has q={omega.size}")
            for x in constraint.neighbors:
                if not 0 <= x < self.n:
                    raise ValueError(f"index out of range: constraint {a} references variable {x} (n={self.n})")
        adjacency: List[List[int]] = [[] for _ in range(self.n)]
        for a, constraint in enumerate(self.constraints):
            for x in constraint.variables:
                adjacency[x].append(a)
        self._adjacency = tuple(tuple(cs) for cs in adjacency)
        self._incidences = tuple((x, a) for x in range(self.n) for a in self._adjacency[x])
        self._incidence_graph: Optional[nx.Graph] = None

    @property
    def q(self) -> int:
        return self.omega.size

    @property
    def m(self) -> int:
        return len(self.constraints)

    def constraints_of(self, x: int) -> Tuple[int, ...]:
        """The constraint nodes adjacent to variable x (the set dx)."""
        self._check_variable(x)
        return self._adjacency[x]

    @property
    def incidences(self) -> Tuple[Tuple[int, int], ...]:
        """All (x, a) with x in da, sorted by x then a."""
        return self._incidences

    @property
    def pins(self) -> List[HardPin]:
        pins = []
        for c in self.constraints:
            if c.weight.hard and c.weight.arity == 1:
                pins.append(HardPin(variable=c.neighbors[0], value=int(np.argmax(c.weight.values))))
        return pins

    def variable_neighbors(self, x: int) -> List[int]:
        """Variables sharing at least one constraint with x."""
        out = set()
        for a in self.constraints_of(x):
            out.update(self.constraints[a].variables)
        out.discard(x)
        return sorted(out)

    def incidence_graph(self) -> nx.Graph:
        """Bipartite incidence graph with nodes ('x', i) and ('a', j)."""
        if self._incidence_graph is None:
            graph = nx.Graph()
            graph.add_nodes_from(('x', x) for x in range(self.n))
            graph.add_nodes_from(('a', a) for a in range(self.m))
            graph.add_edges_from((('x', x), ('a', a)) for x, a in self._incidences)
            self._incidence_graph = graph
        return self._incidence_graph

    def remove_constraints(self, indices: Iterable[int]) -> "FactorGraph":
        """The graph with the given constraint nodes deleted; variables are kept."""
        drop = set(indices)
        return FactorGraph(self.n, self.omega, [c for a, c in enumerate(self.constraints) if a not in drop])

    def to_json(self) -> Dict:
        return {
            "n": self.n,
            "q": self.q,
            "constraints": [
                {"neighbors": [x + 1 for x in c.neighbors], "weights": c.weight.values.tolist()}
                for c in self.constraints
            ],
        }

    @classmethod
    def from_json(cls, data: Dict) -> "FactorGraph":
        omega = SpinDomain(int(data["q"]))
        constraints = []
        for entry in data.get("constraints", []):
            neighbors = tuple(int(x) - 1 for x in entry["neighbors"])
            weights = np.asarray(entry["weights"], dtype=np.float64)
            hard = len(neighbors) == 1 and bool(np.any(weights == 0))
            constraints.append(Constraint(neighbors, WeightTable(len(neighbors), weights, hard=hard)))
        return build_graph(int(data["n"]), omega, constraints)

    def save(self, path: str):
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(self.to_json(), f)

    @classmethod
    def load(cls, path: str) -> "FactorGraph":
        with open(path, 'r', encoding='utf-8') as f:
            return cls.from_json(json.load(f))

    def _check_variable(self, x: int):
        if not 0 <= x < self.n:
            raise ValueError(f"Variable {x} out of range for n={self.n}")

    def __repr__(self):
        return f"FactorGraph(n={self.n}, q={self.q}, m={self.m})"


def build_graph(n: int, omega: SpinDomain, constraints: Sequence) -> FactorGraph:
    """
    Validate and build a factor graph.

    Constraints are `Constraint` objects or (neighbors, WeightTable) pairs.
    """
    parsed = []
    for c in constraints:
        if not isinstance(c, Constraint):
            neighbors, weight = c
            c = Constraint(tuple(int(x) for x in neighbors), weight)
        parsed.append(c)
    graph = FactorGraph(n, omega, parsed)
    logger.debug(f"Built {graph}")
    return graph


def induced_subgraph(graph: FactorGraph, variables: Iterable[int]) -> Tuple[FactorGraph, Tuple[int, ...]]:
    """
    G[U]: the variables U and exactly the constraints a with da inside U.

    Returns the subgraph and its index map; local variable i is parent variable index_map[i].
    """
    index_map = tuple(sorted(set(variables)))
    if not index_map:
        raise ValueError("Induced subgraph needs a non-empty variable set")
    for x in index_map:
        graph._check_variable(x)
    local = {x: i for i, x in enumerate(index_map)}
    constraints = [
        Constraint(tuple(local[x] for x in c.neighbors), c.weight)
        for c in graph.constraints
        if all(x in local for x in c.neighbors)
    ]
    return FactorGraph(len(index_map), graph.omega, constraints), index_map


def variable_distances(graph: FactorGraph, u: int) -> Dict[int, int]:
    """Variable-to-variable distances from u: incidence-graph distance divided by 2."""
    graph._check_variable(u)
    lengths = nx.single_source_shortest_path_length(graph.incidence_graph(), ('x', u))
    return {node[1]: d // 2 for node, d in lengths.items() if node[0] == 'x'}


def neighborhood(graph: FactorGraph, u: int, r: int) -> Tuple[int, ...]:
    """The depth-r neighbourhood of u, sorted."""
    if r < 0:
        raise ValueError(f"Neighborhood radius must be >= 0, got {r}")
    return tuple(sorted(x for x, d in variable_distances(graph, u).items() if d <= r))


def is_acyclic(graph: FactorGraph) -> bool:
    """Whether the bipartite incidence graph is a forest."""
    return nx.is_forest(graph.incidence_graph())


def connected_components(graph: FactorGraph, variables: Optional[Iterable[int]] = None) -> int:
    """Number of connected components of G[U] (all of G when U is None)."""
    if variables is None:
        sub = graph
    else:
        sub, _ = induced_subgraph(graph, variables)
    # every constraint node touches a variable, so components of the incidence graph are variable components
    return nx.number_connected_components(sub.incidence_graph())


def pin_graph(graph: FactorGraph, pinned: Sequence[int], sigma: Sequence[int]) -> FactorGraph:
    """G^{I,sigma}: G plus one unary hard indicator constraint per pinned variable."""
    pinned = list(pinned)
    sigma = list(sigma)
    if len(pinned) != len(sigma):
        raise ValueError(f"Pinned set and spins differ in length: {len(pinned)} != {len(sigma)}")
    if len(set(pinned)) != len(pinned):
        raise ValueError(f"Pinned variables must be distinct, got {pinned}")
    if not pinned:
        return graph
    pins = []
    for x, value in zip(pinned, sigma):
        graph._check_variable(x)
        pins.append(Constraint((int(x),), WeightTable.indicator(graph.q, int(value))))
    return FactorGraph(graph.n, graph.omega, list(graph.constraints) + pins)
