# -*- coding: utf-8 -*-
"""
@description: The message space M(G) of a factor graph and its metric.

A MessageSet holds, for every incidence (x, a) with x in da, the two
distributions nu_{x->a} and nu_{a->x} on the spin domain. Rows of the two
arrays follow `graph.incidences`.
"""

import json
from typing import Dict, List

import numpy as np

from factor_graph import FactorGraph

__all__ = ['MessageSet', 'message_metric']


class MessageSet:
    def __init__(self, graph: FactorGraph, var_to_factor: np.ndarray, factor_to_var: np.ndarray):
        shape = (len(graph.incidences), graph.q)
        var_to_factor = np.asarray(var_to_factor, dtype=np.float64).reshape(shape)
        factor_to_var = np.asarray(factor_to_var, dtype=np.float64).reshape(shape)
        for name, table in (('x->a', var_to_factor), ('a->x', factor_to_var)):
            if np.any(table < 0):
                raise ValueError(f"Negative entry in {name} messages")
            if len(table) and not np.allclose(table.sum(axis=1), 1.0, atol=1e-12):
                raise ValueError(f"Unnormalized {name} messages")
        self.graph = graph
        self.var_to_factor = var_to_factor
        self.factor_to_var = factor_to_var
        self._row = {inc: i for i, inc in enumerate(graph.incidences)}

    @classmethod
    def uniform(cls, graph: FactorGraph) -> "MessageSet":
        table = np.full((len(graph.incidences), graph.q), 1.0 / graph.q)
        return cls(graph, table, table.copy())

    @classmethod
    def random(cls, graph: FactorGraph, seed: int) -> "MessageSet":
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
        shape = (len(graph.incidences), graph.q)
        tables = [rng.dirichlet(np.ones(graph.q), size=shape[0]) if shape[0] else np.zeros(shape) for _ in range(2)]
        return cls(graph, tables[0], tables[1])

    def row(self, x: int, a: int) -> int:
        try:
            return self._row[(x, a)]
        except KeyError:
            raise ValueError(f"Variable {x} is not adjacent to constraint {a}") from None

    def x_to_a(self, x: int, a: int) -> np.ndarray:
        return self.var_to_factor[self.row(x, a)]

    def a_to_x(self, a: int, x: int) -> np.ndarray:
        return self.factor_to_var[self.row(x, a)]

    def to_json(self) -> List[Dict]:
        """Message dump: one record per directed message."""
        records = []
        for i, (x, a) in enumerate(self.graph.incidences):
            records.append({"x": x, "a": a, "dir": "xa", "dist": self.var_to_factor[i].tolist()})
            records.append({"x": x, "a": a, "dir": "ax", "dist": self.factor_to_var[i].tolist()})
        return records

    @classmethod
    def from_json(cls, graph: FactorGraph, records: List[Dict]) -> "MessageSet":
        shape = (len(graph.incidences), graph.q)
        var_to_factor, factor_to_var = np.zeros(shape), np.zeros(shape)
        rows = {inc: i for i, inc in enumerate(graph.incidences)}
        for rec in records:
            target = var_to_factor if rec["dir"] == "xa" else factor_to_var
            target[rows[(rec["x"], rec["a"])]] = rec["dist"]
        return cls(graph, var_to_factor, factor_to_var)

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    def __len__(self):
        return len(self.graph.incidences)


def message_metric(nu: MessageSet, other: MessageSet) -> float:
    """D1(nu, nu') = (1/|V|) sum over incidences of the two directed TV distances."""
    if nu.graph.n != other.graph.n or nu.graph.incidences != other.graph.incidences:
        raise ValueError("graph mismatch: message sets live on different factor graphs")
    tv = 0.5 * (np.abs(nu.var_to_factor - other.var_to_factor).sum()
                + np.abs(nu.factor_to_var - other.factor_to_var).sum())
    return float(tv) / nu.graph.n
