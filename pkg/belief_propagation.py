# -*- coding: utf-8 -*-
"""
@description: The Belief Propagation operator on the message space of a factor
graph, damped fixed-point iteration, and residuals of the canonical messages.

Updates are synchronous: every new message is computed from the previous
iterate only.
"""

import math
from typing import List, NamedTuple, Optional

import numpy as np
from loguru import logger
from tqdm import tqdm

from cavities import check_potts, edge_multiplicity
from factor_graph import FactorGraph
from gibbs import DEFAULT_BUDGET, ConditionalGibbs, Event, ZeroNormalizerError
from messages import MessageSet, message_metric

__all__ = [
    'BPRun',
    'bp_step',
    'bp_iterate',
    'canonical_residual',
    'potts_bp_residual',
]


def _rows_by_variable(graph: FactorGraph) -> List[List[int]]:
    rows: List[List[int]] = [[] for _ in range(graph.n)]
    for row, (x, _) in enumerate(graph.incidences):
        rows[x].append(row)
    return rows


def _normalized(vector: np.ndarray, where: str) -> np.ndarray:
    total = vector.sum()
    if not total > 0:
        raise ZeroNormalizerError(f"Zero normalizer in the BP update {where}")
    return vector / total


def bp_step(graph: FactorGraph, nu: MessageSet) -> MessageSet:
    """
    hat nu_{x->a}(s) ~ prod_{b in dx \\ a} nu_{b->x}(s)
    hat nu_{a->x}(s) ~ sum_{tau: tau_x = s} psi_a(tau) prod_{y in da \\ x} nu_{y->a}(tau_y)
    """
    if nu.graph.incidences != graph.incidences:
        raise ValueError("graph mismatch: messages do not belong to this factor graph")
    q = graph.q
    shape = (len(graph.incidences), q)
    var_to_factor, factor_to_var = np.zeros(shape), np.zeros(shape)
    by_variable = _rows_by_variable(graph)
    for row, (x, a) in enumerate(graph.incidences):
        incoming = np.ones(q)
        for other in by_variable[x]:
            if other != row:
                incoming = incoming * nu.factor_to_var[other]
        var_to_factor[row] = _normalized(incoming, f"{x}->{a}")

        constraint = graph.constraints[a]
        variables = constraint.variables
        operands = [constraint.distinct_tensor(), list(range(len(variables)))]
        for j, y in enumerate(variables):
            if y != x:
                operands += [nu.x_to_a(y, a), [j]]
        summed = np.einsum(*operands, [variables.index(x)])
        factor_to_var[row] = _normalized(summed, f"{a}->{x}")
    return MessageSet(graph, var_to_factor, factor_to_var)


class BPRun(NamedTuple):
    messages: MessageSet
    residual: float
    iters: int


def _damped(new: np.ndarray, old: np.ndarray, damping: float) -> np.ndarray:
    mixed = (1.0 - damping) * new + damping * old
    if not len(mixed):
        return mixed
    return mixed / mixed.sum(axis=1, keepdims=True)


def bp_iterate(graph: FactorGraph, nu0: Optional[MessageSet] = None, damping: float = 0.0,
               max_iters: int = 1000, tol: float = 1e-10, progress: bool = False) -> BPRun:
    """
    nu <- (1 - damping) BP(nu) + damping nu until D1(nu, BP(nu)) < tol.

    Returns the last iterate, its residual and the number of updates applied.
    """
    if not 0 <= damping < 1:
        raise ValueError(f"damping must lie in [0, 1), got {damping}")
    nu = nu0 if nu0 is not None else MessageSet.uniform(graph)
    residual = math.inf
    for it in tqdm(range(max_iters + 1), desc="BP", disable=not progress):
        new = bp_step(graph, nu)
        residual = message_metric(nu, new)
        if residual < tol:
            logger.debug(f"BP converged after {it} iterations, residual {residual:.3e}")
            return BPRun(nu, residual, it)
        if it == max_iters:
            break
        nu = MessageSet(graph, _damped(new.var_to_factor, nu.var_to_factor, damping),
                        _damped(new.factor_to_var, nu.factor_to_var, damping))
    logger.warning(f"BP did not reach tol={tol} in {max_iters} iterations, residual {residual:.3e}")
    return BPRun(nu, residual, max_iters)


def potts_bp_residual(graph: FactorGraph, beta: float, event: Event = None, budget: int = DEFAULT_BUDGET,
                      oracle: Optional[ConditionalGibbs] = None) -> float:
    """
    (1/n) sum over ordered adjacent pairs (v, w) of
    sum_omega |mu_{v->w}[omega|S] - prod_{u in dv \\ w} f_u(omega) / sum_s prod_{u in dv \\ w} f_u(s)|,
    f_u(omega) = 1 - (1 - e^-(c beta)) mu_{u->v}[omega|S], c the number of parallel edges on {u, v}.
    """
    check_potts(graph, beta)
    oracle = oracle or ConditionalGibbs(graph, event, budget)
    multiplicity = edge_multiplicity(graph)
    total = 0.0
    for v in range(graph.n):
        around = graph.variable_neighbors(v)
        incoming = {}
        for u in around:
            damp = 1.0 - math.exp(-beta * multiplicity[tuple(sorted((u, v)))])
            incoming[u] = 1.0 - damp * oracle.edge_message(v, u)
        for w in around:
            update = np.ones(graph.q)
            for u in around:
                if u != w:
                    update = update * incoming[u]
            total += float(np.abs(oracle.edge_message(w, v) - update / update.sum()).sum())
    return total / graph.n


def canonical_residual(graph: FactorGraph, event: Event = None, mode: str = "factor",
                       beta: Optional[float] = None, budget: int = DEFAULT_BUDGET) -> float:
    """
    D1(nu, BP(nu)) for the standard messages given S (mode "factor"),
    or the Potts edge-message residual (mode "potts", needs beta).
    """
    if mode == "potts":
        if beta is None:
            raise ValueError("Potts residual needs beta")
        return potts_bp_residual(graph, beta, event, budget)
    if mode != "factor":
        raise ValueError(f"Unknown residual mode {mode}, expected factor or potts")
    nu = ConditionalGibbs(graph, event, budget).messages
    return message_metric(nu, bp_step(graph, nu))
