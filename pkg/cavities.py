# -*- coding: utf-8 -*-
"""
@description: Cavities of a factor graph, the Bethe local measure on a cavity,
the Bethe-state deviation and the Potts neighbourhood variant.

A cavity is a variable set U with
    CAV1  G[U] acyclic
    CAV2  every constraint a with da not inside U has |da & U| <= 1
    CAV3  distinct constraints touching U share no variable outside U.
The internal measure of G[U] is restricted to the projection of the event S
onto U, so a subcube S acts on U exactly like hard pins.
"""

import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from tqdm import tqdm

from cut_metric import tv_distance
from factor_graph import FactorGraph, connected_components, induced_subgraph, is_acyclic, neighborhood
from gibbs import DEFAULT_BUDGET, ConditionalGibbs, DenseMeasure, Event, ZeroNormalizerError, event_mask, log_weights
from random_models import substream

__all__ = [
    'DEFAULT_CAVITY_LIMIT',
    'CavitySpec',
    'CavityList',
    'BetheDeviation',
    'is_cavity',
    'make_cavity',
    'enumerate_cavities',
    'bethe_local_measure',
    'bethe_deviation',
    'is_bethe_state',
    'factorization_check',
    'check_potts',
    'edge_multiplicity',
    'potts_bethe_suite',
]

DEFAULT_CAVITY_LIMIT = 1000
# rejection draws per requested sample
_SAMPLE_TRIES = 100


@dataclass(frozen=True)
class CavitySpec:
    U: Tuple[int, ...]
    # constraints with neighbours both inside and outside U
    boundary: Tuple[int, ...]
    # boundary constraint -> its unique neighbour in U
    anchors: Dict[int, int]
    components: int
    # variables outside U adjacent to the boundary
    Y: Tuple[int, ...]

    def to_json(self) -> Dict:
        return {"U": list(self.U), "components": self.components}


class CavityList(NamedTuple):
    cavities: List[CavitySpec]
    sampled: bool


def _boundary(graph: FactorGraph, U: set) -> List[int]:
    return [a for a, c in enumerate(graph.constraints)
            if any(x in U for x in c.variables) and any(x not in U for x in c.variables)]


def is_cavity(graph: FactorGraph, U: Sequence[int]) -> Optional[str]:
    """None for a cavity, else the name of the first violated condition."""
    inside = set(U)
    if not inside:
        raise ValueError("Cavity needs a non-empty variable set")
    sub, _ = induced_subgraph(graph, inside)
    if not is_acyclic(sub):
        return "CAV1"
    boundary = _boundary(graph, inside)
    for a in boundary:
        if sum(x in inside for x in graph.constraints[a].variables) > 1:
            return "CAV2"
    outside = [set(graph.constraints[a].variables) - inside for a in boundary]
    for i, j in itertools.combinations(range(len(boundary)), 2):
        if outside[i] & outside[j]:
            return "CAV3"
    return None


def make_cavity(graph: FactorGraph, U: Sequence[int]) -> CavitySpec:
    failed = is_cavity(graph, U)
    if failed is not None:
        raise ValueError(f"{sorted(set(U))} is not a cavity: violates {failed}")
    inside = set(U)
    boundary = _boundary(graph, inside)
    anchors = {a: next(x for x in graph.constraints[a].variables if x in inside) for a in boundary}
    Y = sorted({x for a in boundary for x in graph.constraints[a].variables if x not in inside})
    return CavitySpec(U=tuple(sorted(inside)), boundary=tuple(boundary), anchors=anchors,
                      components=connected_components(graph, inside), Y=tuple(Y))


def _check_sizes(graph: FactorGraph, l: int, r: int):
    if not 1 <= r <= l <= graph.n:
        raise ValueError(f"Cavity sizes need 1 <= r <= l <= n, got l={l}, r={r}, n={graph.n}")


def _depth_first(graph: FactorGraph, l: int, r: int, limit: int) -> Optional[List[CavitySpec]]:
    """All cavities in lexicographic order, or None once more than limit are found."""
    found: List[CavitySpec] = []

    def extend(chosen: List[int], start: int) -> bool:
        if chosen:
            sub, _ = induced_subgraph(graph, chosen)
            # CAV1 is inherited by supersets
            if not is_acyclic(sub):
                return True
        if len(chosen) == l:
            if is_cavity(graph, chosen) is None:
                cavity = make_cavity(graph, chosen)
                if cavity.components == r:
                    found.append(cavity)
            return len(found) <= limit
        for x in range(start, graph.n - (l - len(chosen)) + 1):
            if not extend(chosen + [x], x + 1):
                return False
        return True

    return found if extend([], 0) else None


def _sample(graph: FactorGraph, l: int, r: int, limit: int, seed: int) -> List[CavitySpec]:
    rng = substream(seed, 0)
    found = []
    for _ in range(_SAMPLE_TRIES * limit):
        U = sorted(int(x) for x in rng.choice(graph.n, size=l, replace=False))
        if is_cavity(graph, U) is None:
            cavity = make_cavity(graph, U)
            if cavity.components == r:
                found.append(cavity)
                if len(found) == limit:
                    break
    return found


def enumerate_cavities(graph: FactorGraph, l: int, r: int, limit: int = DEFAULT_CAVITY_LIMIT,
                       seed: int = 0) -> CavityList:
    """
    C(G, l, r): cavities of size l whose G[U] has r components.

    Exhaustive when at most `limit` exist, otherwise `limit` uniform draws
    (with replacement) by rejection from random l-subsets, flagged as sampled.
    """
    _check_sizes(graph, l, r)
    if limit < 1:
        raise ValueError(f"Cavity limit must be positive, got {limit}")
    exact = _depth_first(graph, l, r, limit)
    if exact is not None:
        return CavityList(exact, False)
    logger.info(f"More than {limit} cavities with l={l}, r={r}; sampling")
    return CavityList(_sample(graph, l, r, limit, seed), True)


def _projected_log_weights(graph: FactorGraph, U: Tuple[int, ...], event: Event, budget: int) -> np.ndarray:
    """log psi_{G[U]} over Omega^U, -inf outside the projection of S onto U."""
    sub, _ = induced_subgraph(graph, U)
    lw = log_weights(sub, budget=budget)
    if event is not None:
        mask = event_mask(event, graph.n, graph.q).reshape((graph.q,) * graph.n)
        others = tuple(i for i in range(graph.n) if i not in set(U))
        projected = mask.any(axis=others).reshape(-1) if others else mask.reshape(-1)
        lw = np.where(projected, lw, -np.inf)
    return lw


def _normalize(lw: np.ndarray, n: int, q: int, what: str) -> DenseMeasure:
    top = lw.max()
    if not np.isfinite(top):
        raise ZeroNormalizerError(f"Zero normalizer in {what}")
    weights = np.exp(lw - top)
    return DenseMeasure(n, q, weights / weights.sum())


def bethe_local_measure(graph: FactorGraph, cavity: CavitySpec, event: Event = None,
                        oracle: Optional[ConditionalGibbs] = None, budget: int = DEFAULT_BUDGET) -> DenseMeasure:
    """
    bar mu_{G,U}[sigma|S] proportional to mu_{G[U]}(sigma) times prod over a in dU
    of mu_{G,a->x}[sigma_x|S], x the anchor of a. Variables of U in sorted order.
    """
    oracle = oracle or ConditionalGibbs(graph, event, budget)
    q, size = graph.q, len(cavity.U)
    lw = _projected_log_weights(graph, cavity.U, event, budget).reshape((q,) * size)
    with np.errstate(divide='ignore'):
        for a in cavity.boundary:
            x = cavity.anchors[a]
            shape = [1] * size
            shape[cavity.U.index(x)] = q
            lw = lw + np.log(oracle.a_to_x(a, x)).reshape(shape)
    return _normalize(lw.reshape(-1), size, q, f"Bethe measure on {cavity.U}")


@dataclass
class BetheDeviation:
    l: int
    r: int
    n_cavities: int
    sampled: bool
    # None when C(G, l, r) is empty
    deviation: Optional[float]
    per_cavity: List[Dict] = field(default_factory=list)

    def to_json(self) -> Dict:
        return {
            "l": self.l,
            "r": self.r,
            "n_cavities": self.n_cavities,
            "sampled": self.sampled,
            "deviation": self.deviation,
            "per_cavity": self.per_cavity,
        }


def bethe_deviation(graph: FactorGraph, l: int, r: int, event: Event = None, limit: int = DEFAULT_CAVITY_LIMIT,
                    seed: int = 0, oracle: Optional[ConditionalGibbs] = None,
                    budget: int = DEFAULT_BUDGET) -> BetheDeviation:
    """|C|^-1 sum over cavities U of sum_sigma |mu_U[sigma|S] - bar mu_U[sigma|S]|."""
    listing = enumerate_cavities(graph, l, r, limit, seed)
    if not listing.cavities:
        return BetheDeviation(l=l, r=r, n_cavities=0, sampled=listing.sampled, deviation=None)
    oracle = oracle or ConditionalGibbs(graph, event, budget)
    per_cavity = []
    for cavity in listing.cavities:
        truth = oracle.marginal(cavity.U).probs
        bethe = bethe_local_measure(graph, cavity, event, oracle, budget).probs
        per_cavity.append({"U": list(cavity.U), "deviation": float(np.abs(truth - bethe).sum())})
    deviation = sum(c["deviation"] for c in per_cavity) / len(per_cavity)
    return BetheDeviation(l=l, r=r, n_cavities=len(per_cavity), sampled=listing.sampled,
                          deviation=deviation, per_cavity=per_cavity)


def is_bethe_state(graph: FactorGraph, event: Event, epsilon: float, ell: int,
                   limit: int = DEFAULT_CAVITY_LIMIT, seed: int = 0,
                   budget: int = DEFAULT_BUDGET) -> Tuple[bool, List[BetheDeviation]]:
    """Check every 1 <= r <= l <= ell; an empty cavity set is vacuous."""
    oracle = ConditionalGibbs(graph, event, budget)
    results = []
    for l in range(1, min(ell, graph.n) + 1):
        for r in range(1, l + 1):
            results.append(bethe_deviation(graph, l, r, event, limit, seed, oracle, budget))
    ok = all(res.deviation is None or res.deviation <= epsilon for res in results)
    return ok, results


def factorization_check(graph: FactorGraph, cavity: CavitySpec, event: Event = None,
                        budget: int = DEFAULT_BUDGET) -> float:
    """TV between the joint law of Y in G minus dU given S and the product of its singles."""
    if not cavity.Y:
        return 0.0
    stripped = ConditionalGibbs(graph.remove_constraints(cavity.boundary), event, budget)
    joint = stripped.marginal(cavity.Y).probs
    product = np.ones(1)
    for y in cavity.Y:
        product = np.multiply.outer(product, stripped.marginal((y,)).probs).reshape(-1)
    return tv_distance(joint, product)


def check_potts(graph: FactorGraph, beta: float):
    """Raise unless every constraint carries the Potts table exp(-beta 1{s1 = s2})."""
    if not beta > 0:
        raise ValueError(f"Potts suite needs beta > 0, got {beta}")
    q = graph.q
    expected = np.where(np.eye(q, dtype=bool), math.exp(-beta), 1.0).reshape(-1)
    for a, c in enumerate(graph.constraints):
        if c.weight.arity != 2 or not np.allclose(c.weight.values, expected, rtol=0, atol=1e-12):
            raise ValueError(f"non-Potts table at constraint {a} for beta={beta}")


def edge_multiplicity(graph: FactorGraph) -> Dict[Tuple[int, int], int]:
    """Number of parallel Potts edges on each pair v < w."""
    counts: Dict[Tuple[int, int], int] = {}
    for c in graph.constraints:
        if len(c.variables) == 2:
            pair = tuple(sorted(c.variables))
            counts[pair] = counts.get(pair, 0) + 1
    return counts


def potts_bethe_suite(graph: FactorGraph, beta: float, r: int, event: Event = None,
                      budget: int = DEFAULT_BUDGET, progress: bool = False) -> Dict:
    """
    Score (a): (1/n) sum_u TV(bar mu_{u,r}[.|S], mu_{nabla_{u,r}}[.|S]) with the edge-message product
    over crossing pairs; score (b): (1/n^2) sum_{v<w} TV(mu_vw[.|S], mu_v[.|S] x mu_w[.|S]).
    """
    check_potts(graph, beta)
    if r < 0:
        raise ValueError(f"Neighborhood radius must be >= 0, got {r}")
    oracle = ConditionalGibbs(graph, event, budget)
    q, n = graph.q, graph.n
    multiplicity = edge_multiplicity(graph)

    score_a, non_cavity = 0.0, []
    for u in tqdm(range(n), desc="Potts neighbourhoods", disable=not progress):
        ball = neighborhood(graph, u, r)
        inside = set(ball)
        if is_cavity(graph, ball) is not None:
            non_cavity.append(u)
        lw = _projected_log_weights(graph, ball, event, budget).reshape((q,) * len(ball))
        # parallel edges on a crossing pair enter as one factor with weight exp(-count * beta)
        crossing = sorted((v, w) for pair in multiplicity for v, w in (pair, pair[::-1])
                          if v in inside and w not in inside)
        with np.errstate(divide='ignore'):
            for v, w in crossing:
                damp = 1.0 - math.exp(-beta * multiplicity[tuple(sorted((v, w)))])
                shape = [1] * len(ball)
                shape[ball.index(v)] = q
                lw = lw + np.log(1.0 - damp * oracle.edge_message(v, w)).reshape(shape)
        bethe = _normalize(lw.reshape(-1), len(ball), q, f"Potts neighbourhood of {u}").probs
        score_a += tv_distance(bethe, oracle.marginal(ball).probs)
    score_a /= n

    singles = [oracle.marginal((v,)).probs for v in range(n)]
    score_b = 0.0
    for v, w in itertools.combinations(range(n), 2):
        score_b += tv_distance(oracle.marginal((v, w)).probs, np.outer(singles[v], singles[w]).reshape(-1))
    score_b /= n ** 2
    return {"beta": beta, "r": r, "score_a": score_a, "score_b": score_b, "non_cavity": non_cavity}
