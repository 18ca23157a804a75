# -*- coding: utf-8 -*-
"""
@description: epsilon-symmetry scores, the random pinning procedure and the
subcube state decomposition it induces, and mixture-of-products checks.

Pinning draws Theta uniformly from 1..theta_max, a uniform subset I of Theta
variables and sigma ~ mu_I. The decomposition covers every sigma in Omega^I;
states of zero mass keep the uniform conditional but carry weight 0.
"""

import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from cut_metric import CutResult, cut_distance, mixture, product_of_marginals, tv_distance
from gibbs import DenseMeasure, SubcubeEvent, condition_subcube, event_mask, marginal
from random_models import substream

__all__ = [
    'DEFAULT_THETA_EXPONENT',
    'symmetry_score',
    'theta_max',
    'PinningPlan',
    'SubcubeState',
    'StateDecomposition',
    'PinningResult',
    'decompose',
    'sample_plan',
    'run_pinning',
    'mixture_check',
    'retain_states',
]

DEFAULT_THETA_EXPONENT = 10

# substream purposes
_STREAM_THETA = 0
_STREAM_SUBSET = 1
_STREAM_SIGMA = 2


def _pair_tv(mu: DenseMeasure, singles: List[np.ndarray], i: int, j: int) -> float:
    joint = marginal(mu, [i, j]).probs
    return tv_distance(joint, np.outer(singles[i], singles[j]).reshape(-1))


def symmetry_score(mu: DenseMeasure, order: int = 2) -> float:
    """
    order 2: (1/n^2) sum over ordered pairs i != j of TV(mu_ij, mu_i x mu_j).
    order k: n^-k sum over i_1 < ... < i_k of TV(mu_{i_1..i_k}, product of the singles).
    """
    if order < 2:
        raise ValueError(f"Symmetry order must be >= 2, got {order}")
    if mu.n < order:
        raise ValueError(f"Symmetry score of order {order} needs n >= {order}, got n={mu.n}")
    singles = [marginal(mu, [i]).probs for i in range(mu.n)]
    if order == 2:
        total = sum(_pair_tv(mu, singles, i, j) for i, j in itertools.combinations(range(mu.n), 2))
        return 2.0 * total / mu.n ** 2
    total = 0.0
    for subset in itertools.combinations(range(mu.n), order):
        product = np.ones(1)
        for i in subset:
            product = np.multiply.outer(product, singles[i]).reshape(-1)
        total += tv_distance(marginal(mu, subset).probs, product)
    return total / mu.n ** order


def theta_max(epsilon: float, q: int, c: float = DEFAULT_THETA_EXPONENT, n: Optional[int] = None) -> int:
    """ceil(min(2 eps^-4 ln q, (2 ln q / eps)^c)), clipped to n when given."""
    if not 0 < epsilon < 0.5:
        raise ValueError(f"epsilon must lie in (0, 1/2), got {epsilon}")
    log_q = math.log(q)
    first = 2.0 * epsilon ** -4 * log_q
    # the power overflows floats for small epsilon; the first bound is then the minimum
    try:
        second = (2.0 * log_q / epsilon) ** c
    except OverflowError:
        second = math.inf
    bound = max(1, math.ceil(min(first, second)))
    return bound if n is None else min(bound, n)


@dataclass(frozen=True)
class PinningPlan:
    epsilon: float
    theta_max: int
    theta: int
    I: Tuple[int, ...]
    sigma: Tuple[int, ...]

    def __post_init__(self):
        if not 0 < self.epsilon < 0.5:
            raise ValueError(f"epsilon must lie in (0, 1/2), got {self.epsilon}")
        if not 1 <= self.theta <= self.theta_max:
            raise ValueError(f"theta must lie in 1..{self.theta_max}, got {self.theta}")
        if len(self.I) != self.theta or len(set(self.I)) != self.theta:
            raise ValueError(f"Pinned set must hold theta={self.theta} distinct variables, got {self.I}")
        if len(self.sigma) != len(self.I):
            raise ValueError("Pinned spins and pinned set differ in length")

    def to_json(self) -> Dict:
        return {"theta": self.theta, "I": list(self.I), "sigma": list(self.sigma)}


@dataclass(eq=False)
class SubcubeState:
    sigma: Tuple[int, ...]
    mass: float
    conditional: DenseMeasure
    product: DenseMeasure

    @property
    def is_product(self) -> bool:
        return tv_distance(self.conditional, self.product) < 1e-14


@dataclass(eq=False)
class StateDecomposition:
    I: Tuple[int, ...]
    states: List[SubcubeState]

    def __post_init__(self):
        total = sum(s.mass for s in self.states)
        if abs(total - 1.0) > 1e-10:
            raise ValueError(f"State masses sum to {total}, expected 1")

    def state(self, sigma: Sequence[int]) -> SubcubeState:
        sigma = tuple(int(s) for s in sigma)
        for state in self.states:
            if state.sigma == sigma:
                return state
        raise ValueError(f"No state with spins {sigma} on {self.I}")

    def recompose(self) -> DenseMeasure:
        """sum_sigma mu(S^{I,sigma}) mu^{I,sigma}, which must give back mu."""
        live = [s for s in self.states if s.mass > 0]
        return mixture(_normalized([s.mass for s in live]), [s.conditional for s in live])

    def product_mixture(self) -> DenseMeasure:
        """bar mu^I = sum_sigma mu(S^{I,sigma}) bar mu^{I,sigma}."""
        live = [s for s in self.states if s.mass > 0]
        return mixture(_normalized([s.mass for s in live]), [s.product for s in live])


def _normalized(weights: Sequence[float]) -> np.ndarray:
    weights = np.asarray(weights, dtype=np.float64)
    return weights / weights.sum()


def decompose(mu: DenseMeasure, I: Sequence[int]) -> StateDecomposition:
    """Split mu along every spin assignment of I."""
    I = tuple(sorted(int(i) for i in I))
    states = []
    for sigma in itertools.product(range(mu.q), repeat=len(I)):
        event = SubcubeEvent(I, sigma)
        mass = mu.mass(event)
        conditional = condition_subcube(mu, event)
        states.append(SubcubeState(sigma=tuple(event.sigma), mass=mass, conditional=conditional,
                                   product=product_of_marginals(conditional)))
    return StateDecomposition(I=I, states=states)


def sample_plan(mu: DenseMeasure, epsilon: float, seed: int, theta: Optional[int] = None,
                c: float = DEFAULT_THETA_EXPONENT) -> PinningPlan:
    """Draw Theta, I and Sigma from independent substreams of seed."""
    bound = theta_max(epsilon, mu.q, c, mu.n)
    if theta is None:
        theta = int(substream(seed, _STREAM_THETA).integers(1, bound + 1))
    elif not 1 <= theta <= mu.n:
        raise ValueError(f"theta must lie in 1..{mu.n}, got {theta}")
    else:
        bound = max(bound, theta)
    I = tuple(sorted(int(i) for i in substream(seed, _STREAM_SUBSET).choice(mu.n, size=theta, replace=False)))
    cdf = np.cumsum(marginal(mu, I).probs)
    index = min(int(np.searchsorted(cdf, substream(seed, _STREAM_SIGMA).random() * cdf[-1], side='right')),
                len(cdf) - 1)
    sigma = tuple(int(s) for s in np.unravel_index(index, (mu.q,) * theta))
    return PinningPlan(epsilon=epsilon, theta_max=bound, theta=theta, I=I, sigma=sigma)


@dataclass
class PinningResult:
    plan: PinningPlan
    decomposition: StateDecomposition
    mixture: DenseMeasure
    state_cutm: List[Optional[CutResult]]
    mixture_cutm: CutResult
    report: Dict = field(default_factory=dict)


def _state_cutm(state: SubcubeState, mode: str) -> CutResult:
    if state.is_product:
        return CutResult(value=0.0, mode=mode, witness=None)
    return cut_distance(state.conditional, state.product, mode=mode, fallback=True)


def _mode_label(result: CutResult) -> str:
    return "upper" if result.fallback else result.mode


def run_pinning(mu: DenseMeasure, epsilon: float, seed: int, mode: str = "upper",
                theta: Optional[int] = None, c: float = DEFAULT_THETA_EXPONENT) -> PinningResult:
    """
    One pinning draw with its full decomposition and report.

    Zero-mass states are reported with their (product) uniform conditional and
    do not enter the weighted average.
    """
    if mode not in ("exact", "upper"):
        raise ValueError(f"Pinning reports use exact or upper mode, got {mode}")
    plan = sample_plan(mu, epsilon, seed, theta=theta, c=c)
    decomposition = decompose(mu, plan.I)
    logger.debug(f"Pinning seed {seed}: theta={plan.theta}, I={plan.I}, sigma={plan.sigma}")

    per_state, results = [], []
    average = 0.0
    for state in decomposition.states:
        result = _state_cutm(state, mode) if state.mass > 0 else CutResult(0.0, mode, None)
        results.append(result)
        average += state.mass * result.value
        per_state.append({
            "sigma": list(state.sigma),
            "mass": state.mass,
            "cutm_mode": _mode_label(result),
            "cutm_value": result.value,
            "symmetry2": 0.0 if mu.n < 2 or state.is_product else symmetry_score(state.conditional),
        })
    bar_mu = decomposition.product_mixture()
    mixture_result = cut_distance(mu, bar_mu, mode=mode, fallback=True)
    sampled = results[[s.sigma for s in decomposition.states].index(plan.sigma)]
    report = {
        "theta": plan.theta,
        "I": list(plan.I),
        "sigma": list(plan.sigma),
        "per_state": per_state,
        "sampled_cutm": sampled.value,
        "sampled_cutm_mode": _mode_label(sampled),
        "mixture_cutm": mixture_result.value,
        "mixture_cutm_mode": _mode_label(mixture_result),
        "avg_state_cutm": average,
    }
    return PinningResult(plan=plan, decomposition=decomposition, mixture=bar_mu, state_cutm=results,
                         mixture_cutm=mixture_result, report=report)


def mixture_check(mu: DenseMeasure, partition: Sequence, epsilon: float, mode: str = "exact") -> Dict:
    """
    Compare mu with the mixture of the product measures of its parts.

    Parts are EventSet or SubcubeEvent objects; they must be disjoint and
    carry positive mass but need not cover the cube.
    """
    if not partition:
        raise ValueError("Mixture check needs at least one part")
    seen = np.zeros(mu.q ** mu.n, dtype=bool)
    masses, products, scores = [], [], []
    for h, part in enumerate(partition):
        mask = event_mask(part, mu.n, mu.q)
        if np.any(seen & mask):
            raise ValueError(f"Partition parts overlap at part {h}")
        seen |= mask
        mass = float(mu.probs[mask].sum())
        if mass <= 0:
            raise ValueError(f"Partition part {h} has zero mass")
        conditional = condition_subcube(mu, part)
        masses.append(mass)
        products.append(product_of_marginals(conditional))
        scores.append(symmetry_score(conditional) if mu.n >= 2 else 0.0)
    z = float(sum(masses))
    mixed = mixture(_normalized(masses), products)
    result = cut_distance(mu, mixed, mode=mode, fallback=True)
    score_bound = (epsilon / 9.0) ** 3
    return {
        "z": z,
        "part_masses": masses,
        "part_symmetry2": scores,
        "mixture_cutm": result.value,
        "cutm_mode": _mode_label(result),
        "scores_within_bound": all(s <= score_bound for s in scores),
        "cutm_within_bound": result.value <= 2.0 * epsilon,
    }


def retain_states(decomposition: StateDecomposition, epsilon: float, max_states: int,
                  mass_floor: Optional[float] = None) -> Tuple[List[SubcubeState], float]:
    """
    Keep states in decreasing mass order until 1 - epsilon is covered or
    max_states are kept; states below the floor (default epsilon / 2^Theta) never count.
    """
    if max_states < 1:
        raise ValueError(f"max_states must be positive, got {max_states}")
    floor = epsilon / 2 ** len(decomposition.I) if mass_floor is None else mass_floor
    ranked = sorted((s for s in decomposition.states if s.mass > 0 and s.mass >= floor),
                    key=lambda s: (-s.mass, s.sigma))
    kept, covered = [], 0.0
    for state in ranked:
        if covered >= 1.0 - epsilon or len(kept) >= max_states:
            break
        kept.append(state)
        covered += state.mass
    return kept, covered
